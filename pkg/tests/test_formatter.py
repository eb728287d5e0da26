import io
import json
import unittest
from pathlib import Path

from mpmath import mp
from rich.console import Console

from qpochmax.analysis import codec
from qpochmax.analysis.asymptotics import AsymptoticFit, GrowthEstimates
from qpochmax.analysis.predictor import CrossValidationReport, Prediction, SeedAnomaly
from qpochmax.analysis.series import ValidationReport, Violation
from qpochmax.presentation import formatter
from qpochmax.store.checkpoint import CheckpointInfo


def render(renderable) -> str:
    console = Console(file=io.StringIO(), width=200, color_system=None)
    console.print(renderable)
    return console.file.getvalue()


class TestFormatter(unittest.TestCase):
    """Unit tests for text, CSV and table rendering."""

    def test_format_half(self):
        self.assertEqual(formatter.format_half(3735), "1867.5")
        self.assertEqual(formatter.format_half(248), "124")
        self.assertEqual(formatter.format_half(-3), "-1.5")
        self.assertEqual(formatter.format_half(-1), "-0.5")

    def test_format_word(self):
        row = codec.segment_words(list("abbbcccc"))[0]
        self.assertEqual(formatter.format_word(row), "a^1 b^3 c^4")

    def test_describe_row(self):
        rows = codec.segment_words(list("abcab"))
        self.assertEqual(formatter.describe_row(rows[0], 3), "unclassified")
        self.assertEqual(formatter.describe_row(rows[1], 3), "partial")
        full = codec.row_letters(codec.row_frequency(codec.PERTURBATIONS[3][4]))
        self.assertEqual(formatter.describe_row(codec.segment_words(full + ["a"])[0], 3), "5")

    def test_encoder_report_and_rows(self):
        letters = codec.row_letters(codec.row_frequency(codec.OUTLIER_PERTURBATION))
        letters += codec.row_letters(codec.row_frequency(codec.PERTURBATIONS[1][0]))
        rows = codec.segment_words(letters + ["a"])
        report = formatter.format_encoder_report(rows, 1).splitlines()
        self.assertEqual(len(report), 3)
        self.assertIn("outlier", report[0])
        self.assertIn("[          u1]", report[1])
        self.assertIn("partial", report[2])
        csv_rows = formatter.encoder_rows(rows, 1)
        self.assertEqual(csv_rows[1][:3], ["2", "1", "1"])
        self.assertEqual(len(csv_rows[1][3].split()), 20)

    def test_prediction_row(self):
        prediction = Prediction(391, 38194, "formula", 391)
        self.assertEqual(formatter.prediction_row(prediction, None), ["391", "38194", "formula", "untested"])
        self.assertEqual(formatter.prediction_row(prediction, 38194)[3], "true")
        self.assertEqual(formatter.prediction_row(prediction, 1)[3], "false")

    def test_format_fit_is_json(self):
        with mp.workdps(30):
            fit = AsymptoticFit("ratio", (mp.mpf("1.2197"), mp.mpf(-2)), 1000, 250, 12, mp.mpf("1e-9"))
        payload = json.loads(formatter.format_fit(fit, 10))
        self.assertEqual(payload["quantity"], "ratio")
        self.assertEqual(payload["window"], {"start": 1000, "step": 250, "count": 12})
        self.assertEqual(payload["coefficients"]["a0"], "1.2197")
        self.assertEqual(set(payload), {"quantity", "window", "coefficients", "residual"})

    def test_format_growth(self):
        est = GrowthEstimates(200, mp.log(3), mp.log(3), mp.mpf(3), mp.mpf(3))
        text = formatter.format_growth(est, 8)
        self.assertIn("1.0986123", text)
        self.assertNotIn("ratio limit a0", text)

    def test_format_kotesovec(self):
        text = formatter.format_kotesovec(2, mp.mpf(4), 4)
        self.assertIn("exact       4", text)
        self.assertIn("rel. gap    0.0", text)
        self.assertNotIn("exact", formatter.format_kotesovec(2, mp.mpf(4), None))

    def test_validation_table(self):
        report = ValidationReport(first_n=1, last_n=100)
        report.violations.append(Violation(40, "even-location", "L=400, expected 410"))
        report.notes.append(Violation(33, "multiplicity", "4 maxima below n=35"))
        report.checked["even-location"] += 34
        text = render(formatter.format_validation_table(report))
        self.assertIn("even-location", text)
        self.assertIn("multiplicity (note)", text)
        self.assertIn("1 violations; checked even-location: 34", text)

    def test_validation_table_limit(self):
        report = ValidationReport(first_n=1, last_n=100)
        report.violations.extend(Violation(n, "sign", "") for n in range(10))
        self.assertIn("7 more", render(formatter.format_validation_table(report, limit=3)))

    def test_cross_validation_table(self):
        report = CrossValidationReport(checked=5, untested=1, mismatches=[(41, 300, 302, "model")])
        report.seed_anomalies.append(SeedAnomaly(1, 28709, 34409, 21745, 19351))
        text = render(formatter.format_cross_validation(report))
        self.assertIn("10872.5", text)
        self.assertIn("9675.5", text)
        self.assertIn("5 checked, 1 mismatches, 1 untested, 1 seed anomalies", text)

    def test_checkpoint_table(self):
        info = CheckpointInfo(Path("qpoch_0000040.qpnb"), 40, 411, 1234, 0xABC)
        text = render(formatter.format_checkpoint_info(info))
        self.assertIn("0000000000000abc", text)
        self.assertIn("1,234", text)


if __name__ == "__main__":
    unittest.main()
