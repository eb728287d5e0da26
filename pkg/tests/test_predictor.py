import unittest

from qpochmax.analysis import codec, predictor
from qpochmax.analysis.series import doubled_d, location_from_e
from qpochmax.common import DomainError, RecordLog, degree, half_index
from qpochmax.engine.expansion import init_identity, iterate


class TestSeeds(unittest.TestCase):
    """The seed table and its consistency with the E model."""

    def test_default_table_is_doubled(self):
        self.assertEqual(predictor.DEFAULT_SEEDS.two_d[5909], 3735)
        self.assertEqual(predictor.DEFAULT_SEEDS.two_d[391], 248)
        self.assertEqual(len(predictor.DEFAULT_SEEDS.for_class(1)), 11)
        self.assertEqual(len(predictor.DEFAULT_SEEDS.for_class(3)), 11)

    def test_check_seeds_flags_one_tabulated_value(self):
        with self.assertLogs(level="WARNING"):
            anomalies = predictor.check_seeds()
        self.assertEqual([(a.from_n, a.to_n) for a in anomalies], [(28709, 34409), (34409, 40109)])
        self.assertTrue(all(a.klass == 1 for a in anomalies))

    def test_corrected_seed_is_consistent(self):
        two_d_28709 = predictor.DEFAULT_SEEDS.two_d[28709]
        fixed = predictor.DEFAULT_SEEDS.with_value(34409, two_d_28709 + 2 * 1801)
        self.assertEqual(predictor.check_seeds(fixed), [])

    def test_with_measured_keeps_tabulated_values(self):
        seeds = predictor.DEFAULT_SEEDS.with_measured({391: 0, 209: 47})
        self.assertEqual(seeds.two_d[391], 248)
        self.assertEqual(seeds.two_d[209], 47)
        self.assertEqual(seeds.measured, frozenset({209}))


class TestPredict(unittest.TestCase):
    def test_seed_locations(self):
        self.assertEqual(predictor.predict(391), predictor.Prediction(391, 38_194, "formula", 391))
        self.assertEqual(predictor.predict(5909).location, 8_728_680)

    def test_even(self):
        self.assertEqual(predictor.predict(40), predictor.Prediction(40, half_index(40), "formula"))
        with self.assertRaises(DomainError):
            predictor.predict_even(32)
        with self.assertRaises(DomainError):
            predictor.predict_even(41)

    def test_model_step(self):
        prediction = predictor.predict(395)
        expected = (degree(395) - 248 - 2 * codec.expected_value(3, 395)) // 2
        self.assertEqual(prediction, predictor.Prediction(395, expected, "model", 391))

    def test_shifted_seed(self):
        n = 5909 + 2 * predictor.PERIOD
        prediction = predictor.predict(n)
        self.assertEqual(prediction.source, "formula")
        self.assertEqual(prediction.location, (degree(n) - 3735 - 4 * predictor.PERIOD_E_SUM) // 2)
        self.assertEqual(predictor.seed_formula(n), prediction.location)

    def test_seed_formula_needs_a_seed(self):
        self.assertIsNone(predictor.seed_formula(5911))
        self.assertIsNone(predictor.seed_formula(40))

    def test_model_and_formula_agree_across_a_period(self):
        """Walking the model from 391 over a full period lands on the shifted seed."""
        seeds = predictor.SeedTable({391: 248})
        n = 391 + predictor.PERIOD
        walked = location_from_e(n, 391, 248, codec.expected_e(3, 395, n))
        self.assertEqual(walked, predictor.seed_formula(n, seeds))
        self.assertEqual(walked, predictor.predict(n, seeds).location)

    def test_no_seed_below_n(self):
        with self.assertRaises(DomainError):
            predictor.predict(37)
        with self.assertRaises(DomainError):
            predictor.predict_odd(390)

    def test_word_starts(self):
        self.assertEqual(predictor.word_start_offsets(0, 7, 3), 39_824)
        self.assertEqual(predictor.word_start(0, 7, 3), 40_215)
        self.assertEqual(predictor.word_start(0, 3, 3), 17_491)
        self.assertEqual(predictor.word_start(0, 10, 1), 62_909)
        self.assertEqual(predictor.word_start(1, 0, 1), 5909 + predictor.PERIOD)
        for bad in ((0, 11, 1), (-1, 0, 3), (0, 0, 2)):
            with self.assertRaises(DomainError):
                predictor.word_start(*bad)

    def test_word_start_past_last_seed_uses_model(self):
        prediction = predictor.predict(62_909)
        self.assertEqual(prediction.source, "model")
        self.assertEqual(prediction.seed_n, 62_833)


class TestCrossValidate(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.log = RecordLog([r for _, r in iterate(init_identity(), 150)])

    def test_seeds_from_records(self):
        measured = predictor.seeds_from_records(self.log, at=[35, 37, 40, 500])
        self.assertEqual(measured, {35: doubled_d(self.log.get(35)), 37: doubled_d(self.log.get(37))})
        self.assertEqual(predictor.seeds_from_records(self.log), {})

    def test_cross_validate_records(self):
        seeds = predictor.DEFAULT_SEEDS.with_measured(predictor.seeds_from_records(self.log, at=[35, 37]))
        report = predictor.cross_validate(self.log, seeds)
        self.assertTrue(report.ok, report.mismatches)
        # Even n from 34 plus the two measured seeds.
        self.assertEqual(report.checked, 59 + 2)
        self.assertEqual(len(report.seed_anomalies), 2)

    def test_perturbed_seed_is_reported(self):
        seeds = predictor.SeedTable({35: doubled_d(self.log.get(35)) + 2})
        report = predictor.cross_validate(self.log, seeds)
        self.assertFalse(report.ok)
        n, predicted, recorded, source = report.mismatches[0]
        self.assertEqual((n, predicted, source), (35, self.log.get(35).first_loc - 1, "formula"))
        self.assertEqual(recorded, self.log.get(35).first_loc)


if __name__ == "__main__":
    unittest.main()
