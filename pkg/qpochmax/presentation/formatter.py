import json
from fractions import Fraction

from mpmath import mp
from rich.table import Table

from qpochmax.analysis.codec import OUTLIER, WordRow, classify_row
from qpochmax.analysis.predictor import CrossValidationReport, Prediction
from qpochmax.analysis.series import ValidationReport
from qpochmax.common import UnclassifiedRowError
from qpochmax.store.checkpoint import CheckpointInfo

PREDICTION_COLUMNS = ["n", "predicted_L", "source", "verified"]
ENCODER_COLUMNS = ["word_index", "class", "perturbation_index", "letter_counts"]


def format_real(value, digits: int = 20) -> str:
    """Renders an mpmath real with `digits` significant digits."""
    return mp.nstr(value, digits)


def format_half(two_d: int) -> str:
    """A doubled value shown halved, e.g. 3735 -> '1867.5'."""
    value = Fraction(two_d, 2)
    if value.denominator == 1:
        return str(value.numerator)
    sign = "-" if two_d < 0 else ""
    return f"{sign}{abs(two_d) // 2}.5"


def format_word(row: WordRow) -> str:
    """Run-length text of a word, e.g. 'a^1 b^3 c^4'."""
    return " ".join(f"{symbol}^{count}" for symbol, count in row.runs)


def describe_row(row: WordRow, klass: int) -> str:
    """Row index as text: '1'..'11', 'outlier', 'partial' or 'unclassified'."""
    if not row.complete:
        return "partial"
    try:
        index = classify_row(row, klass)
    except UnclassifiedRowError:
        return "unclassified"
    return OUTLIER if index == OUTLIER else str(index)


def format_encoder_report(rows: list[WordRow], klass: int) -> str:
    """One line per word: index, classification and run-length letters."""
    prefix = "u" if klass == 1 else "v"
    lines = []
    for k, row in enumerate(rows, start=1):
        label = describe_row(row, klass)
        if label.isdigit():
            label = f"{prefix}{label}"
        lines.append(f"{k:>3} [{label:>12}] {format_word(row)}")
    return "\n".join(lines)


def encoder_rows(rows: list[WordRow], klass: int) -> list[list[str]]:
    return [
        [str(k), str(klass), describe_row(row, klass), " ".join(str(c) for c in row.frequency)]
        for k, row in enumerate(rows, start=1)
    ]


def prediction_row(prediction: Prediction, recorded: int | None) -> list[str]:
    if recorded is None:
        verified = "untested"
    else:
        verified = str(prediction.location == recorded).lower()
    return [str(prediction.n), str(prediction.location), prediction.source, verified]


def format_fit(fit, digits: int = 20) -> str:
    """JSON text with the fitted quantity, sample window, coefficients and residual."""
    payload = {
        "quantity": fit.quantity,
        "window": {"start": fit.n_start, "step": fit.n_step, "count": fit.n_count},
        "coefficients": {f"a{k}": format_real(c, digits) for k, c in enumerate(fit.coefficients)},
        "residual": format_real(fit.residual, 6),
    }
    return json.dumps(payload, indent=2)


def format_growth(est, digits: int = 20) -> str:
    lines = [
        f"N                    {est.n_max}",
        f"K = ln(M_N)/N        {format_real(est.k_log, digits)}",
        f"K = ln(ratio limit)  {format_real(est.k_ratio, digits)}",
        f"M_N/M_(N-1)          {format_real(est.ratio_at_nmax, digits)}",
        f"M_N^(1/N)            {format_real(est.root_at_nmax, digits)}",
    ]
    if est.ratio_fit is not None:
        lines.append(f"ratio limit a0       {format_real(est.ratio_fit.a0, digits)}")
    return "\n".join(lines)


def format_kotesovec(n: int, estimate, exact: int | None, digits: int = 15) -> str:
    lines = [f"n           {n}", f"estimate    {format_real(estimate, digits)}"]
    if exact is not None:
        gap = abs(estimate - exact) / exact
        lines.append(f"exact       {exact}")
        lines.append(f"rel. gap    {format_real(gap, 3)}")
    return "\n".join(lines)


def format_validation_table(report: ValidationReport, limit: int = 50) -> Table:
    """Summary table of checks followed by the first `limit` violations."""
    table = Table(title=f"Validation n={report.first_n}..{report.last_n}")
    table.add_column("n", justify="right")
    table.add_column("Rule")
    table.add_column("Detail")
    for v in report.violations[:limit]:
        table.add_row(str(v.n), f"[red]{v.rule}[/]", v.detail)
    for v in report.notes[:limit]:
        table.add_row(str(v.n), f"[dim]{v.rule} (note)[/]", v.detail)
    if len(report.violations) > limit:
        table.add_row("...", f"{len(report.violations) - limit} more", "")
    checks = ", ".join(f"{rule}: {count}" for rule, count in sorted(report.checked.items()))
    table.caption = f"{len(report.violations)} violations; checked {checks or 'nothing'}"
    return table


def format_cross_validation(report: CrossValidationReport) -> Table:
    table = Table(title="Predicted vs recorded L(n)")
    table.add_column("n", justify="right")
    table.add_column("Predicted", justify="right")
    table.add_column("Recorded", justify="right")
    table.add_column("Source")
    for n, predicted, recorded, source in report.mismatches:
        table.add_row(str(n), str(predicted), str(recorded), source)
    for a in report.seed_anomalies:
        table.add_row(
            str(a.to_n),
            format_half(a.expected_two_d),
            format_half(a.tabulated_two_d),
            f"[yellow]seed D from {a.from_n}[/]",
        )
    table.caption = (
        f"{report.checked} checked, {len(report.mismatches)} mismatches, "
        f"{report.untested} untested, {len(report.seed_anomalies)} seed anomalies"
    )
    return table


def format_checkpoint_info(info: CheckpointInfo) -> Table:
    table = Table(title=str(info.path), show_header=False)
    table.add_column("Field")
    table.add_column("Value", justify="right")
    table.add_row("n", str(info.n))
    table.add_row("coefficients", str(info.count))
    table.add_row("bytes", f"{info.size:,}")
    table.add_row("crc-64", f"{info.crc:016x}")
    table.add_row("checksum", "[green]ok[/]")
    table.add_row("pentagonal prefix", "[green]ok[/]")
    return table
