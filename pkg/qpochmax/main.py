import argparse
import logging
import math
import shutil
import subprocess
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import pandas as pd
import plotext as plt
from platformdirs import PlatformDirs
from rich.console import Console
from rich.markup import escape

from qpochmax.analysis import asymptotics, codec, predictor
from qpochmax.analysis.series import (
    d_series,
    e_series,
    read_analysis,
    validate,
    write_analysis,
)
from qpochmax.common import (
    CheckpointError,
    DomainError,
    QPochError,
    RecordGapError,
    RecordLog,
    StreamStartError,
    UnknownLetterError,
)
from qpochmax.config_manager import APP_AUTHOR, APP_NAME, ConfigManager, load_default_settings
from qpochmax.engine.expansion import (
    expand_full,
    expand_to,
    init_identity,
    iterate,
    naive_expand,
    sum_of_squares,
)
from qpochmax.log_handler import ConsoleHandler
from qpochmax.parser import create_arg_parser
from qpochmax.presentation import formatter
from qpochmax.store.checkpoint import checkpoint_path, describe_checkpoint, load_checkpoint, save_checkpoint
from qpochmax.store.record_log import append_records, read_records, truncate_records, write_records

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_ERROR = 2

KOTESOVEC_TOLERANCE = 1e-6


@dataclass(frozen=True)
class RunConfig:
    """Everything `compute` needs, after flags and settings are merged."""

    target_n: int
    checkpoint_dir: Path
    checkpoint_every: int
    records_path: Path
    threads: int = 1
    resume_from: Path | None = None
    progress_every: int = 100
    prefix_check: int = 10_000

    def __post_init__(self):
        if self.threads < 1:
            raise DomainError(f"threads must be at least 1, got {self.threads}.")
        if self.checkpoint_every < 1 or self.progress_every < 1:
            raise DomainError("Checkpoint and progress cadences must be positive.")

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        return cls(
            target_n=args.target,
            checkpoint_dir=Path(args.checkpoint_dir),
            checkpoint_every=args.checkpoint_every,
            records_path=Path(args.records),
            threads=args.threads,
            resume_from=Path(args.resume_from) if args.resume_from else None,
            progress_every=args.progress_every,
            prefix_check=args.prefix_limit,
        )

    def is_checkpoint(self, n: int) -> bool:
        return n % self.checkpoint_every == 0 or n == self.target_n


def show_manual():
    """Displays the help file content using a pager like 'less' if available."""
    help_path = Path(__file__).resolve().parent / "documents" / "help.txt"
    try:
        pager = shutil.which("less")
        if pager:
            subprocess.run([pager, str(help_path)])
        else:
            with open(help_path, "r") as f:
                print(f.read())
    except FileNotFoundError:
        print(f"Error: Help file not found at {help_path}")
    except Exception as e:
        print(f"An unexpected error occurred while trying to show help: {e}")


def resolve_settings(args: argparse.Namespace, config: ConfigManager | None = None) -> argparse.Namespace:
    """Fills every option the user left unset from the settings file."""
    settings = config.settings if config is not None else load_default_settings()
    window = settings.get("fit_window", {})
    defaults = {
        "checkpoint_every": settings.get("checkpoint_every", 1000),
        "progress_every": settings.get("progress_every", 100),
        "threads": settings.get("threads", 1),
        "prefix_limit": settings.get("prefix_check_limit", 10_000),
    }
    if args.command == "fit":
        defaults.update(
            start=window.get("start", 1000),
            step=window.get("step", 250),
            terms=settings.get("fit_terms", 3),
        )
    for key, value in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, value)
    if getattr(args, "checkpoint_dir", None) is None:
        args.checkpoint_dir = config.checkpoint_dir() if config is not None else Path("checkpoints")
    if getattr(args, "precision", None) is None:
        if config is not None:
            args.precision = config.precision()
        else:
            fallback = int(settings.get("precision", asymptotics.DEFAULT_PRECISION))
            args.precision = asymptotics.resolve_precision(None, fallback)
    args.naive_cap = settings.get("naive_cap", 2000)
    args.kotesovec_max_n = settings.get("kotesovec_max_n", 64)
    args.panel_factor = settings.get("quadrature_panel_factor", 64)
    return args


def cmd_compute(cfg: RunConfig, console: Console) -> int:
    """Steps to cfg.target_n, appending one record per n and checkpointing on cadence."""
    if cfg.resume_from is not None:
        poly = load_checkpoint(cfg.resume_from, cfg.prefix_check)
        if cfg.target_n <= poly.n:
            raise DomainError(f"Target n={cfg.target_n} is not past checkpoint n={poly.n}.")
        if cfg.records_path.exists():
            log = truncate_records(cfg.records_path, poly.n)
            if log.last_n is not None and log.last_n < poly.n:
                raise RecordGapError(
                    f"Record log ends at n={log.last_n} but the checkpoint is at n={poly.n}."
                )
        else:
            logging.warning(f"Starting a new record log at n={poly.n + 1}.")
            log = RecordLog()
    else:
        poly = init_identity()
        log = RecordLog()
        write_records(cfg.records_path, log)

    first_n = poly.n + 1
    logging.info(
        f"Computing n={first_n}..{cfg.target_n} with {cfg.threads} worker process(es), "
        f"checkpoints every {cfg.checkpoint_every} in '{cfg.checkpoint_dir}'."
    )
    started = last_time = time.perf_counter()
    last_n = poly.n
    pending = []
    saved = None
    with console.status(f"[bold green]Expanding to n={cfg.target_n}...[/]") as status:
        for current, record in iterate(poly, cfg.target_n, cfg.threads, keep=cfg.is_checkpoint):
            pending.append(record)
            if record.n % cfg.progress_every == 0:
                now = time.perf_counter()
                rate = (record.n - last_n) / max(now - last_time, 1e-9)
                message = (
                    f"n={record.n}: M_n has {record.max_abs.bit_length()} bits, "
                    f"L(n)={record.first_loc}, {rate:.1f} steps/s"
                )
                logging.info(message)
                status.update(f"[bold green]{message}[/]")
                last_time, last_n = now, record.n
            if current is not None:
                append_records(log, pending, cfg.records_path)
                pending = []
                saved = save_checkpoint(current, checkpoint_path(cfg.checkpoint_dir, record.n))

    elapsed = time.perf_counter() - started
    console.print(
        f"Computed n={first_n}..{cfg.target_n} in {elapsed:.1f}s; "
        f"records in '{cfg.records_path}', last checkpoint '{saved}'."
    )
    return EXIT_OK


def cmd_verify(args: argparse.Namespace, console: Console) -> int:
    try:
        info = describe_checkpoint(args.path, args.prefix_limit)
    except CheckpointError as e:
        logging.error(f"Checkpoint '{args.path}' failed validation: {e}")
        console.print(f"[bold red]{type(e).__name__}:[/] {escape(str(e))}")
        return EXIT_VIOLATIONS
    console.print(formatter.format_checkpoint_info(info))
    return EXIT_OK


def cmd_analyze(args: argparse.Namespace, console: Console) -> int:
    records = read_records(args.records)
    report = validate(records)
    console.print(formatter.format_validation_table(report))
    if args.out:
        write_analysis(args.out, records, report)
        console.print(f"Analysis written to '{args.out}'.")
    return EXIT_OK if report.ok else EXIT_VIOLATIONS


def cmd_encode(args: argparse.Namespace, console: Console) -> int:
    codec.check_alphabet()
    klass = args.klass
    if args.analysis:
        _, e = read_analysis(args.analysis)
    else:
        e = e_series(d_series(read_records(args.records)))
    try:
        letters = codec.tokenize(e, klass, args.start)
        rows = codec.segment_words(letters)
    except (UnknownLetterError, StreamStartError) as err:
        logging.error(f"Class-{klass} stream cannot be encoded: {err}")
        console.print(f"[bold red]{type(err).__name__}:[/] {escape(str(err))}")
        return EXIT_VIOLATIONS

    console.print(formatter.format_encoder_report(rows, klass), markup=False, highlight=False)
    problems = 0
    for k, row in enumerate(rows, start=1):
        label = formatter.describe_row(row, klass)
        if label == "partial":
            continue
        if label != str(codec.expected_row_index(k, klass)):
            logging.warning(f"Class-{klass} word {k} is {label}, model expects another row.")
            problems += 1
    disagreements = codec.compare_with_model(e, klass) if args.start is None else []
    for n, measured, modelled in disagreements[:10]:
        logging.warning(f"E_{n}={measured} but the periodic model gives {modelled}.")
    console.print(
        f"{len(letters)} letters, {len(rows)} words, {problems} unexpected rows, "
        f"{len(disagreements)} E values off the model."
    )
    if args.csv:
        frame = pd.DataFrame(formatter.encoder_rows(rows, klass), columns=formatter.ENCODER_COLUMNS)
        frame.to_csv(args.csv, index=False, lineterminator="\n")
    return EXIT_OK if problems == 0 and not disagreements else EXIT_VIOLATIONS


def cmd_predict(args: argparse.Namespace, console: Console) -> int:
    codec.check_alphabet()
    records = read_records(args.records) if args.records else None
    seeds = predictor.DEFAULT_SEEDS
    if records is not None:
        seeds = seeds.with_measured(predictor.seeds_from_records(records))

    ns = list(args.ns or [])
    if args.word:
        ns.append(predictor.word_start(args.word[0], args.word[1], args.klass))
    if not ns:
        if records is None:
            raise DomainError("Give --n, --word or --records.")
        report = predictor.cross_validate(records, seeds)
        console.print(formatter.format_cross_validation(report))
        return EXIT_OK if report.ok else EXIT_VIOLATIONS

    mismatches = 0
    console.print(",".join(formatter.PREDICTION_COLUMNS), markup=False, highlight=False)
    for n in ns:
        try:
            prediction = predictor.predict(n, seeds)
        except DomainError as e:
            logging.warning(f"No prediction for n={n}: {e}")
            console.print(f"{n},,unavailable,untested", markup=False, highlight=False)
            continue
        record = records.get(n) if records is not None else None
        recorded = record.first_loc if record is not None else None
        if recorded is not None and recorded != prediction.location:
            mismatches += 1
        console.print(",".join(formatter.prediction_row(prediction, recorded)), markup=False, highlight=False)
    if any(n % 4 == 1 for n in ns):
        console.print(
            f"# class 1 uses period {predictor.PERIOD}; the tabulated "
            f"{predictor.MISPRINTED_PERIOD} is read as a misprint",
            markup=False,
            highlight=False,
        )
    return EXIT_OK if mismatches == 0 else EXIT_VIOLATIONS


def cmd_fit(args: argparse.Namespace, console: Console) -> int:
    records = read_records(args.records)
    samples = asymptotics.window_samples(
        records, args.quantity, args.start, args.step, precision=args.precision
    )
    fit = asymptotics.fit_series(samples, args.terms, args.quantity, args.precision)
    console.print(formatter.format_fit(fit, args.precision), markup=False, highlight=False)
    if args.growth:
        est = asymptotics.growth_constant(records, (args.start, args.step), args.terms, args.precision)
        console.print(formatter.format_growth(est, args.precision), markup=False, highlight=False)
    return EXIT_OK


def cmd_kotesovec(args: argparse.Namespace, console: Console) -> int:
    estimate = asymptotics.kotesovec_integral(
        args.n,
        args.subdivisions,
        max_n=args.kotesovec_max_n,
        panel_factor=args.panel_factor,
        workers=args.threads,
    )
    exact = sum_of_squares(expand_to(args.n))
    console.print(formatter.format_kotesovec(args.n, estimate, exact), markup=False, highlight=False)
    gap = abs(estimate - exact) / exact
    return EXIT_OK if gap <= KOTESOVEC_TOLERANCE else EXIT_VIOLATIONS


def cmd_plot(args: argparse.Namespace, console: Console) -> int:
    full = expand_full(expand_to(args.n))
    if args.check:
        if naive_expand(args.n, args.naive_cap) != full:
            logging.error(f"Half-storage expansion of n={args.n} differs from the schoolbook product.")
            return EXIT_VIOLATIONS
        console.print(f"n={args.n}: all {len(full.coeffs)} coefficients match the schoolbook product.")
    if args.csv:
        frame = pd.DataFrame(
            [[str(i), str(c)] for i, c in enumerate(full.coeffs)], columns=["i", "coefficient"]
        )
        frame.to_csv(args.csv, index=False, lineterminator="\n")
        console.print(f"{len(full.coeffs)} coefficients written to '{args.csv}'.")
        return EXIT_OK
    if args.log:
        ys = [math.copysign(math.log10(1 + abs(c)), c) for c in full.coeffs]
    else:
        ys = [float(c) for c in full.coeffs]
    plt.clear_figure()
    plt.plot(list(range(len(ys))), ys, marker="braille")
    plt.title(f"(q;q)_{args.n}")
    plt.xlabel("i")
    plt.ylabel("sign(a) log10(1+|a|)" if args.log else "a")
    plt.show()
    return EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "analyze": cmd_analyze,
    "encode": cmd_encode,
    "predict": cmd_predict,
    "fit": cmd_fit,
    "kotesovec": cmd_kotesovec,
    "plot": cmd_plot,
}


def execute(args: argparse.Namespace, console: Console, config: ConfigManager | None = None) -> int:
    """Runs the chosen subcommand and maps failures onto exit codes."""
    if not args.command:
        create_arg_parser().print_help()
        return EXIT_ERROR
    resolve_settings(args, config)
    try:
        if args.command == "compute":
            return cmd_compute(RunConfig.from_args(args), console)
        return COMMANDS[args.command](args, console)
    except (QPochError, OSError) as e:
        logging.error(f"'{args.command}' failed: {e}")
        console.print(f"[bold red]Error:[/] {escape(str(e))}")
        return EXIT_ERROR


def main(argv: list[str] | None = None) -> int:
    """The main entry point for the application."""
    parser = create_arg_parser()
    args = parser.parse_args(argv)

    if args.man:
        show_manual()
        return EXIT_OK

    dirs = PlatformDirs(APP_NAME, APP_AUTHOR)
    cache_dir = Path(dirs.user_cache_dir)
    cache_dir.mkdir(parents=True, exist_ok=True)
    log_file = cache_dir / "qpochmax.log"

    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s - %(levelname)s - %(module)s - %(message)s",
        filename=log_file,
        filemode="w",
    )

    app_root = Path(__file__).resolve().parent
    config = ConfigManager(app_root)
    level = str(config.get_setting("log_level", "INFO")).upper()
    logging.getLogger().setLevel(getattr(logging, level, logging.INFO))

    if not args.quiet:
        console_handler = ConsoleHandler(Console(stderr=True), config)
        console_handler.setLevel(logging.WARNING)
        console_handler.setFormatter(logging.Formatter("%(message)s"))
        logging.getLogger().addHandler(console_handler)

    return execute(args, Console(), config)


if __name__ == "__main__":
    sys.exit(main())
