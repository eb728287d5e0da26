import argparse
from importlib import metadata

try:
    # Read the version dynamically from the package metadata.
    APP_VERSION = metadata.version("qpochmax")
except metadata.PackageNotFoundError:
    # Fallback for development checkouts that are not installed.
    APP_VERSION = "0.0.0-dev"


def positive_int(value: str) -> int:
    """argparse type for integers >= 1."""
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {value!r}")
    if number < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {number}")
    return number


def non_negative_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {value!r}")
    if number < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {number}")
    return number


def _add_help(parser: argparse.ArgumentParser):
    parser.add_argument(
        "-h",
        "--help",
        action="help",
        default=argparse.SUPPRESS,
        help="Show this help message and exit.",
    )


def create_arg_parser() -> argparse.ArgumentParser:
    """Creates and returns the command-line argument parser for the application."""
    parser = argparse.ArgumentParser(
        prog="qpochmax",
        description="qpochmax: maximal coefficients of (1-q)(1-q^2)...(1-q^n).",
        formatter_class=argparse.RawTextHelpFormatter,
        # Let our custom --man flag handle detailed help
        add_help=False,
    )

    # --- Standard Arguments ---
    _add_help(parser)
    parser.add_argument(
        "--man", action="store_true", help="Show the full user manual and exit."
    )
    parser.add_argument(
        "-v", "-V", "--version", action="version", version=f"%(prog)s {APP_VERSION}"
    )
    parser.add_argument(
        "-q",
        "--quiet",
        action="store_true",
        help="Do not echo warnings and errors from the log to the terminal.",
    )

    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def add_command(name: str, help_text: str) -> argparse.ArgumentParser:
        command = sub.add_parser(
            name,
            help=help_text,
            description=help_text,
            formatter_class=argparse.RawTextHelpFormatter,
            add_help=False,
        )
        _add_help(command)
        return command

    # --- compute ---
    compute = add_command("compute", "Expand (q;q)_n step by step and record M_n and L(n).")
    compute.add_argument("--to", dest="target", type=non_negative_int, required=True, metavar="N",
                         help="Last n to compute.")
    compute.add_argument("--records", required=True, metavar="CSV",
                         help="Record log to write (or extend when resuming).")
    compute.add_argument("--from", dest="resume_from", metavar="CHECKPOINT",
                         help="Resume from a checkpoint file instead of n=0.")
    compute.add_argument("--checkpoint-dir", metavar="DIR",
                         help="Where checkpoints are written.\nDefault: setting 'checkpoint_dir'.")
    compute.add_argument("--checkpoint-every", type=positive_int, metavar="K",
                         help="Checkpoint every K steps. Default: 1000.")
    compute.add_argument("--progress-every", type=positive_int, metavar="K",
                         help="Log progress every K steps. Default: 100.")
    compute.add_argument("--threads", type=positive_int, metavar="T",
                         help="Worker processes for each step. Default: 1.")

    # --- verify ---
    verify = add_command("verify", "Validate a checkpoint's checksum and pentagonal prefix.")
    verify.add_argument("path", metavar="CHECKPOINT")
    verify.add_argument("--prefix-limit", type=positive_int, metavar="K",
                        help="Number of leading coefficients checked. Default: 10000.")

    # --- analyze ---
    analyze = add_command("analyze", "Derive D, E and E~ from a record log and check their structure.")
    analyze.add_argument("--records", required=True, metavar="CSV")
    analyze.add_argument("--out", metavar="CSV", help="Write n,two_D,E,E_tilde,flags here.")

    # --- encode ---
    encode = add_command("encode", "Spell the E stream of one residue class in the 20-letter alphabet.")
    encode.add_argument("--class", dest="klass", type=int, choices=(1, 3), required=True)
    source = encode.add_mutually_exclusive_group(required=True)
    source.add_argument("--analysis", metavar="CSV", help="Analysis CSV from 'analyze --out'.")
    source.add_argument("--records", metavar="CSV", help="Record log; E is derived on the fly.")
    encode.add_argument("--start", type=positive_int, metavar="N",
                        help="First n of the letter stream. Default: 209 or 391.")
    encode.add_argument("--csv", metavar="CSV", help="Write word_index,class,perturbation_index,letter_counts.")

    # --- predict ---
    predict = add_command("predict", "Predict L(n) and compare with recorded values.")
    predict.add_argument("--n", dest="ns", type=positive_int, nargs="+", metavar="N")
    predict.add_argument("--word", type=non_negative_int, nargs=2, metavar=("K", "R"),
                         help="Predict at the start of word R (0..10) of period K.")
    predict.add_argument("--class", dest="klass", type=int, choices=(1, 3), default=3,
                         help="Residue class used with --word. Default: 3.")
    predict.add_argument("--records", metavar="CSV",
                         help="Record log to verify against; without --n every record is checked.")

    # --- fit ---
    fit = add_command("fit", "Fit a0 + a1/n + a2/n^2 + ... to ratios or roots of M_n.")
    fit.add_argument("--records", required=True, metavar="CSV")
    fit.add_argument("--quantity", choices=("ratio", "root", "logM_over_n"), default="ratio")
    fit.add_argument("--start", type=positive_int, metavar="N", help="First sample n. Default: 1000.")
    fit.add_argument("--step", type=positive_int, metavar="K", help="Sample stride. Default: 250.")
    fit.add_argument("--terms", type=int, choices=(2, 3, 4), help="Number of coefficients. Default: 3.")
    fit.add_argument("--precision", type=positive_int, metavar="DIGITS",
                     help="Decimal digits. Default: $QPOCH_PRECISION or setting 'precision'.")
    fit.add_argument("--growth", action="store_true", help="Also print growth constant estimates.")

    # --- kotesovec ---
    kotesovec = add_command("kotesovec", "Integrate prod 4 sin^2(pi j z) numerically and compare exactly.")
    kotesovec.add_argument("--n", type=positive_int, required=True)
    kotesovec.add_argument("--subdivisions", type=positive_int, metavar="PANELS")
    kotesovec.add_argument("--threads", type=positive_int, metavar="T", help="Worker processes for the panel sums.")

    # --- plot ---
    plot = add_command("plot", "Show or export the coefficients of (q;q)_n.")
    plot.add_argument("--n", type=non_negative_int, required=True)
    plot.add_argument("--csv", metavar="CSV", help="Write i,coefficient instead of plotting.")
    plot.add_argument("--log", action="store_true", help="Plot sign(a) * log10(1 + |a|).")
    plot.add_argument("--check", action="store_true",
                      help="Compare with the schoolbook product first.\nLimited by setting 'naive_cap'.")

    return parser
