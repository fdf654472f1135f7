# cli/console.py
"""Terminal output: logging setup and table printing.

Reports go to stdout and stay byte-for-byte reproducible; log lines go to stderr.
"""
import logging
import sys
from contextlib import contextmanager

import pandas as pd

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
CSV_FLOAT_FORMAT = "%.12g"


def setup_logging(verbosity: int = 0):
    """-q -> WARNING, default -> INFO, -v and up -> DEBUG."""
    level = logging.WARNING if verbosity < 0 else logging.INFO if verbosity == 0 else logging.DEBUG
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


@contextmanager
def section(title: str, out=None):
    """Titled block on stdout."""
    out = out or sys.stdout
    print(title, file=out)
    print("-" * len(title), file=out)
    yield out
    print(file=out)


def print_table(df: pd.DataFrame, out=None, float_format: str = "%.3e"):
    out = out or sys.stdout
    if df.empty:
        print("(no rows)", file=out)
        return
    print(df.to_string(index=False, float_format=lambda v: float_format % v), file=out)


def print_csv(df: pd.DataFrame, out=None):
    df.to_csv(out or sys.stdout, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")


def write_csv(df: pd.DataFrame, path):
    df.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
