"""Python access to the milt workbench core."""

from ._core import (
    Dataset,
    MilTree,
    MiltError,
    Session,
    load_csv,
    load_musk_uci,
    parse_csv,
    run_benchmark,
    synthetic,
)

__all__ = [
    "Dataset",
    "MilTree",
    "MiltError",
    "Session",
    "load_csv",
    "load_musk_uci",
    "parse_csv",
    "run_benchmark",
    "synthetic",
]
