"""
CSV result files.

Every command writes UTF-8 CSV with a fixed header and '.' as the decimal
separator. Floats are formatted with a fixed number of significant digits
so identical runs produce identical bytes.
"""
import csv
import logging
import math
import sys
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence

from lattice_pimc.utils.errors import OutputError

logger = logging.getLogger(__name__)

FLOAT_DIGITS = 12


def format_value(value: Any) -> str:
    """Render one cell; floats use FLOAT_DIGITS significant digits."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float) or hasattr(value, "dtype"):
        x = float(value)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return format(x, f".{FLOAT_DIGITS}g")
    return str(value)


def free_header(n_max: int) -> List[str]:
    return ["beta", "Z_per_site", "E_mean", "E_fluct"] + [f"G1_{n}" for n in range(n_max + 1)]


def striped_header(n_max: int) -> List[str]:
    return (
        ["beta", "log_Z_per_site", "E_mean", "E_fluct", "V_mean"]
        + [f"G1_{n}" for n in range(n_max + 1)]
        + [f"G2_{n}" for n in range(n_max + 1)]
        + ["status"]
    )


def pimc_header(n_max: int) -> List[str]:
    header = [
        "beta", "p", "n_samples", "block_size", "acceptance",
        "E_mean", "E_err", "E_fluct", "E_fluct_err",
        "E_fluct_thermo", "E_fluct_thermo_err", "V_mean", "V_err",
    ]
    for n in range(n_max + 1):
        header += [f"G1_{n}", f"G1_{n}_err"]
    for n in range(n_max + 1):
        header += [f"G2_{n}", f"G2_{n}_err"]
    return header + ["status"]


COMPARE_HEADER = [
    "observable", "beta", "analytic", "mc_mean", "mc_stderr",
    "abs_deviation", "rel_deviation", "policy", "passed",
]


def write_csv(path: Optional[Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """
    Write a CSV file, or standard output when path is None.

    Raises:
        OutputError: If the file cannot be created or written.
    """
    formatted = [[format_value(v) for v in row] for row in rows]
    for row in formatted:
        if len(row) != len(header):
            raise OutputError(f"row of {len(row)} cells does not match {len(header)} columns")

    if path is None:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(formatted)
        return

    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(formatted)
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc}") from exc
    logger.info(f"Wrote {len(formatted)} rows to {path}")


def read_csv(path: Path) -> List[dict]:
    """Read a result file back as a list of dicts (used by tests and tooling)."""
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))
