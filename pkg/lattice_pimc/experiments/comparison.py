"""
Tolerance policies for analytic-vs-Monte-Carlo comparisons.
"""
from typing import List

from lattice_pimc.models import (
    ComparisonRow,
    FreeObservables,
    RunStats,
    StripedObservables,
    TolerancePolicy,
)

# Largest correlation offset with a quantitative free-particle check
FREE_G1_CHECKED_MAX_N = 5
# Below this beta the long-range G1 values are dominated by rare walks
FREE_G1_CHECKED_MIN_BETA = 10.0
HIGH_TEMPERATURE_BETA = 1.0

FREE_ENERGY = TolerancePolicy("3sigma_and_abs_5e-3", abs_tol=5e-3, sigma=3.0)
FREE_FLUCT = TolerancePolicy("info", informational=True)
FREE_G1 = TolerancePolicy("rel_20pct", rel_tol=0.20)
STRIPED_HIGH_T = TolerancePolicy("rel_1pct", rel_tol=0.01)
STRIPED_LOW_T = TolerancePolicy("rel_7pct", rel_tol=0.07)
STRIPED_G2 = TolerancePolicy("abs_0.05", abs_tol=0.05)
INFORMATIONAL = TolerancePolicy("info", informational=True)


def striped_policy(beta: float) -> TolerancePolicy:
    """1% relative up to beta = 1, 7% beyond."""
    return STRIPED_HIGH_T if beta <= HIGH_TEMPERATURE_BETA else STRIPED_LOW_T


def free_rows(beta: float, stats: RunStats, exact: FreeObservables, n_max: int) -> List[ComparisonRow]:
    """Energy, fluctuation and G1 rows of a free-lattice run."""
    fluct, fluct_err = stats.energy_fluctuation()
    rows = [
        ComparisonRow("E_mean", beta, exact.mean_energy, stats.mean("energy"), stats.stderr("energy"), FREE_ENERGY),
        ComparisonRow("E_fluct", beta, exact.energy_fluctuation, fluct, fluct_err, FREE_FLUCT),
    ]
    for n in range(min(n_max, len(exact.g1) - 1) + 1):
        checked = n <= FREE_G1_CHECKED_MAX_N and beta >= FREE_G1_CHECKED_MIN_BETA
        policy = FREE_G1 if checked else INFORMATIONAL
        rows.append(
            ComparisonRow(f"G1_{n}", beta, float(exact.g1[n]), stats.mean(f"g1_{n}"), stats.stderr(f"g1_{n}"), policy)
        )
    return rows


def striped_rows(beta: float, stats: RunStats, exact: StripedObservables, n_max: int) -> List[ComparisonRow]:
    """Energy, potential, fluctuation and correlation rows of a striped run."""
    policy = striped_policy(beta)
    thermo, thermo_err = stats.thermo_fluctuation()
    rows = [
        ComparisonRow("E_mean", beta, exact.mean_energy, stats.mean("energy"), stats.stderr("energy"), policy),
        ComparisonRow("V_mean", beta, exact.mean_potential, stats.mean("v"), stats.stderr("v"), policy),
        ComparisonRow("E_fluct_thermo", beta, exact.energy_fluctuation, thermo, thermo_err, INFORMATIONAL),
    ]
    for n in range(n_max + 1):
        rows.append(
            ComparisonRow(f"G2_{n}", beta, float(exact.g2[n]), stats.mean(f"g2_{n}"), stats.stderr(f"g2_{n}"), STRIPED_G2)
        )
    for n in range(n_max + 1):
        rows.append(
            ComparisonRow(f"G1_{n}", beta, float(exact.g1[n]), stats.mean(f"g1_{n}"), stats.stderr(f"g1_{n}"), INFORMATIONAL)
        )
    return rows


def comparison_record(row: ComparisonRow) -> list:
    """Cells of one comparison row in COMPARE_HEADER order."""
    return [
        row.observable,
        row.beta,
        row.analytic,
        row.mc_mean,
        row.mc_stderr,
        row.abs_deviation,
        row.rel_deviation,
        row.policy.name,
        row.passed,
    ]
