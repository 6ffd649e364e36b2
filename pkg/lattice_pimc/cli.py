"""
Command-line interface.

    lattice-pimc exact free    [--beta ...] [--t ...] [--n-max ...] [--out ...]
    lattice-pimc exact striped [--beta ...] [--epsilon ...] [--quad-tol ...]
    lattice-pimc pimc          [--pattern free|striped|explicit] [--walks ...] ...
    lattice-pimc compare       [same flags as pimc]

Precedence: command-line flags, then the --config file, then the package
defaults. Exit status is 0 on success, 1 when a comparison fails and 2 on
configuration or I/O errors.
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from lattice_pimc import config
from lattice_pimc.core.settings import ExperimentConfig, config_from_mapping, load_config
from lattice_pimc.experiments import commands
from lattice_pimc.utils.errors import LatticePimcError, human_friendly_message
from lattice_pimc.utils.logging_cfg import setup_logging

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_COMPARE_FAILED = 1
EXIT_ERROR = 2

# Flags forwarded to config_from_mapping, keyed by argparse destination
_OVERRIDES = (
    "beta", "t", "p", "seed", "out", "n_max", "quad_tol", "workers",
    "pattern", "lattice_size", "epsilon", "walks", "burn_in", "thin",
    "segment_fraction", "global_fraction", "chains", "block_size",
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="JSON or key=value experiment file")
    parser.add_argument("--beta", type=str, help="Comma-separated inverse temperatures")
    parser.add_argument("--t", type=float, help="Hopping energy (default 1)")
    parser.add_argument("--n-max", type=int, help="Largest correlation offset")
    parser.add_argument("--out", type=Path, help="Output CSV (default: standard output)")
    parser.add_argument("--debug", action="store_true", help="Verbose logging and invariant checks")


def _add_sampler(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--pattern", choices=("free", "striped", "explicit"), help="Lattice pattern")
    parser.add_argument("--lattice-size", type=int, help="Number of lattice sites L")
    parser.add_argument("--epsilon", type=float, help="On-site potential of occupied sites")
    parser.add_argument("--p", type=int, help="Trotter number (steps per walk)")
    parser.add_argument("--walks", type=int, help="Samples per beta and chain")
    parser.add_argument("--seed", type=int, help="Run seed")
    parser.add_argument("--segment-fraction", type=float, help="Fraction of the walk redrawn per move")
    parser.add_argument("--global-fraction", type=float, help="Share of moves that redraw or shift the whole walk")
    parser.add_argument("--burn-in", type=int, help="Metropolis steps before sampling")
    parser.add_argument("--thin", type=int, help="Metropolis steps between samples")
    parser.add_argument("--chains", type=int, help="Independent chains per beta")
    parser.add_argument("--block-size", type=int, help="Samples per statistics block")
    parser.add_argument("--quad-tol", type=float, help="Relative quadrature tolerance")
    parser.add_argument("--workers", type=int, help="Worker processes")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lattice-pimc",
        description="Path-integral Monte Carlo for a particle on a 1D lattice, with exact references",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    exact = sub.add_parser("exact", help="Write exact (analytic) datasets")
    exact.add_argument("kind", choices=("free", "striped"))
    _add_common(exact)
    exact.add_argument("--epsilon", type=float, help="On-site potential of occupied sites")
    exact.add_argument("--quad-tol", type=float, help="Relative quadrature tolerance")

    pimc = sub.add_parser("pimc", help="Run Monte Carlo and write estimates with errors")
    _add_common(pimc)
    _add_sampler(pimc)

    compare = sub.add_parser("compare", help="Compare Monte Carlo against the exact solution")
    _add_common(compare)
    _add_sampler(compare)
    return parser


def _mode(args: argparse.Namespace) -> str:
    return f"exact-{args.kind}" if args.command == "exact" else args.command


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """
    Merge defaults, the config file and command-line flags.

    Raises:
        ExperimentConfigError: If the result is inconsistent.
    """
    mode = _mode(args)
    cfg = ExperimentConfig(
        mode=mode, betas=(), seed=config.DEFAULT_SEED, workers=config.DEFAULT_WORKERS
    )
    if mode == "exact-free":
        cfg.lattice.pattern = "free"
        cfg.n_max = config.DEFAULT_FREE_G1_N_MAX
    if getattr(args, "config", None) is not None:
        cfg = load_config(args.config, cfg)

    overrides: Dict[str, Any] = {}
    for name in _OVERRIDES:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    cfg = config_from_mapping(overrides, cfg)
    cfg.mode = mode

    if not cfg.betas:
        if mode == "exact-free" or cfg.lattice.pattern == "free":
            cfg.betas = config.FREE_BETAS
        elif mode == "exact-striped":
            cfg.betas = config.STRIPED_LOG_BETAS
        else:
            cfg.betas = config.STRIPED_BETAS
    return cfg.validate()


def main(argv: Optional[List[str]] = None) -> int:
    """Parse arguments, run one command and return the exit status."""
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        config.load_env()
        setup_logging(debug=args.debug)
        cfg = resolve_config(args)

        if cfg.mode == "exact-free":
            commands.cmd_exact_free(cfg.betas, cfg.t, cfg.n_max, cfg.out)
        elif cfg.mode == "exact-striped":
            commands.cmd_exact_striped(cfg.betas, cfg.lattice.epsilon, cfg.n_max, cfg.quad_tol, cfg.out)
        elif cfg.mode == "pimc":
            commands.cmd_pimc(cfg, debug=args.debug)
        else:
            _, passed = commands.cmd_compare(cfg, debug=args.debug)
            if not passed:
                print("Comparison failed: see the run log for failing rows.", file=sys.stderr)
                return EXIT_COMPARE_FAILED
    except (LatticePimcError, OSError) as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        print(human_friendly_message(exc), file=sys.stderr)
        return EXIT_ERROR
    return EXIT_OK
