"""
Command-line entry point for the Wigner flow toolkit.

    python -m app.main classical --nu2 2 --energies 0.5,1.5 --out orbits.json
    python -m app.main td-field --beta 1 --nu2 1 --out td.json
    python -m app.main td-thermo --beta-min 0.05 --beta-max 5 --steps 100 --nu2 0.7071 1 1.4142 2 --out thermo.csv
    python -m app.main gaussian-field --gamma 1 --out gaussian.json
    python -m app.main verify --json report.json
"""
import argparse
import math
import sys
import time
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from app.config import get_settings
from app.core.export import (
    field_record,
    orbit_file,
    write_field_file,
    write_orbit_file,
    write_report,
    write_thermo_csv,
)
from app.core.grid import divergence, evaluate_field, evaluate_vector_field, make_grid
from app.core.hamiltonians import get_model
from app.core.oracle import VerificationSuite
from app.core.orbits import classify_and_trace
from app.ensembles.gaussian import (
    GaussianEnsemble,
    currents_erf,
    default_field_grid,
    div_closed,
    g_gamma,
    gaussian_div_w,
    velocity_field,
)
from app.ensembles.thermal import (
    TdEnsemble,
    corrected_currents,
    flow_reversal_masks,
    printed_current_discrepancy,
    td_div_w,
    thermo_curve,
    w0,
    w_st2,
)
from app.errors import CorrectionRegimeError, WignerFlowError
from app.models import FieldParams
from app.utils.logger import LEVELS, get_logger, setup_logging


logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


class UsageError(Exception):
    """Bad command-line input."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        raise UsageError(message)


def _float_list(values: Sequence[str]) -> List[float]:
    """Accept space- and comma-separated numbers."""
    out = []
    for value in values:
        for part in value.split(","):
            if part.strip():
                try:
                    out.append(float(part))
                except ValueError:
                    raise UsageError(f"not a number: {part!r}")
    if not out:
        raise UsageError("empty number list")
    return out


def _positive(name: str, value: float) -> float:
    if not (math.isfinite(value) and value > 0.0):
        raise UsageError(f"--{name} must be positive, got {value}")
    return value


def _periodic_cell(points: int):
    return make_grid(((-math.pi, math.pi), (-math.pi, math.pi)), (points, points), (True, True))


def cmd_classical(args: argparse.Namespace) -> int:
    """Classify and trace Harper level sets."""
    nu2 = _positive("nu2", args.nu2)
    model = get_model(args.model, nu2=nu2)
    orbits = [classify_and_trace(model, energy) for energy in _float_list(args.energies)]
    write_orbit_file(args.out, orbit_file(model.name, nu2, orbits))
    return EXIT_OK


def cmd_td_field(args: argparse.Namespace) -> int:
    """Wigner flow fields of the corrected thermal ensemble."""
    beta = _positive("beta", args.beta)
    nu2 = _positive("nu2", args.nu2)
    ensemble = TdEnsemble(get_model("harper", nu2=nu2), beta)
    grid = _periodic_cell(args.grid or get_settings().grid_points)
    params = FieldParams(model="harper", beta=beta, nu2=nu2)

    current = evaluate_vector_field(grid, lambda x, k: corrected_currents(ensemble, x, k))

    def classical(x, k):
        vx, vk = ensemble.model.velocity(x, k)
        w = w0(ensemble, x, k)
        return vx * w, vk * w

    reversal_x, reversal_k = flow_reversal_masks(current)
    fields = [
        ("w0", evaluate_field(grid, lambda x, k: w0(ensemble, x, k))),
        ("w_st2", evaluate_field(grid, lambda x, k: w_st2(ensemble, x, k))),
        ("current", current),
        ("current_classical", evaluate_vector_field(grid, classical)),
        ("div_J", divergence(current)),
        ("div_w", evaluate_field(grid, lambda x, k: td_div_w(ensemble, x, k))),
        ("reversal_x", reversal_x),
        ("reversal_k", reversal_k),
    ]
    printed_current_discrepancy(ensemble, grid)
    write_field_file(args.out, [field_record(name, f, params) for name, f in fields])
    return EXIT_OK


def _thermo_path(out: Path, nu2: float, many: bool) -> Path:
    if not many:
        return out
    return out.with_name(f"{out.stem}_nu2={nu2:g}{out.suffix}")


def cmd_td_thermo(args: argparse.Namespace) -> int:
    """Classical and corrected thermodynamic curves, one CSV per nu2."""
    beta_min = _positive("beta-min", args.beta_min)
    beta_max = _positive("beta-max", args.beta_max)
    if not beta_min < beta_max:
        raise UsageError("--beta-min must be below --beta-max")
    if args.steps < 2:
        raise UsageError("--steps must be at least 2")
    nu2s = [_positive("nu2", v) for v in _float_list(args.nu2)]
    betas = np.linspace(beta_min, beta_max, args.steps)
    out = Path(args.out)
    for nu2 in nu2s:
        curve = thermo_curve(get_model("harper", nu2=nu2), betas, strict=args.strict)
        write_thermo_csv(_thermo_path(out, nu2, len(nu2s) > 1), curve)
    return EXIT_OK


def cmd_gaussian_field(args: argparse.Namespace) -> int:
    """Wigner flow fields of the Gaussian ensemble under Harper dynamics."""
    nu2 = _positive("nu2", args.nu2)
    ensemble = GaussianEnsemble(args.gamma, get_model("harper", nu2=nu2))
    grid = default_field_grid(args.grid)
    params = FieldParams(model="harper", gamma=ensemble.gamma, nu2=nu2)

    def div_j(x, k):
        dx, dk = div_closed(ensemble, x, k)
        return dx + dk

    fields = [
        ("g_gamma", evaluate_field(grid, lambda x, k: g_gamma(ensemble, x, k))),
        ("current", evaluate_vector_field(grid, lambda x, k: currents_erf(ensemble, x, k))),
        ("div_J", evaluate_field(grid, div_j)),
        ("w", evaluate_vector_field(grid, lambda x, k: velocity_field(ensemble, x, k))),
        ("div_w", evaluate_field(grid, lambda x, k: gaussian_div_w(ensemble, x, k))),
    ]
    write_field_file(args.out, [field_record(name, f, params) for name, f in fields])
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    """Run every oracle check; exit 1 if any fails."""
    result = VerificationSuite(args.grid).run()
    for report in result.reports:
        verdict = "PASS" if report.passed else "FAIL"
        print(f"{verdict}  {report.name}  error={report.max_abs_error:.3e}  tolerance={report.tolerance:.1e}")
    if args.json == "-":
        sys.stdout.write(write_report(None, result.reports).decode("utf-8") + "\n")
    elif args.json:
        write_report(args.json, result.reports)
    return EXIT_OK if result.passed else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wigner-flow", description="Wigner phase-space flows of separable Hamiltonians")
    parser.add_argument("--log-level", type=str.upper, choices=LEVELS, default=None, help="Override WIGNER_FLOW_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("classical", help="Classical Harper portraits")
    p.add_argument("--model", default="harper", choices=["harper"])
    p.add_argument("--nu2", type=float, required=True)
    p.add_argument("--energies", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_classical)

    p = sub.add_parser("td-field", help="Thermal ensemble flow fields")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--nu2", type=float, default=1.0)
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_td_field)

    p = sub.add_parser("td-thermo", help="Thermodynamic curves")
    p.add_argument("--beta-min", type=float, required=True)
    p.add_argument("--beta-max", type=float, required=True)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--nu2", nargs="+", default=["1"])
    p.add_argument("--strict", action="store_true", help="Fail instead of leaving empty cells outside the correction regime")
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_td_thermo)

    p = sub.add_parser("gaussian-field", help="Gaussian ensemble flow fields")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--nu2", type=float, default=1.0)
    p.add_argument("--grid", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(handler=cmd_gaussian_field)

    p = sub.add_parser("verify", help="Run the oracle suite")
    p.add_argument("--json", default=None, help="Write the report here ('-' for stdout)")
    p.add_argument("--grid", type=int, default=None, help="Grid points for the Green's-theorem fields")
    p.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Parse arguments, run one command and return its exit status."""
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        print(f"wigner-flow: error: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        setup_logging(args.log_level)
    except ValueError as e:
        print(f"wigner-flow: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    start_time = time.time()
    logger.info("Command started", command=args.command, out=getattr(args, "out", None))
    try:
        code = args.handler(args)
    except (UsageError, WignerFlowError, ValidationError) as e:
        level = "warning" if isinstance(e, CorrectionRegimeError) else "error"
        getattr(logger, level)("Command rejected", command=args.command, error=str(e))
        print(f"wigner-flow: error: {e}", file=sys.stderr)
        return EXIT_USAGE

    logger.info(
        "Command finished",
        command=args.command,
        exit_code=code,
        elapsed_ms=int((time.time() - start_time) * 1000),
    )
    return code


if __name__ == "__main__":
    sys.exit(main())
