"""Command-line front end: figure data, moments, EP location, oracle validation.

Frequencies in configuration files and flags are ordinary frequencies in Hz;
they are multiplied by 2 pi once, here, and the library only sees rad/s.

Exit codes: 0 success, 1 configuration error, 2 validation failure,
3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import __version__, eplocus, fock_oracle, gaussian
from .drift import DriftKind
from .errors import ConfigError, NonConverged, NoSignChange, ParameterError, PrecisionLoss
from .params import TWO_PI, SystemParams, validate

log = logging.getLogger("optoep")

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_NUMERIC = 0, 1, 2, 3

CONFIG_KEYS = ("delta_hz", "omega_m_hz", "g_hz", "kappa_hz", "gamma_hz", "n_th")
REQUIRED_KEYS = ("omega_m_hz", "kappa_hz", "gamma_hz", "n_th")

GRID_DEFAULTS = {
    "fig1": (0.0, 0.5, 501),
    "fig2": (0.0, 1.0, 101),
    "covariances": (0.0, 1.0, 101),
}


class ValidationFailure(Exception):
    """A cross-check produced a result outside its tolerance."""


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r} (allowed: {', '.join(CONFIG_KEYS)})")
        try:
            values[key] = float(value)
        except ValueError:
            raise ConfigError(f"{source}:{lineno}: {key} is not a number: {value!r}") from None
    return values


def resolve_params(args) -> SystemParams:
    values = {}
    if args.config is not None:
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        values.update(parse_config_text(text, str(path)))
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise ConfigError(f"missing parameters: {', '.join(missing)} (use --config or flags)")
    p = SystemParams.from_hz(
        omega_m_hz=values["omega_m_hz"],
        kappa_hz=values["kappa_hz"],
        gamma_hz=values["gamma_hz"],
        n_th=values["n_th"],
        g_hz=values.get("g_hz", 0.0),
        delta_hz=values.get("delta_hz"),
    )
    try:
        return validate(p)
    except ParameterError as exc:
        raise ConfigError(f"invalid parameters: {exc}") from None


@dataclass(frozen=True)
class GridRange:
    lo: float
    hi: float
    count: int

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.count)


def resolve_grid(args, command: str) -> GridRange:
    lo, hi, count = GRID_DEFAULTS[command]
    lo = lo if args.min is None else args.min
    hi = hi if args.max is None else args.max
    count = count if args.count is None else args.count
    if count < 2:
        raise ConfigError(f"grid count must be >= 2, got {count}")
    if not lo < hi:
        raise ConfigError(f"grid needs min < max, got {lo} >= {hi}")
    return GridRange(float(lo), float(hi), int(count))


def param_header(p: SystemParams) -> list[str]:
    lines = [f"optoep {__version__}", "units: rates in rad/s (Hz value = rad/s / 2pi)"]
    for name in ("delta", "omega_m", "g", "kappa", "gamma"):
        value = getattr(p, name)
        lines.append(f"{name} = {fmt(value)} rad/s ({fmt(value / TWO_PI)} Hz)")
    lines.append(f"n_th = {fmt(p.n_th)}")
    return lines


@contextmanager
def open_output(path):
    if path is None or str(path) == "-":
        yield sys.stdout
        return
    path = Path(path)
    try:
        handle = path.open("w", newline="")
    except OSError as exc:
        raise ConfigError(f"cannot write output {path}: {exc.strerror}") from None
    with handle:
        yield handle


def write_table(path, fmt_name: str, header: list[str], columns: list[str], rows, meta: dict) -> None:
    with open_output(path) as out:
        if fmt_name == "json":
            payload = {"meta": meta, "header": header, "columns": columns, "rows": [[float(v) for v in r] for r in rows]}
            out.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")
            return
        for line in header:
            out.write(f"# {line}\n")
        out.write(",".join(columns) + "\n")
        for row in rows:
            out.write(",".join(fmt(v) for v in row) + "\n")


def write_json(path, payload: dict) -> None:
    with open_output(path) as out:
        out.write(json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(obj):
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"not serialisable: {type(obj)!r}")


@contextmanager
def worker_map(jobs: int):
    if jobs <= 1:
        yield map
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield pool.map


# --- commands ---------------------------------------------------------------


def run_fig1(args) -> int:
    p = resolve_params(args)
    grid = resolve_grid(args, "fig1")
    k = p.kappa
    g_values = grid.values() * k
    with worker_map(args.jobs) as mapper:
        liou = eplocus.sweep_branches(p, g_values, eplocus.MatrixKind.drift2(DriftKind.LIOUVILLE), mapper)
        nojump = eplocus.sweep_branches(p, g_values, eplocus.MatrixKind.drift2(DriftKind.NO_JUMP), mapper)
    lep, hep = eplocus.g_lep(p) / k, eplocus.g_hep(p) / k
    header = param_header(p) + [
        "eigenvalues in units of kappa; lp/lm Liouvillian drift, lnhp/lnhm no-jump drift",
        f"G_LEP/kappa = {lep:.5f} ({fmt(lep)})",
        f"G_HEP/kappa = {hep:.5f} ({fmt(hep)})",
    ]
    columns = ["G_over_kappa", "re_lp", "re_lm", "im_lp", "im_lm", "re_lnhp", "re_lnhm", "im_lnhp", "im_lnhm"]
    rows = []
    for i, g in enumerate(grid.values()):
        lp, lm = liou.eigenvalues[i] / k
        np_, nm = nojump.eigenvalues[i] / k
        rows.append([g, lp.real, lm.real, lp.imag, lm.imag, np_.real, nm.real, np_.imag, nm.imag])
    write_table(args.out, args.format, header, columns, rows, {"g_lep_over_kappa": lep, "g_hep_over_kappa": hep})
    return EXIT_OK


def _require_red(p: SystemParams) -> SystemParams:
    if not p.is_red_sideband:
        raise ConfigError("this command requires the red sideband: omit delta_hz or set it to -omega_m_hz")
    return p


def _fig2_point(p: SystemParams, eps: float) -> tuple[float, float]:
    closed = eplocus.g_ep_hybrid(p, eps)
    numeric = eplocus.locate(p, eplocus.MatrixKind.hybrid4(eps)).g_star
    return closed, numeric


def run_fig2(args) -> int:
    p = resolve_params(args)
    grid = resolve_grid(args, "fig2")
    if grid.lo < 0 or grid.hi > 1:
        raise ConfigError(f"eps grid must lie in [0, 1], got [{grid.lo}, {grid.hi}]")
    p = _require_red(p)
    k = p.kappa
    eps_values = grid.values()
    with worker_map(args.jobs) as mapper:
        points = list(mapper(_fig2_point, [p] * eps_values.size, eps_values))
    rows, worst = [], 0.0
    for e, (closed, numeric) in zip(eps_values, points):
        worst = max(worst, abs(numeric - closed) / closed if closed else abs(numeric))
        rows.append([e, closed / k, numeric / k])
    header = param_header(p) + [
        "hybrid exceptional point vs jump weight eps; closed form and bisection on alpha^2 - 4 beta",
        f"max relative disagreement = {worst:.3e}",
    ]
    write_table(args.out, args.format, header, ["eps", "g_ep_over_kappa", "g_ep_numeric_over_kappa"], rows, {"max_rel_disagreement": worst})
    if worst > 1e-8:
        raise ValidationFailure(f"closed-form and numeric hybrid EP disagree by {worst:.3e}")
    return EXIT_OK


def run_covariances(args) -> int:
    p = _require_red(resolve_params(args))
    grid = resolve_grid(args, "covariances")
    k = p.kappa
    rows = []
    for g in grid.values():
        cov = gaussian.steady_covariances(p.with_g(g * k))
        rows.append([g, cov.n_a, cov.n_b, cov.c_ba.real, cov.c_ba.imag])
    header = param_header(p) + ["steady-state moments; c_ba = <b^dag a>, c_ab = conj(c_ba)"]
    write_table(args.out, args.format, header, ["G_over_kappa", "n_a", "n_b", "re_c_ba", "im_c_ba"], rows, {})
    return EXIT_OK


def run_correlations(args) -> int:
    p = _require_red(resolve_params(args))
    k = p.kappa
    if args.min is not None or args.max is not None:
        lo = 0.0 if args.min is None else args.min
        hi = args.max
        if hi is None:
            raise ConfigError("--max (tau in units of 1/kappa) is required when --min is given")
        count = 512 if args.count is None else args.count
        if count < 2 or not lo < hi or lo < 0:
            raise ConfigError("tau grid needs count >= 2 and 0 <= min < max")
        tau = np.linspace(lo, hi, count) / k
    else:
        tau = gaussian.default_tau_grid(p, 512 if args.count is None else args.count)
    trace = gaussian.correlations_regression(p, tau)
    rows = []
    for i, t in enumerate(tau):
        row = [t * k]
        for name in ("c11", "c12", "c21", "c22"):
            v = getattr(trace, name)[i]
            row += [v.real, v.imag]
        rows.append(row)
    columns = ["tau_kappa"] + [f"{part}_{n}" for n in ("c11", "c12", "c21", "c22") for part in ("re", "im")]
    header = param_header(p) + [
        "c11=<a^dag(t)a(t')>, c12=<a^dag(t)b(t')>, c21=<b^dag(t)a(t')>, c22=<b^dag(t)b(t')>, tau=t-t'",
    ]
    write_table(args.out, args.format, header, columns, rows, {})
    return EXIT_OK


def _ep_entry(p: SystemParams, kind: eplocus.MatrixKind) -> dict:
    closed = eplocus.closed_form(p, kind)
    numeric = eplocus.locate(p, kind)
    return {
        "closed_form": closed.g_star,
        "closed_form_over_kappa": closed.g_star / p.kappa,
        "numeric": numeric.g_star,
        "numeric_over_kappa": numeric.g_star / p.kappa,
        "relative_disagreement": abs(numeric.g_star - closed.g_star) / closed.g_star if closed.g_star else 0.0,
        "bisection_iterations": numeric.iterations,
        "eigenvalue_gap": numeric.defectivity.eigenvalue_gap,
        "eigenvector_overlap": numeric.defectivity.eigenvector_overlap,
        "defective": numeric.defectivity.is_defective,
    }


def run_ep_locate(args) -> int:
    p = _require_red(resolve_params(args))
    eps = 0.5 if args.eps is None else args.eps
    if not 0 <= eps <= 1:
        raise ConfigError(f"--eps must lie in [0, 1], got {eps}")
    lep, hep = eplocus.g_lep(p), eplocus.g_hep(p)
    report = {
        "params": asdict(p),
        "lep": _ep_entry(p, eplocus.MatrixKind.drift2(DriftKind.LIOUVILLE)),
        "hep": _ep_entry(p, eplocus.MatrixKind.drift2(DriftKind.NO_JUMP)),
        "hybrid": dict(eps=eps, **_ep_entry(p, eplocus.MatrixKind.hybrid4(eps))),
        "input_power_ratio_hep_over_lep": (hep / lep) ** 2,
    }
    write_json(args.out, report)
    return EXIT_OK


def _rel_err(value, ref) -> float:
    return float(abs(value - ref) / abs(ref)) if ref else float(abs(value))


def oracle_report(p: SystemParams, n_max: int, eps: float, tau_points: int = 101) -> dict:
    """Run every truncated-Fock cross-check and collect pass/fail + residuals."""
    checks = {}
    k = p.kappa

    convergence = fock_oracle.truncation_convergence(p, n_max)
    checks["truncation_convergence"] = {
        "passed": convergence.passed,
        "n_max": n_max,
        "rel_change": convergence.rel_change,
        "tolerance": convergence.rtol,
    }

    cov = gaussian.steady_covariances(p)
    got = convergence.coarse
    errs = {
        name: _rel_err(got[name], ref)
        for name, ref in (("n_a", cov.n_a), ("n_b", cov.n_b), ("c_ba", cov.c_ba))
    }
    checks["covariance_agreement"] = {
        "passed": max(errs.values()) < 1e-3,
        "relative_errors": errs,
        "tolerance": 1e-3,
        "oracle": {"n_a": got["n_a"], "n_b": got["n_b"], "c_ba": got["c_ba"]},
        "closed_form": {"n_a": cov.n_a, "n_b": cov.n_b, "c_ba": cov.c_ba},
    }

    model = fock_oracle.build_model(p, n_max, n_max)
    lindblad = fock_oracle.build_hybrid_superoperator(model, 1.0)
    ss = fock_oracle.steady_state(lindblad)
    tau = np.linspace(0.0, 5.0 / k, tau_points)
    analytic = gaussian.correlations_regression(p, tau)
    a, b = model.op_a, model.op_b
    two_time = {}
    for label, A, B, ref in (("a_dag_a", a.conj().T, a, analytic.c11), ("b_dag_a", b.conj().T, a, analytic.c21)):
        f = fock_oracle.two_time_function(lindblad, ss.rho, A, B, tau)
        scale = float(np.abs(ref).max())
        two_time[label] = float(np.abs(f - ref).max() / scale) if scale else float(np.abs(f).max())
    checks["two_time_agreement"] = {"passed": max(two_time.values()) < 1e-2, "sup_relative_errors": two_time, "tolerance": 1e-2}

    small = fock_oracle.build_model(p, min(n_max, 6), min(n_max, 6), warn=False)
    thermal = fock_oracle.thermal_state(small, min(p.n_th, 1.0), p.n_th)
    full = fock_oracle.build_hybrid_superoperator(small, 1.0)
    hybrid = fock_oracle.build_hybrid_superoperator(small, eps)
    no_jump = fock_oracle.build_hybrid_superoperator(small, 0.0)
    full_norm = fock_oracle.trace_functional_norm(full)
    d_hybrid = fock_oracle.trace_derivative(hybrid, thermal)
    d_zero = fock_oracle.trace_derivative(no_jump, thermal)
    checks["trace_preservation"] = {
        "passed": full_norm < 1e-10 and (eps == 1.0 or d_hybrid < 0) and d_zero < 0,
        "eps_1": {"trace_functional_norm": full_norm, "tolerance": 1e-10},
        "eps_section": {
            "eps": eps,
            "expected_nonpreserving": eps < 1.0,
            "trace_derivative_thermal": d_hybrid,
        },
        "eps_0": {"trace_derivative_thermal": d_zero},
    }

    comm = {}
    passed = True
    for e in sorted({0.0, eps, 1.0}):
        r = fock_oracle.thermofield_commutator_check(p, e, 6, 6)
        comm[f"eps={e:g}"] = {
            "max_residual": r.max_residual,
            "recovery_error": r.recovery_error,
            "generator_mismatch": r.generator_mismatch,
            "off_block_max": r.off_block_max(),
        }
        passed &= r.passed
        if e == 0.0:
            passed &= r.off_block_max() < 1e-9 * k
    checks["commutator_check"] = {"passed": bool(passed), "tolerance_over_kappa": 1e-9, "results": comm}

    charge = fock_oracle.charge_sector_check(p, 5, 5)
    checks["charge_sector_check"] = {
        "passed": charge.passed,
        "commutator_norm": charge.commutator_norm,
        "cross_sector_max": charge.cross_sector_max,
        "leakage": charge.leakage,
        "completeness_error": charge.completeness_error,
    }
    return {
        "params": asdict(p),
        "n_max": n_max,
        "checks": checks,
        "all_passed": all(c["passed"] for c in checks.values()),
    }


def run_oracle_validate(args) -> int:
    p = _require_red(resolve_params(args))
    if p.n_th > 2:
        raise ConfigError(f"oracle runs are limited to n_th <= 2 (got {p.n_th}); use the n_th-linearity bridge")
    eps = 0.5 if args.eps is None else args.eps
    if not 0 <= eps <= 1:
        raise ConfigError(f"--eps must lie in [0, 1], got {eps}")
    report = oracle_report(p, args.truncation, eps)
    write_json(args.out, report)
    for name, check in report["checks"].items():
        log.info("%-24s %s", name, "PASS" if check["passed"] else "FAIL")
    if not report["all_passed"]:
        failed = [n for n, c in report["checks"].items() if not c["passed"]]
        raise ValidationFailure(f"oracle checks failed: {', '.join(failed)}")
    return EXIT_OK


COMMANDS = {
    "fig1": (run_fig1, "Liouvillian and no-jump eigenvalue branches versus G"),
    "fig2": (run_fig2, "hybrid exceptional point versus jump weight eps"),
    "covariances": (run_covariances, "steady-state second moments versus G"),
    "correlations": (run_correlations, "two-time correlation functions at the configured G"),
    "ep-locate": (run_ep_locate, "closed-form and numeric LEP / HEP / hybrid EP"),
    "oracle-validate": (run_oracle_validate, "truncated-Fock cross-validation report"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="optoep", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value parameter file (frequencies in Hz)")
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("--jobs", type=int, default=1, help="worker processes for grid sweeps")
    common.add_argument("--min", type=float, help="grid start (G/kappa, eps, or tau*kappa)")
    common.add_argument("--max", type=float, help="grid end")
    common.add_argument("--count", type=int, help="grid points")
    common.add_argument("--eps", type=float, help="jump weight for hybrid commands")
    common.add_argument("--truncation", type=int, default=12, help="Fock dims per mode for oracle-validate")
    common.add_argument("-v", "--verbose", action="store_true")
    for key in CONFIG_KEYS:
        common.add_argument("--" + key.replace("_", "-"), dest=key, type=float, help=f"override {key}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    logging.captureWarnings(True)
    if args.format is None:
        args.format = "json" if args.command in ("ep-locate", "oracle-validate") else "csv"
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    handler = COMMANDS[args.command][0]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationFailure as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NonConverged, NoSignChange, PrecisionLoss) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
