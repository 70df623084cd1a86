"""Command-line entry point: one subcommand per verification pipeline.

Every run writes ``summary.json`` (schema 1, with the resolved config) and
its CSV tables under the output directory. Exit status is 0 when every
enabled check passes, 1 on a failed check or a numerical error and 2 on an
invalid configuration.
"""

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .asymptotics import (
    REGIONS,
    MatchedAnsatz,
    glue,
    parabolic_ansatz,
    predictions,
    residual_ladder,
    tip_consistency,
)
from .barriers import (
    build_barrier,
    lower_bound_margin,
    remainder_constant,
    required_rho_max,
    supersolution_residual,
)
from .bryant import (
    compute_C0,
    divergence_limits,
    divergence_residual,
    measure_c0,
    pressure_residual,
    solve_bryant,
)
from .config import SCHEMAS, RunConfig, _bool, build_config, environment_defaults
from .differences import fitted_exponent, sup_norm
from .exceptions import ChecksFailedError, ConfigError, FlowAbortedError, RicciLabError
from .flow import FlowConfig, convergence_study, run_flow, write_trajectory
from .io import dumps, summary_document, write_json, write_table
from .spectral import (
    Check,
    alpha_asymptotic,
    alpha_rhs,
    alpha_star,
    delta_history,
    hermite_identities,
    perturbation,
    project,
    spectral_state,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
SUMMARY_FILE = "summary.json"
SPECTRAL_SAMPLES = 4001
CONSISTENCY_TAU = -400.0
ALPHA_STEP = 1e-2

Pipeline = Callable[[Dict[str, Any], str, Callable], Tuple[Dict[str, Any], List[Check]]]


def setup_logging(level: str = "INFO", quiet: bool = False, log_file: Optional[str] = None):
    """Configure the root logger once for a command-line run."""
    handlers: List[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if log_file:
        directory = os.path.dirname(log_file)
        if directory:
            os.makedirs(directory, exist_ok=True)
        handlers.append(logging.FileHandler(log_file))
    console_level = logging.WARNING if quiet else getattr(logging, level.upper(), logging.INFO)
    logging.basicConfig(level=console_level, format=LOG_FORMAT, handlers=handlers, force=True)


@contextmanager
def worker_map(workers: int):
    """``map`` over a thread pool, or the builtin map for a single worker."""
    if workers <= 1:
        yield map
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        yield pool.map


def _check(name: str, value: float, tolerance: float, passed: bool) -> Check:
    return Check(name, float(value), float(tolerance), bool(passed))


# pipelines


def run_bryant(params: Dict[str, Any], output_dir: str, map_fn: Callable = map):
    b = solve_bryant(params["rho_max"], params["tol"])
    C0 = compute_C0(b)
    limits = divergence_limits(b)
    divergence = sup_norm(divergence_residual(b))
    far = min(30.0, b.rho_max)
    rho2Z = far**2 * float(b.Z_at(far))
    f = np.linspace(0.0, 0.2, 201)
    series_gap = sup_norm(b.Z_at(f) - (1.0 - f**2 / 6.0))
    write_table(os.path.join(output_dir, "bryant_profile.csv"), {"rho": b.rho, "Z": b.Z, "dZ": b.dZ})
    payload = {
        "C0": C0,
        "C0_truncated": compute_C0(b, tail=False, rho_cut=params["rho_cut"]),
        "c0_measured": measure_c0(b),
        "b0": b.b0,
        "rho2Z": {"rho": far, "value": rho2Z},
        "series_gap": series_gap,
        "divergence": {
            "residual_sup": divergence,
            "near": limits.near,
            "near_rho": limits.near_rho,
            "far": limits.far,
            "far_rho": limits.far_rho,
        },
        "pressure_mismatch": pressure_residual(b).mismatch,
    }
    checks = [
        _check("C0 = -1", abs(C0 + 1.0), 1e-3, abs(C0 + 1.0) < 1e-3),
        _check("rho^2 Z at rho=30 in [0.995, 1.005]", abs(rho2Z - 1.0), 5e-3, 0.995 <= rho2Z <= 1.005),
        _check("Z = 1 - f^2/6 near the tip", series_gap, 1e-4, series_gap < 1e-4),
        _check("divergence identity", divergence, 1e-4, divergence < 1e-4),
        _check("divergence functional -> 0 at the tip", abs(limits.near), 1e-2, abs(limits.near) < 1e-2),
        _check("divergence functional -> -1 at infinity", abs(limits.far + 1.0), 1e-2, abs(limits.far + 1.0) < 1e-2),
    ]
    return payload, checks


def run_barrier(params: Dict[str, Any], output_dir: str, map_fn: Callable = map):
    a_values = list(params["a"])
    bryant = solve_bryant(max(50.0, required_rho_max(max(a_values))), params["tol"])

    def one(a: float):
        curve = build_barrier(a, bryant, params["r_star"], params["n"], params["with_correction"])
        return curve, supersolution_residual(curve, params["eta"], params["u_floor"])

    entries, checks, remainders = [], [], []
    for a, (curve, result) in zip(a_values, map_fn(one, a_values)):
        write_table(
            os.path.join(output_dir, f"barrier_a{a:g}.csv"),
            {"u": curve.u, "Y": curve.Ya, "residual": result.residual},
        )
        constant = remainder_constant(curve, params["eta"])
        margin = lower_bound_margin(curve, params["eta"])
        remainders.append(constant / a**4)
        entries.append(
            {
                "a": a,
                "window": list(result.window),
                "sup": result.sup,
                "negative": result.negative,
                "verified_from": result.verified_from,
                "remainder_constant": constant,
                "lower_bound_margin": margin,
            }
        )
        checks.append(_check(f"supersolution a={a:g}", result.sup, 0.0, result.negative))
        checks.append(_check(f"lower bound a={a:g}", margin, 0.0, margin >= 0.0))
    payload: Dict[str, Any] = {"barriers": entries, "with_correction": params["with_correction"]}
    if len(a_values) >= 2:
        p = fitted_exponent(a_values, remainders)
        payload["remainder_exponent"] = p
        checks.append(_check("remainder decays like a^-4", abs(p - 4.0), 0.5, abs(p - 4.0) <= 0.5))
    return payload, checks


def run_spectral(params: Dict[str, Any], output_dir: str, map_fn: Callable = map):
    checks = hermite_identities(params["nodes"]) if params["identities"] else []
    tau = params["tau"]
    sigma = np.linspace(-params["sigma_max"], params["sigma_max"], SPECTRAL_SAMPLES)
    v = perturbation(parabolic_ansatz(sigma, tau))
    target = alpha_asymptotic(tau)
    alpha = project(sigma, v).alpha
    rel = abs(alpha / target - 1.0)
    checks = list(checks) + [_check("alpha = -1/(8|tau|) on the parabolic ansatz", rel, 1e-4, rel < 1e-4)]
    # α' by central differences over a short τ history of projections
    dtau = ALPHA_STEP * abs(tau)
    taus = tau + dtau * np.arange(-2, 3)
    history = [perturbation(parabolic_ansatz(sigma, t)) for t in taus]
    alphas = np.array([project(sigma, w).alpha for w in history])
    slope = float(np.gradient(alphas, dtau)[2])
    slope_gap = abs(slope / alpha_rhs(alphas[2]) - 1.0)
    checks.append(_check("alpha' = -8 alpha^2 by finite differences", slope_gap, 1e-3, slope_gap < 1e-3))
    deltas = delta_history([w[len(sigma) // 2] for w in history])
    state = spectral_state(sigma, v, tau, params["delta"], params["theta"])
    write_table(os.path.join(output_dir, "spectral_state.csv"), {"sigma": sigma, "v": v, "vbar": state.vbar})
    payload = {
        "alpha": alpha,
        "alpha_target": target,
        "alpha_history": {
            "tau": taus.tolist(),
            "alpha": alphas.tolist(),
            "alpha_star": alpha_star(alphas).tolist(),
            "delta": deltas.tolist(),
            "slope": slope,
        },
        "truncated": state.to_dict(),
    }
    return payload, checks


def run_flow_pipeline(params: Dict[str, Any], output_dir: str, map_fn: Callable = map):
    cfg = FlowConfig.from_params(params)
    directory = os.path.join(output_dir, "trajectory")
    try:
        traj = run_flow(cfg, output_dir=directory)
    except FlowAbortedError as e:
        if e.trajectory is not None:
            write_trajectory(e.trajectory, directory)
        raise
    checks = [_check(name, 0.0, 0.0, ok) for name, ok in traj.checks().items()]
    payload: Dict[str, Any] = {"trajectory": traj.to_dict()}
    if cfg.fixture == "sphere" and cfg.mode == "unrescaled":
        T_exact = cfg.r**2 / 4.0
        early = [p for p in traj.profiles if p.t <= 0.5 * T_exact]
        worst = max(abs(p.psi_max**2 - (cfg.r**2 - 4.0 * p.t)) / (cfg.r**2 - 4.0 * p.t) for p in early)
        payload["sphere_law_error"] = worst
        checks.append(_check("psi_max^2 = r^2 - 4t", worst, 1e-3, worst < 1e-3))
    resolutions = params.get("resolutions") or ()
    if resolutions:
        exact = cfg.r**2 / 4.0 if cfg.fixture == "sphere" else None
        study = convergence_study(cfg, resolutions, exact, map_fn)
        payload["convergence"] = study
        order = study["observed_order"]
        checks.append(_check("extinction time converges at second order", order, 1.5, order > 1.5))
    return payload, checks


def run_residual(params: Dict[str, Any], output_dir: str, map_fn: Callable = map):
    bryant = solve_bryant()
    regions = REGIONS if params["region"] == "all" else (params["region"],)
    taus = [-abs(t) for t in params["tau_ladder"]]
    ladders, checks = {}, []
    for region in regions:
        ladder = residual_ladder(
            taus, region, bryant, params["L"], params["theta"], params["n"], params["kappa_log_coeff"], map_fn
        )
        ladders[region] = ladder
        if region == "parabolic":
            p = ladder["exponent"]
            checks.append(_check("parabolic residual exponent >= 1.7", p, 1.7, p >= 1.7))
        elif region == "intermediate" and len(taus) >= 2:
            sups = ladder["sup"]
            ordered = [s for _, s in sorted(zip(np.abs(taus), sups))]
            checks.append(_check("intermediate residual decreases", ordered[-1], ordered[0], ordered[-1] < ordered[0]))

    payload: Dict[str, Any] = {"ladders": ladders}
    deepest = min(taus)
    a = MatchedAnsatz(
        tau=deepest, parabolic_L=params["L"], theta=params["theta"], kappa_log_coeff=params["kappa_log_coeff"]
    )
    glued = glue(a, bryant, params["n"])
    write_table(os.path.join(output_dir, "matched_profile.csv"), {"sigma": glued.profile.sigma, "u": glued.profile.u})
    if "tip" in regions:
        tau = CONSISTENCY_TAU if CONSISTENCY_TAU in taus else deepest
        a = MatchedAnsatz(
            tau=tau, parabolic_L=params["L"], theta=params["theta"], kappa_log_coeff=params["kappa_log_coeff"]
        )
        report = tip_consistency(a, bryant, params["delta"], n=params["n"])
        payload["tip_consistency"] = {"tau": tau, **report.to_dict()}
        checks.extend(report.checks)
        ratio = report.diameter_ratio
        checks.append(_check("sigma_+/(2 sqrt|tau|) in [0.9, 1.1]", ratio, 0.1, 0.9 <= ratio <= 1.1))
    return payload, checks


def run_predict(params: Dict[str, Any], output_dir: str, map_fn: Callable = map):
    rows = [predictions(t) for t in params["t"]]
    write_table(
        os.path.join(output_dir, "predictions.csv"),
        {name: [getattr(r, name) for r in rows] for name in ("t", "k", "d", "tau", "kappa", "kappa_gap")},
    )
    ordered = sorted(rows, key=lambda r: abs(r.t))
    increasing = all(b.d > a.d for a, b in zip(ordered, ordered[1:]))
    payload = {"predictions": [r._asdict() for r in rows]}
    return payload, [_check("diameter increases with |t|", 0.0, 0.0, increasing)]


PIPELINES: Dict[str, Pipeline] = {
    "bryant": run_bryant,
    "barrier": run_barrier,
    "spectral": run_spectral,
    "flow": run_flow_pipeline,
    "residual": run_residual,
    "predict": run_predict,
}


def dispatch(cfg: RunConfig, workers: int = 1) -> Dict[str, Any]:
    """Run one pipeline and write its summary.

    Returns:
        The summary text and the list of checks.

    Raises:
        ChecksFailedError: After the summary is written, when a check fails.
    """
    os.makedirs(cfg.output_dir, exist_ok=True)
    logger.info(f"Running {cfg.command} into {cfg.output_dir}")
    with worker_map(workers) as map_fn:
        payload, checks = PIPELINES[cfg.command](dict(cfg.params), cfg.output_dir, map_fn)
    failed = [c.name for c in checks if not c.passed]
    payload = dict(payload)
    payload["command"] = cfg.command
    payload["checks"] = [c._asdict() for c in checks]
    payload["passed"] = not failed
    write_json(os.path.join(cfg.output_dir, SUMMARY_FILE), payload, cfg.provenance())
    for name in failed:
        logger.error(f"Check failed: {name}")
    document = summary_document(payload, cfg.provenance())
    result = {"text": dumps(document), "checks": checks}
    if failed:
        raise ChecksFailedError(f"{len(failed)} of {len(checks)} checks failed", failed, result)
    return result


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ricci-ovals", description="Numerical laboratory for Ricci flow ovals on S3")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command, schema in SCHEMAS.items():
        sub = subparsers.add_parser(command, help=f"run the {command} pipeline")
        sub.add_argument("--config", help="key-value config file; flags override its values")
        sub.add_argument("--output-dir", help="directory for summary.json and CSV tables")
        sub.add_argument("--workers", type=int, default=1, help="worker threads for sweeps")
        sub.add_argument("--quiet", action="store_true", help="only log warnings and errors")
        sub.add_argument("--json-only", action="store_true", help="print only the JSON summary")
        sub.add_argument("--log-level", default=None, help="console log level")
        for name, param in schema.items():
            flag = "--" + name.replace("_", "-")
            if param.kind is _bool:
                sub.add_argument(flag, dest=name, nargs="?", const="true", default=None)
            else:
                sub.add_argument(flag, dest=name, default=None)
        if command == "flow":
            sub.add_argument("--n-sigma", dest="n", default=None)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    env = environment_defaults()
    setup_logging(args.log_level or env.get("log_level", "INFO"), args.quiet or args.json_only, env.get("log_file"))

    overrides = {name: getattr(args, name, None) for name in SCHEMAS[args.command]}
    try:
        cfg = build_config(args.command, overrides, args.config, args.output_dir)
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        return 2

    passed = True
    try:
        result = dispatch(cfg, args.workers)
    except ChecksFailedError as e:
        result, passed = e.result, False
    except (ConfigError, ValueError) as e:
        logger.error(f"Configuration error: {e}")
        return 2
    except RicciLabError as e:
        logger.error(f"{cfg.command} failed: {e}")
        return 1

    if args.json_only:
        print(result["text"], end="")
    elif not args.quiet:
        for c in result["checks"]:
            status = "PASS" if c.passed else "FAIL"
            print(f"{status}  {c.name}  ({c.value:.3e}, tolerance {c.tolerance:g})")
        print(f"Summary written to {os.path.join(cfg.output_dir, SUMMARY_FILE)}")
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
