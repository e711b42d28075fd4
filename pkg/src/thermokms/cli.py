"""Command-line front end.

Exit codes: 0 on success, 1 when a computed residual exceeds its tolerance,
2 on configuration errors.  All artifacts are assembled in a fixed order and
written with :mod:`thermokms.serialize`, so equal configs and seeds give
byte-identical files.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, field, replace

from . import __version__
from .algebra import (
    StateFunctional,
    battery_functions,
    check_budget,
    kms_battery,
    relation_suite,
    state_axioms_check,
    uniqueness_probe,
    GeneratorTerm,
)
from .config import RNG_NAME, RunConfig, load_config, parse_beta_list, parse_function, parse_grid
from .errors import (
    CapacityError,
    ConfigError,
    ConvergenceError,
    DepthError,
    ParameterError,
    PositivityError,
)
from .ff import FFParams, eigen_residuals, ff_eigenfunction, ff_eigenmeasure, ff_potential, ff_pressure
from .gibbs import is_normalized, thermo_table
from .measures import CylinderMeasure
from .serialize import csv_text, decode, dumps, loads, read_csv
from .transfer import beta_weight, leading_triple

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_CONFIG = 2


@dataclass
class RunResult:
    """Exit status plus the artifacts (file name -> text) in write order."""

    status: int
    artifacts: dict = field(default_factory=dict)
    messages: list = field(default_factory=list)


# -- commands -----------------------------------------------------------------


def _check_depths(cfg):
    for name in ("H", "p"):
        f = getattr(cfg, name)
        if f is not None and f.depth > cfg.depth:
            raise ConfigError(f"{name} has depth {f.depth} > working depth {cfg.depth}")


def cmd_spectrum(cfg):
    _check_depths(cfg)
    t = leading_triple(beta_weight(cfg.H, cfg.beta), cfg.depth, cfg.solver_tol)
    report = {
        "beta": cfg.beta,
        "lambda": t.eigenvalue,
        "pressure": t.pressure,
        "h": t.eigenfunction,
        "nu": t.eigenmeasure,
        "iterations": t.iterations,
        "residual": max(t.residual, t.residual_dual),
    }
    return RunResult(EXIT_OK, {"spectrum.json": dumps(report)})


def cmd_pressure_curve(cfg):
    _check_depths(cfg)
    rows = thermo_table(cfg.H, cfg.beta_values(), cfg.depth, cfg.solver_tol)
    text = csv_text(["beta", "pressure", "lambda", "entropy", "energy"], rows)
    return RunResult(EXIT_OK, {"pressure_curve.csv": text})


def _failure_dict(a, b, r):
    return {"a": a, "b": b, "residual": r}


def cmd_kms_verify(cfg):
    _check_depths(cfg)
    H, p, D = cfg.H, cfg.jacobian, cfg.depth
    if not is_normalized(p):
        raise ConfigError("p is not a normalized Jacobian: L_p 1 != 1")
    funcs = battery_functions(cfg.k, min(2, D))
    probe = GeneratorTerm(funcs[-1], cfg.battery_levels, funcs[-1])
    triple = leading_triple(beta_weight(H, cfg.beta), D, cfg.solver_tol)
    psi = StateFunctional(triple.eigenmeasure, p)
    try:
        check_budget(probe, psi.context)
    except DepthError as exc:
        raise ConfigError(f"battery does not fit depth {D}: {exc}") from exc

    battery = kms_battery(psi, H, cfg.beta, funcs, cfg.battery_levels, cfg.tol)

    rel_depth = min(D, 5)
    rel = relation_suite(p, rel_depth, seed=cfg.seed)
    rel_max = max(rel.values()) if rel else 0.0

    steps = max(0, min(cfg.probe_steps, D - max(H.depth, p.depth, 1) + 1))
    start = CylinderMeasure.uniform(cfg.k, D)
    prof = uniqueness_probe(H, cfg.beta, start, steps, p, triple.eigenmeasure)
    final_tv = prof[-1][1]

    axioms = state_axioms_check(psi, trials=cfg.axiom_trials, seed=cfg.seed)

    violations = []
    if battery.max_residual > cfg.tol:
        violations.append({"check": "kms_battery", "residual": battery.max_residual, "tol": cfg.tol})
    if rel_max > cfg.relation_tol:
        worst = max(rel, key=rel.get)
        violations.append({"check": f"relation:{worst}", "residual": rel_max, "tol": cfg.relation_tol})
    if final_tv > cfg.probe_tol:
        violations.append({"check": "uniqueness_probe", "residual": final_tv, "tol": cfg.probe_tol})
    if not axioms["passed"]:
        violations.append({"check": "state_axioms", "residual": axioms["max_adjoint_defect"], "tol": 1e-10})

    report = {
        "beta": cfg.beta,
        "battery_size": battery.battery_size,
        "max_residual": battery.max_residual,
        "failures": [_failure_dict(a, b, r) for a, b, r in battery.failures],
        "tol": cfg.tol,
        "k": cfg.k,
        "depth": D,
        "rng": RNG_NAME,
        "seed": cfg.seed,
        "eigenvalue": triple.eigenvalue,
        "relation_suite": {
            "depth": rel_depth,
            "residuals": {key: rel[key] for key in sorted(rel)},
            "max_residual": rel_max,
            "tol": cfg.relation_tol,
        },
        "uniqueness_probe": {
            "start": "uniform",
            "steps": [{"n": n, "tv": tv, "normalizer": z} for n, tv, z in prof],
            "final_tv": final_tv,
            "tol": cfg.probe_tol,
        },
        "state_axioms": axioms,
        "violations": violations,
        "passed": not violations,
    }
    messages = [f"violated {v['check']}: residual {v['residual']:.3e} > tol {v['tol']:.1e}" for v in violations]
    status = EXIT_TOLERANCE if violations else EXIT_OK
    return RunResult(status, {"kms_report.json": dumps(report)}, messages)


def cmd_ff(cfg):
    try:
        params = FFParams(cfg.ff_gamma, cfg.ff_kmax, cfg.ff_tol)
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    rows = [(b, ff_pressure(params, b)) for b in cfg.ff_betas]
    nu = ff_eigenmeasure(params)
    ef = ff_eigenfunction(params, nu)
    pot = ff_potential(params)
    resid = float(eigen_residuals(params, pot, ef).max())
    summary = {
        "gamma": params.gamma,
        "kmax": params.k_max,
        "tol": params.tol,
        "zeta_gamma": params.zeta,
        "zeta_gamma_minus_1": params.zeta / ef.u,
        "u": ef.u,
        "nu_masses": nu.partition_masses[:20],
        "mass_deficit": pot.mass_deficit,
        "mass_tail_bound": params.mass_tail_bound,
        "eigen_residual": resid,
    }
    messages = []
    status = EXIT_OK
    if resid > params.tol:
        status = EXIT_TOLERANCE
        messages.append(f"violated ff_eigenfunction: residual {resid:.3e} > tol {params.tol:.1e}")
    arts = {"ff_pressure.csv": csv_text(["beta", "pressure"], rows), "ff_summary.json": dumps(summary)}
    return RunResult(status, arts, messages)


def cmd_export(path):
    """Validate and re-serialize a JSON or CSV artifact in canonical form."""
    if not os.path.isfile(path):
        raise ConfigError(f"artifact not found: {path}")
    name = os.path.basename(path)
    if path.endswith(".csv"):
        try:
            header, rows = read_csv(path)
        except (ValueError, IndexError) as exc:
            raise ConfigError(f"cannot read CSV {path}: {exc}") from exc
        return RunResult(EXIT_OK, {name: csv_text(header, rows)})
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        obj = decode(loads(text))
    except ValueError as exc:
        raise ConfigError(f"cannot read artifact {path}: {exc}") from exc
    return RunResult(EXIT_OK, {name: dumps(obj)})


COMMANDS = {
    "spectrum": cmd_spectrum,
    "pressure-curve": cmd_pressure_curve,
    "kms-verify": cmd_kms_verify,
    "ff": cmd_ff,
}


def run(command, config):
    """Run ``command`` on ``config``; never raises for expected failures."""
    try:
        if command == "export":
            return cmd_export(config)
        if command not in COMMANDS:
            raise ConfigError(f"unknown command {command!r}")
        return COMMANDS[command](config)
    except (ConfigError, ParameterError, PositivityError, CapacityError, DepthError) as exc:
        return RunResult(EXIT_CONFIG, messages=[f"config error: {exc}"])
    except ConvergenceError as exc:
        return RunResult(EXIT_TOLERANCE, messages=[f"violated convergence: residual {exc.residual:.3e}"])


# -- argument parsing ---------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", default=argparse.SUPPRESS, help="JSON run config")
    common.add_argument("--out", metavar="DIR", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="verification tolerance")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--k", type=int, default=argparse.SUPPRESS, help="number of symbols")
    model.add_argument("--depth", type=int, default=argparse.SUPPRESS, help="working cylinder depth")
    model.add_argument("--H", dest="H", default=argparse.SUPPRESS, help="potential values, comma separated")
    model.add_argument("--beta", type=float, default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="thermokms", parents=[common], description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("spectrum", parents=[common, model], help="leading eigen-triple and pressure")
    pc = sub.add_parser("pressure-curve", parents=[common, model], help="pressure/entropy/energy over a beta grid")
    pc.add_argument("--beta-grid", default=argparse.SUPPRESS, help="start:stop:count or b1,b2,...")
    kv = sub.add_parser("kms-verify", parents=[common, model], help="relations, KMS battery, uniqueness probe")
    kv.add_argument("--p", dest="p", default=argparse.SUPPRESS, help="reference Jacobian values")
    kv.add_argument("--n-max", type=int, default=argparse.SUPPRESS, help="largest level in the battery")
    kv.add_argument("--probe-steps", type=int, default=argparse.SUPPRESS)
    ff = sub.add_parser("ff", parents=[common], help="renewal-type potential with a phase transition")
    ff.add_argument("--gamma", type=float, default=argparse.SUPPRESS)
    ff.add_argument("--beta-grid", default=argparse.SUPPRESS, help="b1,b2,... or start:stop:count")
    ff.add_argument("--kmax", type=int, default=argparse.SUPPRESS)
    ex = sub.add_parser("export", parents=[common], help="re-serialize an artifact canonically")
    ex.add_argument("artifact", help="JSON or CSV file to rewrite")
    return parser


def _betas_from_flag(text):
    if ":" in text:
        return tuple(parse_grid(text).values())
    return parse_beta_list(text)


def config_from_args(args):
    opts = vars(args)
    cfg = load_config(opts["config"]) if "config" in opts else RunConfig()
    k = opts.get("k", cfg.k)
    kw = {key: opts.get(key) for key in ("out", "seed", "depth", "beta")}
    if k != cfg.k:
        # potentials from the config live on the old alphabet; fall back to defaults
        kw.update(k=k, H=None, p=None)
    if "H" in opts:
        kw["H"] = parse_function(_split(opts["H"]), k, what="H")
    if "p" in opts:
        kw["p"] = parse_function(_split(opts["p"]), k, what="p")
    kw["battery_levels"] = opts.get("n_max")
    kw["probe_steps"] = opts.get("probe_steps")
    if args.command == "ff":
        kw.update(ff_tol=opts.get("tol"), ff_gamma=opts.get("gamma"), ff_kmax=opts.get("kmax"))
        if "beta_grid" in opts:
            kw["ff_betas"] = _betas_from_flag(opts["beta_grid"])
    else:
        kw["tol"] = opts.get("tol")
        if "beta_grid" in opts:
            kw["betas"] = _betas_from_flag(opts["beta_grid"])
    keep = {"H", "p"} if k != cfg.k else set()
    kw = {key: v for key, v in kw.items() if v is not None or key in keep}
    return replace(cfg, **kw)


def _split(text):
    return [s for s in text.split(",") if s.strip()]


def write_artifacts(result, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, text in result.artifacts.items():
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        paths.append(path)
    return paths


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, matching the config-error code
        return int(exc.code) if exc.code is not None else EXIT_CONFIG
    try:
        cfg = config_from_args(args)
    except (ConfigError, ParameterError, PositivityError, DepthError, CapacityError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "export":
        result = run("export", args.artifact)
    else:
        result = run(args.command, cfg)
    for msg in result.messages:
        print(msg, file=sys.stderr)
    if result.status == EXIT_CONFIG:
        return EXIT_CONFIG
    for path in write_artifacts(result, cfg.out):
        print(path)
    return result.status


if __name__ == "__main__":
    sys.exit(main())
