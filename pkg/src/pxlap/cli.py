"""Command line front end: ``pxlap {validate,solve,rates,adjoint}``.

Exit codes: 0 success, 1 solver failure, 2 violated assumption, 3 malformed config.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .adjoint import duality_norm_bound, freeze_coefficients, reciprocity_residual
from .config import ConfigError, RunConfig, load_config
from .diagnostics import (contraction_check, decay_fit, energy_inequality_ledger, gamma_exponents,
                          max_principle_check, smoothing_bound_check)
from .dynamics import StepParams, continuation_ladder, solve_trajectory
from .errors import (ConvergenceError, HypothesisError, InvalidExponentError, PxlapError,
                     UnsupportedRegimeError)
from .exponent import estimate_log_holder, exponent_bounds, make_exponent
from .initial import make_initial, random as random_field, sine
from .mesh import build_grid, write_field_csv
from .norms import lp_norm

log = logging.getLogger("pxlap")

EXIT_OK, EXIT_SOLVER, EXIT_ASSUMPTION, EXIT_CONFIG = 0, 1, 2, 3


def fmt(x):
    """Shortest round-trip decimal; ``inf`` spelled literally."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def write_json(path, obj):
    Path(path).write_text(json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])


class Setup:
    """Grid, exponent, step parameters and initial data built from a config."""

    def __init__(self, cfg: RunConfig):
        v = cfg.values
        self.cfg = cfg
        self.grid = build_grid(v["grid.n"], v["grid.extents"], v["grid.resolution"], v["grid.components"])
        spec = {k: val for k, val in cfg.section("exponent").items() if val is not None}
        self.p = make_exponent(spec, self.grid.extents, v["params.T"], v["exponent.resolution"])
        self.params = StepParams(v["params.mu"], v["params.nu"], v["params.tau"], v["params.inner_tol"],
                                 v["params.max_inner_iters"])
        init = {k: val for k, val in cfg.section("initial").items() if val is not None}
        self.u0 = make_initial(self.grid, init)


def _build(cfg):
    try:
        return Setup(cfg)
    except (InvalidExponentError, HypothesisError):
        raise
    except (ValueError, OSError, KeyError) as exc:
        raise ConfigError(str(exc)) from None


def validation_report(cfg: RunConfig) -> tuple[dict, int]:
    v = cfg.values
    report = {"valid": True, "errors": [], "warnings": []}
    try:
        setup = _build(cfg)
        p = setup.p
        pm, pp = exponent_bounds(p, resolution=v["exponent.resolution"])
    except InvalidExponentError as exc:
        report.update(valid=False, errors=[f"invalid-exponent: {exc}"])
        return report, EXIT_ASSUMPTION
    report.update(p_minus=pm, p_plus=pp, n=setup.grid.n)
    lh = estimate_log_holder(p, v["exponent.log_holder_pairs"], v["exponent.log_holder_seed"],
                             ceiling=v["exponent.log_holder_ceiling"], resolution=v["exponent.resolution"])
    report["log_holder"] = lh.to_dict()
    if not lh.accepted:
        report["errors"].append(f"log-holder: c1_hat {lh.c1_hat} exceeds ceiling {lh.ceiling}")
    if v["params.mu"] == 0.0 and pm < 2.0:
        report["errors"].append(f"singular-flux: mu = 0 needs p_minus >= 2 (p_minus = {pm})")
    if v["diagnostics.rates"]:
        n, r0 = setup.grid.n, v["diagnostics.r0"]
        gate = 2.0 * n / (n + r0)
        report["rate_gate"] = {"threshold": gate, "r0": r0}
        if not pm > gate:
            report["errors"].append(f"hypothesis: p_minus = {pm} <= 2n/(n+r0) = {gate}")
        for r in v["diagnostics.r"]:
            try:
                gamma_exponents(n, r0, r, pm, pp)
            except HypothesisError as exc:
                report["errors"].append(f"hypothesis: r = {fmt(r)}: {exc}")
            except UnsupportedRegimeError as exc:
                report["warnings"].append(f"unsupported-regime: r = {fmt(r)}: {exc}")
    report["valid"] = not report["errors"]
    return report, EXIT_OK if report["valid"] else EXIT_ASSUMPTION


def _gate(cfg):
    report, code = validation_report(cfg)
    if code != EXIT_OK:
        print(json.dumps(jsonable(report), indent=2, sort_keys=True))
        raise SystemExit(code)
    return _build(cfg)


def _snapshot_rows(traj, snapshot_times):
    keep = {0, len(traj.steps)} | {traj.step_index(s) for s in snapshot_times}
    return [(traj.step_index(t), t, u) for t, u in zip(traj.times, traj.fields) if traj.step_index(t) in keep]


def _write_run(out: Path, setup: Setup, traj, cfg: RunConfig, status="complete", message=""):
    v = cfg.values
    grid = setup.grid
    out.mkdir(parents=True, exist_ok=True)
    norms = sorted(traj.norms, key=lambda r: (r.t, r.r))
    write_csv(out / "norms.csv", ["t", "r", "norm"], [(r.t, r.r, r.value) for r in norms])
    write_csv(out / "steps.csv", ["step", "t", "inner_iters", "grad_norm", "energy"],
              [(s.step, s.t, s.inner_iters, s.grad_norm, s.energy) for s in traj.steps])
    for k, t, u in _snapshot_rows(traj, v["outputs.snapshot_times"]):
        write_field_csv(out / f"snapshot_{k:07d}.csv", grid, u)
    summary = {"status": status, "message": message, "config": cfg.canonical(),
               "steps": len(traj.steps), "t_final": traj.times[-1]}
    final = {}
    for r in v["outputs.norms"]:
        recs = [x for x in traj.norms if x.r == r]
        if recs:
            final[fmt(r)] = {"initial": recs[0].value, "final": recs[-1].value,
                             "ratio": recs[-1].value / recs[0].value if recs[0].value else None}
    summary["norms"] = final
    verdicts = {}
    tol = v["diagnostics.contraction_tol"]
    for r in v["outputs.norms"]:
        recs = [x for x in traj.norms if x.r == r]
        res = contraction_check(recs, tol)
        verdicts[fmt(r)] = {"pass": res.passed, "worst_pair": res.worst_pair}
    summary["contraction"] = verdicts
    if any(math.isinf(r) for r in v["outputs.norms"]):
        mp = max_principle_check(traj.norms, v["diagnostics.max_principle_slack"])
        summary["max_principle"] = {"pass": mp.passed, "worst_increase": mp.worst_pair}
    if v["diagnostics.ledger"] and status == "complete":
        led = energy_inequality_ledger(grid, traj, setup.p, v["diagnostics.r0"], v["diagnostics.ledger_tol"])
        write_csv(out / "ledger.csv", ["step", "t", "deriv_term", "dissipation", "residual", "pass"],
                  [(r.step, r.t, r.deriv_term, r.dissipation, r.residual, r.passed) for r in led.rows])
        summary["ledger"] = {"pass": led.passed, "r0": led.r0, "max_residual": led.max_residual,
                             "max_scaled_residual": led.max_scaled_residual}
    write_json(out / "summary.json", summary)
    return summary


def _solve(setup, cfg, dense=None, T=None):
    v = cfg.values
    norm_rs = sorted(set(v["outputs.norms"]) | {v["diagnostics.r0"]} | set(v["diagnostics.r"]))
    return solve_trajectory(setup.grid, setup.u0, setup.params, setup.p, v["params.T"] if T is None else T,
                            snapshot_times=v["outputs.snapshot_times"],
                            dense=v["params.dense_storage"] if dense is None else dense, norm_rs=norm_rs)


def cmd_validate(cfg: RunConfig, out: Path) -> int:
    report, code = validation_report(cfg)
    print(json.dumps(jsonable(report), indent=2, sort_keys=True))
    return code


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    setup = _gate(cfg)
    v = cfg.values
    if v["ladder.rungs"]:
        try:
            res = continuation_ladder(setup.grid, setup.u0, setup.params, setup.p, v["params.T"],
                                      v["ladder.rungs"], v["outputs.snapshot_times"])
        except ConvergenceError as exc:
            log.error("ladder rung failed: %s", exc)
            return EXIT_SOLVER
        for k, (traj, (mu, nu)) in enumerate(zip(res.trajectories, res.rungs)):
            rcfg = RunConfig(dict(v, **{"params.mu": mu, "params.nu": nu, "ladder.rungs": ()}), cfg.base_dir)
            _write_run(out / f"rung_{k}", setup, traj, rcfg)
        out.mkdir(parents=True, exist_ok=True)
        write_csv(out / "ladder.csv", ["t", "rung", "mu", "nu", "mu_next", "nu_next", "l2_difference"],
                  [(t, k, *res.rungs[k], *res.rungs[k + 1], d) for t, k, d in res.table])
        return EXIT_OK
    try:
        traj = _solve(setup, cfg)
    except ConvergenceError as exc:
        log.error("%s", exc)
        _write_run(out, setup, exc.trajectory, cfg, status="aborted", message=str(exc))
        return EXIT_SOLVER
    summary = _write_run(out, setup, traj, cfg)
    log.info("contraction: %s", {k: d["pass"] for k, d in summary["contraction"].items()})
    return EXIT_OK


def cmd_rates(cfg: RunConfig, out: Path) -> int:
    v = cfg.values
    cfg.values["diagnostics.rates"] = True
    setup = _gate(cfg)
    n, r0 = setup.grid.n, v["diagnostics.r0"]
    pm, pp = setup.p.p_minus, setup.p.p_plus
    try:
        traj = _solve(setup, cfg, dense=False)
    except ConvergenceError as exc:
        log.error("%s", exc)
        return EXIT_SOLVER
    reports = []
    for r in v["diagnostics.r"]:
        g = gamma_exponents(n, r0, r, pm, pp)
        rep = smoothing_bound_check(traj.norms, r, g, v["diagnostics.window"], n, r0, pm, pp)
        try:
            rep.decay_slope, rep.decay_r2 = decay_fit(traj.norms, v["diagnostics.window"], r)
        except ValueError as exc:
            log.warning("decay fit skipped for r=%s: %s", fmt(r), exc)
        reports.append(rep.to_dict())
    u0n = lp_norm(setup.grid, setup.u0, r0)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "rates.json", {"config": cfg.canonical(), "u0_norm_r0": u0n, "reports": reports})
    return EXIT_OK


def cmd_adjoint(cfg: RunConfig, out: Path) -> int:
    setup = _gate(cfg)
    v = cfg.values
    grid = setup.grid
    t = v["params.T"] if v["adjoint.t"] is None else v["adjoint.t"]
    try:
        traj = _solve(setup, cfg, dense=True, T=t)
    except ConvergenceError as exc:
        log.error("%s", exc)
        return EXIT_SOLVER
    if v["adjoint.terminal"] == "random":
        phi0 = random_field(grid, v["adjoint.seed"])
    else:
        phi0 = sine(grid)
    mu, nu = setup.params.mu, setup.params.nu
    frozen = freeze_coefficients(grid, traj, setup.p, mu, traj.times[-1])
    runs, table = [], []
    try:
        for eps in v["adjoint.epsilon"]:
            rec = reciprocity_residual(grid, traj, phi0, setup.p, mu, nu, eps, inner_tol=v["adjoint.inner_tol"])
            dual = duality_norm_bound(grid, traj, setup.p, mu, nu, v["adjoint.r0"], v["adjoint.probe_count"],
                                      v["adjoint.seed"], epsilon=eps, inner_tol=v["adjoint.inner_tol"],
                                      frozen=frozen)
            entry = rec.to_dict()
            entry["duality"] = {k: val for k, val in dual.to_dict().items() if k != "probes"}
            entry["probes"] = dual.probes
            runs.append(entry)
            table.append({"epsilon": eps, "residual": rec.residual, "gap": rec.gap,
                          "term_defect": rec.term_defect, "duality_pass": dual.passed})
    except ConvergenceError as exc:
        log.error("adjoint solve failed: %s", exc)
        return EXIT_SOLVER
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "adjoint.json", {"config": cfg.canonical(), "t": traj.times[-1], "mu": mu, "nu": nu,
                                      "runs": runs, "table": table})
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "solve": cmd_solve, "rates": cmd_rates, "adjoint": cmd_adjoint}


def build_parser():
    ap = argparse.ArgumentParser(prog="pxlap", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="flat section.key = value file, or a summary.json")
    ap.add_argument("--out", help="output directory (overrides outputs.dir)")
    ap.add_argument("--seed", type=int, help="override every seed in the config")
    ap.add_argument("--quiet", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {}
    if args.out:
        overrides["outputs.dir"] = args.out
    if args.seed is not None:
        for key in ("initial.seed", "adjoint.seed", "exponent.log_holder_seed"):
            overrides[key] = args.seed
    try:
        cfg = load_config(args.config, overrides)
        out = Path(cfg["outputs.dir"])
        return COMMANDS[args.command](cfg, out)
    except SystemExit as exc:
        return int(exc.code)
    except ConfigError as exc:
        print(json.dumps({"valid": False, "errors": [f"config: {exc}"]}, indent=2))
        return EXIT_CONFIG
    except InvalidExponentError as exc:
        print(json.dumps({"valid": False, "errors": [f"invalid-exponent: {exc}"]}, indent=2))
        return EXIT_ASSUMPTION
    except (HypothesisError, UnsupportedRegimeError) as exc:
        print(json.dumps({"valid": False, "errors": [f"hypothesis: {exc}"]}, indent=2))
        return EXIT_ASSUMPTION
    except PxlapError as exc:
        log.error("%s", exc)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
