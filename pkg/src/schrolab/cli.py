"""Command line entry point: ``schrolab CONFIG SUBCOMMAND [--set key=value ...]``.

Exit codes: 0 when every verdict passes, 1 when a verification fails,
2 for configuration or regime errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import asymptotics, evolution, kernel
from .barrier import BarrierFunction, residual_ratio
from .config import RunConfig
from .errors import (EmptySample, FitFailure, InvalidConfig, RegimeViolation, SchrolabError,
                     TruncationWarning, UnresolvedScale)
from .grid import assemble_mode, build_grid
from .operator import verify_coefficient_inequalities, verify_okazawa
from .report import to_plain
from .spectral import SolverConfig, full_decomposition, richardson_extrapolate

SUBCOMMANDS = ("spectrum", "eigfun", "asymptotics", "kernel-eval", "kernel-verify", "evolve",
               "resolvent", "inequalities", "report")
SLOPE_TOL = 0.15
CK_TOL = 1e-8
SYMMETRY_TOL = 1e-12
RESOLVENT_TOL = 1e-10
CROSS_VALIDATION_TOL = 1e-3


class Outcome:
    """Collects named verdicts; the first failure is what the CLI reports."""

    def __init__(self):
        self.verdicts = []

    def add(self, name: str, passed: bool, where=None):
        self.verdicts.append({"name": name, "pass": bool(passed), "where": where})
        return passed

    @property
    def passed(self) -> bool:
        return all(v["pass"] for v in self.verdicts)

    def first_failure(self):
        return next((v for v in self.verdicts if not v["pass"]), None)


# ---- output helpers ------------------------------------------------------------

def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{v:.17g}" if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _write(cfg: RunConfig, name: str, payload: dict, table=None) -> Path:
    """Write ``name.json`` (reports) or ``name.csv`` plus ``name.meta.json`` (tables)."""
    out = Path(cfg.output["directory"])
    out.mkdir(parents=True, exist_ok=True)
    payload = {"subcommand": name, "config": cfg.resolved(), **payload}
    if table is not None and cfg.output["format"] == "csv":
        header, rows = table
        path = out / f"{name}.csv"
        path.write_text(_csv_text(header, rows))
        (out / f"{name}.meta.json").write_text(json.dumps(to_plain(payload), indent=2) + "\n")
        return path
    if table is not None:
        header, rows = table
        payload["table"] = {"columns": list(header), "rows": [list(r) for r in rows]}
    path = out / f"{name}.json"
    path.write_text(json.dumps(to_plain(payload), indent=2) + "\n")
    return path


def _decomposition(cfg: RunConfig, l_max=None, n_per_mode=None, n_cells=None, truncation_tol=None):
    solver = cfg.solver()
    if truncation_tol is not None:
        solver = SolverConfig(solver.n_cells, solver.r_max, solver.grading, float(truncation_tol))
    grid = solver.grid(cfg.params, n_cells)
    return full_decomposition(cfg.params, grid,
                              cfg.spectral["l_max"] if l_max is None else l_max,
                              cfg.spectral["n_per_mode"] if n_per_mode is None else n_per_mode)


def parse_point(text: str, dim: int) -> np.ndarray:
    """'r:theta' (polar, angle from the first axis in the first coordinate plane) or 'x,y,...'."""
    text = text.strip()
    if ":" in text:
        r, theta = (float(v) for v in text.split(":"))
        p = np.zeros(dim)
        if dim == 1:
            p[0] = r * (1.0 if math.cos(theta) >= 0 else -1.0)
        else:
            p[0], p[1] = r * math.cos(theta), r * math.sin(theta)
        return p
    p = np.array([float(v) for v in text.split(",")])
    if p.size != dim:
        raise InvalidConfig(f"point '{text}' has {p.size} coordinates, expected {dim}")
    return p


# ---- subcommands ----------------------------------------------------------------

def cmd_spectrum(cfg, args, outcome):
    decomp = _decomposition(cfg)
    coarse = _decomposition(cfg, n_cells=decomp.grid.n_cells // 2)
    rows = []
    for mode, cmode, mult in zip(decomp.modes, coarse.modes, decomp.multiplicities()):
        for n, lam in enumerate(mode.eigenvalues):
            _, err = richardson_extrapolate(float(cmode.eigenvalues[n]), float(lam))
            rows.append((mode.ell, n, float(lam), err, mult))
    rows.sort(key=lambda row: (-row[2], row[0], row[1]))
    outcome.add("ground_state_in_radial_mode", decomp.lambda0 == decomp.modes[0].eigenvalues[0])
    outcome.add("eigenvalues_negative", all(row[2] < 0 for row in rows))
    return _write(cfg, "spectrum", {"lambda0": decomp.lambda0, "metadata": decomp.metadata},
                  (("ell", "n", "eigenvalue", "error_estimate", "multiplicity"), rows))


def cmd_eigfun(cfg, args, outcome):
    decomp = _decomposition(cfg, l_max=0)
    r = decomp.grid.nodes
    phi = decomp.phi0
    outcome.add("ground_state_positive", bool(np.all(phi > 0)))
    log_f0 = np.full(r.size, np.nan)
    far = r >= 1.0
    log_f0[far] = BarrierFunction(cfg.params, 0.0).log_value(r[far])
    rows = [(float(ri), float(pi), float(np.exp(lf)) if np.isfinite(lf) else "",
             float(pi / np.exp(lf)) if np.isfinite(lf) else "")
            for ri, pi, lf in zip(r, phi, log_f0)]
    return _write(cfg, "eigfun", {"lambda0": decomp.lambda0, "metadata": decomp.metadata},
                  (("r", "phi0", "f0", "phi0_over_f0"), rows))


def _asymptotics_table(decomp):
    params = decomp.params
    r = decomp.grid.nodes
    keep = (r >= 1.0) & (r <= 0.7 * decomp.grid.r_max)
    r = r[keep]
    phi = decomp.phi0[keep]
    f0 = np.exp(BarrierFunction(params, 0.0).log_value(r))
    h0 = np.where(r >= 2.0, residual_ratio(params, 0.0, np.maximum(r, 2.0)), np.nan)
    rows = [(float(a), float(b), float(c), float(c / b), float(d) if np.isfinite(d) else "")
            for a, b, c, d in zip(r, f0, phi, h0)]
    return ("r", "f_lambda", "phi", "ratio", "h_lambda"), rows


def run_asymptotics(cfg, outcome, with_table: bool = False):
    a = cfg.asymptotics
    decomp = _decomposition(cfg, l_max=0, n_per_mode=int(a["n_modes"]), n_cells=int(a["n_cells"]),
                            truncation_tol=float(a["truncation_tol"]))
    out = {"lambda0": decomp.lambda0, "r_max": decomp.grid.r_max}
    sw = asymptotics.sandwich_check(decomp)
    out["sandwich"] = sw.to_dict()
    outcome.add(sw.name, sw.passed, sw.sample)
    if "spread" in sw.constants:
        outcome.add("sandwich_spread_at_most_10", sw.constants["spread"] <= 10.0, sw.sample)
    gr = asymptotics.gradient_ratio_check(decomp)
    rel = abs(gr["terminal_ratio"] / gr["limit_stated"] - 1.0)
    gr["relative_deviation_from_stated_limit"] = rel
    out["gradient_ratio"] = gr
    outcome.add("gradient_ratio_limit", rel <= float(a["gradient_tol"]),
                {"r": gr["terminal_radius"], "ratio": gr["terminal_ratio"], "expected": gr["limit_stated"]})
    if cfg.params.regime().kernel_estimates:
        out["decay"] = []
        for j in range(int(a["n_modes"])):
            rep = asymptotics.eigenfunction_decay_check(decomp, j)
            out["decay"].append(rep.to_dict())
            outcome.add(rep.name, rep.passed, rep.sample)
    else:
        out["decay"] = "skipped: needs N>2, 0≤α<2, β>2"
    if with_table:
        return out, _asymptotics_table(decomp)
    return out


def cmd_asymptotics(cfg, args, outcome):
    out, table = run_asymptotics(cfg, outcome, with_table=True)
    return _write(cfg, "asymptotics", out, table)


def _kernel_evaluator(cfg, refined=False):
    k = cfg.kernel
    decomp = _decomposition(cfg, l_max=int(k["l_max"]), n_per_mode=int(k["n_per_mode"]))
    ev = kernel.KernelEvaluator(decomp)
    return ev, (kernel.KernelEvaluator(decomp.refined()) if refined else None)


def cmd_kernel_eval(cfg, args, outcome):
    if args.t is None or args.x is None or args.y is None:
        raise InvalidConfig("kernel-eval needs --t, --x and --y")
    ev, _ = _kernel_evaluator(cfg)
    dim = cfg.params.dim
    rows = []
    for t in args.t:
        for xs in args.x:
            for ys in args.y:
                x, y = parse_point(xs, dim), parse_point(ys, dim)
                rx, ry, c = kernel._cosines(x, y)
                kv = ev.evaluate(float(t), rx, ry, c)
                k_mu = float(kv.value[0])
                green = bool(kv.green[0])
                outcome.add("tail_monitor", green, {"t": t, "x": xs, "y": ys})
                rows.append((float(t), xs, ys, k_mu, k_mu / float(cfg.params.a(ry[0])),
                             float(kv.monitor[0]), int(green)))
    return _write(cfg, "kernel-eval", {"lambda0": ev.lambda0},
                  (("t", "x", "y", "k_mu", "k", "monitor", "green"), rows))


def run_kernel_verify(cfg, outcome) -> dict:
    params = cfg.params
    if not params.regime().kernel_estimates:
        raise RegimeViolation(
            "kernel estimates are claimed only for N>2, 0≤α<2, β>2 "
            f"(got N={params.dim}, α={params.effective_alpha}, β={params.beta})",
            params=params, precondition="β>2")
    k = cfg.kernel
    seed = int(k["seed"])
    ev, fine = _kernel_evaluator(cfg, refined=True)
    out = {"lambda0": ev.lambda0, "l_max": ev.l_max, "n_per_mode": ev.decomp.n_per_mode}

    sym = kernel.symmetry_check(ev, int(k["n_samples"]), seed=seed)
    out["symmetry"] = sym
    outcome.add("symmetry", sym <= SYMMETRY_TOL, {"max_relative_asymmetry": sym})
    pos = kernel.positivity_check(ev, int(k["n_samples"]), seed=seed)
    out["positivity"] = pos
    outcome.add("positivity", pos["pass"], pos["first_violation"])
    ck, det = kernel.chapman_kolmogorov_check(ev, 0.25, 0.25, n_pairs=int(k["ck_pairs"]), seed=seed,
                                              return_details=True)
    out["chapman_kolmogorov"] = {"t": 0.25, "s": 0.25, "max_relative_error": ck,
                                 "n_pairs": det["n_pairs"], "n_scored": det["n_scored"]}
    outcome.add("chapman_kolmogorov", ck <= CK_TOL, {"max_relative_error": ck})

    diag = kernel.diag_lower_check(ev, refined=fine)
    out["on_diagonal"] = diag.to_dict()
    outcome.add(diag.name, diag.passed, diag.details.get("per_t_argmin_radius"))

    b = float(k["b_factor"]) * (params.beta + 2.0) / (params.beta - 2.0)
    t_values = np.geomspace(float(k["t_min"]), float(k["t_max"]), int(k["n_t"]))
    try:
        up = kernel.upper_bound_fit(ev, b=b, t_values=t_values, n_diag=int(k["n_diag"]),
                                    n_pairs=int(k["n_pairs"]), seed=seed, refined=fine)
        out["upper_bound"] = up.to_dict()
        outcome.add(up.name, up.passed, up.details)
    except (FitFailure, EmptySample) as exc:
        out["upper_bound"] = {"error": str(exc)}
        outcome.add("kernel_upper_bound", False, str(exc))

    try:
        sl = kernel.ultracontractivity_slope(ev)
        sl_fine = kernel.ultracontractivity_slope(fine)
        target = -params.dim / 2.0
        out["ultracontractivity"] = {"slope": sl.slope, "slope_refined": sl_fine.slope,
                                     "expected": target, "t": sl.t, "sup": sl.sup_values}
        outcome.add("ultracontractivity_slope", abs(sl.slope - target) <= SLOPE_TOL,
                    {"slope": sl.slope, "expected": target})
    except UnresolvedScale as exc:
        out["ultracontractivity"] = {"error": str(exc)}
        outcome.add("ultracontractivity_slope", False, str(exc))

    mass = kernel.mass_dissipation_check(ev.decomp)
    out["mass_dissipation"] = mass
    outcome.add("mass_dissipation", mass["pass"], mass)
    out["long_time_slope"] = {"slope": kernel.long_time_slope(ev), "lambda0": ev.lambda0}
    return out


def cmd_kernel_verify(cfg, args, outcome):
    return _write(cfg, "kernel-verify", run_kernel_verify(cfg, outcome))


def make_datum(selector: str, grid, decomp=None) -> np.ndarray:
    selector = str(selector)
    if selector == "gaussian":
        return evolution.gaussian_datum(grid)
    if selector == "bump":
        return evolution.bump_datum(grid)
    if selector.startswith("eigenmode:"):
        n = int(selector.split(":", 1)[1])
        if decomp is None or n >= decomp.modes[0].n_modes:
            raise InvalidConfig(f"eigenmode {n} not available")
        return evolution.eigenmode_datum(decomp, n)
    if selector.startswith("csv:"):
        path = Path(selector.split(":", 1)[1])
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if data.shape[1] < 2:
            raise InvalidConfig(f"{path} needs columns r,value")
        return np.interp(grid.nodes, data[:, 0], data[:, 1], right=0.0)
    raise InvalidConfig(f"unknown datum selector '{selector}' (gaussian | bump | eigenmode:n | csv:path)")


def run_evolve(cfg, outcome) -> tuple:
    e = cfg.evolve
    ell = int(e["ell"])
    decomp = _decomposition(cfg, l_max=ell, n_per_mode=max(8, cfg.spectral["n_per_mode"]))
    matrix = assemble_mode(cfg.params, decomp.grid, ell)
    f0 = make_datum(e["datum"], decomp.grid, decomp if ell == 0 else None)
    t_final = float(e["t_final"])
    ctrl = evolution.StepControl(tol=float(e["tol"]))
    state = evolution.evolve(evolution.EvolutionState(0.0, f0, ell), matrix, t_final, ctrl)
    exact = evolution.spectral_evolution(matrix, f0, t_final)
    err = evolution.mu_norm(matrix, state.profile - exact) / evolution.mu_norm(matrix, exact)
    norms = np.array([n for _, n in state.norm_history])
    monotone = bool(np.all(np.diff(norms) <= 1e-14 * norms[0]))
    energy_ok = bool(all(en <= 0 for _, en in state.energy_history))
    outcome.add("cross_validation", err <= CROSS_VALIDATION_TOL, {"t": t_final, "error": err})
    outcome.add("norm_monotone", monotone)
    outcome.add("energy_nonpositive", energy_ok)
    if np.all(f0 >= 0):
        outcome.add("positivity_preserved",
                    bool(np.all(state.profile >= -1e-10 * np.max(np.abs(f0)))))
    summary = {"t_final": t_final, "relative_l2mu_error": err, "n_steps": state.n_steps,
               "n_rejected": state.n_rejected, "norm_monotone": monotone,
               "decay_envelope": evolution.decay_envelope_ok(state, float(matrix_top(matrix)))}
    rows = [(float(r), float(a), float(b), float(c))
            for r, a, b, c in zip(decomp.grid.nodes, f0, state.profile, exact)]
    return summary, (("r", "u0", "u_evolved", "u_spectral"), rows)


def matrix_top(matrix) -> float:
    return float(evolution.matrix_spectrum(matrix).max())


def cmd_evolve(cfg, args, outcome):
    summary, table = run_evolve(cfg, outcome)
    return _write(cfg, "evolve", summary, table)


def run_resolvent(cfg, outcome) -> tuple:
    rc = cfg.resolvent
    grid = cfg.solver().grid(cfg.params)
    matrix = assemble_mode(cfg.params, grid, 0)
    dense = bool(rc["dense"]) and matrix.dimension <= evolution.DENSE_RESOLVENT_LIMIT
    sweep = evolution.hille_yosida_sweep(matrix, float(rc["omega"]), float(rc["tau_max"]),
                                         int(rc["n_samples"]), dense=dense)
    fine = assemble_mode(cfg.params, build_grid(cfg.params, 2 * grid.n_cells, grid.r_max, grid.grading), 0)
    sweep_fine = evolution.hille_yosida_sweep(fine, float(rc["omega"]), float(rc["tau_max"]),
                                              int(rc["n_samples"]))
    stability = abs(sweep_fine["sup"] / sweep["sup"] - 1.0)
    outcome.add("hille_yosida_closed_form", sweep["max_rel_deviation"] <= RESOLVENT_TOL,
                {"max_rel_deviation": sweep["max_rel_deviation"]})
    outcome.add("hille_yosida_sup_stable", math.isfinite(sweep["sup"]) and stability <= 0.05,
                {"sup": sweep["sup"], "sup_refined": sweep_fine["sup"]})
    summary = {"sup": sweep["sup"], "sup_refined": sweep_fine["sup"], "refinement_change": stability,
               "max_rel_deviation": sweep["max_rel_deviation"], "lambda0": sweep["lambda0"],
               "method": sweep["method"]}
    rows = list(zip(sweep["re"], sweep["im"], sweep["norm"], sweep["hy_product"]))
    return summary, (("re", "im", "norm", "hy_product"), rows)


def cmd_resolvent(cfg, args, outcome):
    summary, table = run_resolvent(cfg, outcome)
    return _write(cfg, "resolvent", summary, table)


def run_inequalities(cfg, outcome) -> dict:
    coeff = verify_coefficient_inequalities(cfg.params)
    ok = verify_okazawa(cfg.params)
    outcome.add("gradient_a", coeff.gradient_a.passed, {"r": coeff.gradient_a.worst_radius})
    outcome.add("log_gradient_xi", coeff.log_gradient_xi.passed, {"r": coeff.log_gradient_xi.worst_radius})
    outcome.add("okazawa", ok.passed, {"r": ok.worst_radius})
    return {"coefficients": coeff.to_dict(), "okazawa": ok.to_dict()}


def cmd_inequalities(cfg, args, outcome):
    return _write(cfg, "inequalities", run_inequalities(cfg, outcome))


def cmd_report(cfg, args, outcome):
    regime = cfg.params.regime()
    out = {"regime": regime.__dict__, "inequalities": run_inequalities(cfg, outcome)}
    if regime.discrete_spectrum:
        decomp = _decomposition(cfg)
        out["spectrum"] = {"lambda0": decomp.lambda0,
                           "pooled_top": decomp.pooled_eigenvalues(expand=False)[:10]}
        out["asymptotics"] = run_asymptotics(cfg, outcome)
        out["evolve"] = run_evolve(cfg, outcome)[0]
        out["resolvent"] = run_resolvent(cfg, outcome)[0]
    else:
        out["spectrum"] = "skipped: needs β>0"
    if regime.kernel_estimates:
        out["kernel"] = run_kernel_verify(cfg, outcome)
    else:
        out["kernel"] = "skipped: needs N>2, 0≤α<2, β>2"
    out["verdicts"] = outcome.verdicts
    return _write(cfg, "report", out)


COMMANDS = {
    "spectrum": cmd_spectrum,
    "eigfun": cmd_eigfun,
    "asymptotics": cmd_asymptotics,
    "kernel-eval": cmd_kernel_eval,
    "kernel-verify": cmd_kernel_verify,
    "evolve": cmd_evolve,
    "resolvent": cmd_resolvent,
    "inequalities": cmd_inequalities,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="schrolab", description=__doc__.splitlines()[0])
    p.add_argument("config", help="YAML or JSON run configuration")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config entry, e.g. --set params.beta=4 (repeatable)")
    p.add_argument("--t", type=float, action="append", help="time for kernel-eval (repeatable)")
    p.add_argument("--x", action="append", help="point as 'r:theta' or 'x1,x2,...' (repeatable)")
    p.add_argument("--y", action="append", help="point as 'r:theta' or 'y1,y2,...' (repeatable)")
    return p


def run(config, subcommand: str, args=None) -> int:
    outcome = Outcome()
    try:
        cfg = config if isinstance(config, RunConfig) else RunConfig.load(config, getattr(args, "overrides", None))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TruncationWarning)
            path = COMMANDS[subcommand](cfg, args, outcome)
    except RegimeViolation as exc:
        pre = f" [precondition: {exc.precondition}]" if exc.precondition else ""
        print(f"regime error: {exc}{pre}", file=sys.stderr)
        return 2
    except (InvalidConfig, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SchrolabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    failure = outcome.first_failure()
    if failure is not None:
        print(f"FAIL {failure['name']} at {json.dumps(to_plain(failure['where']))}", file=sys.stderr)
        return 1
    print(f"PASS {len(outcome.verdicts)} verdicts")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.config, args.subcommand, args)


if __name__ == "__main__":
    sys.exit(main())
