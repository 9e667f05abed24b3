"""Command-line front end.

Every command reads an optional JSON config (validated against the bundled
schema), lets flags override it, checks regime preconditions before doing
any work, and writes a summary JSON plus optional CSV and JSON-lines
artifacts. Each artifact carries the merged config, seed included.

Exit codes: 0 all gates pass, 1 a gate failed, 2 bad config, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import re
import sys
from importlib import resources
from typing import Callable

import jsonschema
import numpy as np

from .audit import audit_bayes, audit_minimax, sample_planted_truth, theoretical_bounds
from .convex_fn import gradient_oracle, random_piecewise_convex
from .dp_prior import (
    check_dp_marginals,
    check_first_stick,
    check_minimizer_uniform,
    dp_cdf,
    sample_stick_breaking,
    verify_lemma3,
)
from .errors import BudgetExceeded, DomainError, InfeasibleError, NumericalError, RegimeError
from .learner_bayes import BayesConfig, bayes_strategy
from .learner_minimax import MinimaxConfig, extract_planted_candidates, run_minimax
from .multidim import (
    MinimaxDConfig,
    SeparableFunction,
    axis_projection,
    expected_vector_count,
    planted_grid,
    run_minimax_d,
    vector_reported_count,
)

EXIT_OK, EXIT_GATE, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

COMMANDS = ("simulate-minimax", "simulate-bayes", "audit", "verify-lemma3", "verify-dp",
            "bench-complexity", "multidim")

_MINIMAX = {"eps": 2.0 ** -10, "delta": 2.0 ** -6, "L": 4}
_BAYES = {"eps": 2.0 ** -12, "delta": 2.0 ** -8, "L": 2, "alpha": 0.5}

DEFAULTS = {
    "simulate-minimax": {"trials": 1, "params": {**_MINIMAX, "subgradient": "mid"}},
    "simulate-bayes": {"trials": 1, "params": {**_BAYES, "plot_prior": False, "prior_samples": 5}},
    "audit": {"trials": 10_000, "params": {"setting": "minimax", "truth_sampler": "planted", "check_replay": False}},
    "verify-lemma3": {"trials": 1, "params": {"alpha": 1.0, "grid_points": 97, "fd_step": 1e-4}},
    "verify-dp": {"trials": 100_000, "params": {"alpha": 1.0}},
    "bench-complexity": {"trials": 200, "params": {"setting": "minimax", "L_values": [1, 2, 4, 8]}},
    "multidim": {"trials": 1, "params": {"eps": 2.0 ** -10, "delta": 2.0 ** -6, "L": 16, "d": 2}},
}

_POW = re.compile(r"^\s*(-?\d+(?:\.\d*)?)\s*(?:\^|\*\*)\s*(-?\d+(?:\.\d*)?)\s*$")


def parse_real(text: str) -> float:
    """Float, also accepting ``2^-10`` and ``2**-10``."""
    m = _POW.match(text)
    if m:
        return float(m.group(1)) ** float(m.group(2))
    return float(text)


def _int_list(text: str) -> list:
    return [int(x) for x in text.split(",") if x.strip()]


def load_schema() -> dict:
    return json.loads(resources.files("privconvex").joinpath("config_schema.json").read_text())


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ config

def build_config(command: str, file_cfg: dict | None, overrides: dict) -> dict:
    """Defaults, then file values, then flags; validated against the schema."""
    cfg = copy.deepcopy(DEFAULTS[command])
    cfg.update({"command": command, "seed": 0, "workers": 1,
                "output": {"summary": None, "trials": None, "csv": None}})
    if file_cfg:
        if file_cfg.get("command", command) != command:
            raise ConfigError(f"config file is for {file_cfg['command']!r}, not {command!r}")
        for key, val in file_cfg.items():
            if key in ("params", "output"):
                cfg[key].update(val)
            else:
                cfg[key] = val
    for key in ("seed", "trials", "workers"):
        if overrides.get(key) is not None:
            cfg[key] = overrides[key]
    for key, val in overrides.get("params", {}).items():
        if val is not None:
            cfg["params"][key] = val
    for key, val in overrides.get("output", {}).items():
        if val is not None:
            cfg["output"][key] = val
    if command == "audit" and cfg["params"]["setting"] == "bayes":
        cfg["params"] = {**_BAYES, **cfg["params"]}
    elif command == "audit":
        cfg["params"] = {**_MINIMAX, **cfg["params"]}
    if command == "bench-complexity":
        base = _BAYES if cfg["params"]["setting"] == "bayes" else _MINIMAX
        cfg["params"] = {**{k: v for k, v in base.items() if k != "L"}, **cfg["params"]}
    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as e:
        raise ConfigError(f"config does not match schema: {e.message}") from None
    return cfg


def _minimax_cfg(p) -> MinimaxConfig:
    return MinimaxConfig(p["eps"], p["delta"], p["L"])


def _bayes_cfg(p) -> BayesConfig:
    return BayesConfig(p["eps"], p["delta"], p["L"], p["alpha"])


def validate_regime(cfg: dict):
    """Fail fast on regime violations before any simulation runs."""
    cmd, p = cfg["command"], cfg["params"]
    if cmd == "simulate-minimax":
        _minimax_cfg(p)
    elif cmd == "simulate-bayes":
        _bayes_cfg(p)
    elif cmd == "audit":
        _bayes_cfg(p) if p["setting"] == "bayes" else _minimax_cfg(p)
        if cfg["trials"] < 1000:
            raise ConfigError(f"audit needs trials >= 1000, got {cfg['trials']}")
    elif cmd == "bench-complexity":
        for L in p["L_values"]:
            _bayes_cfg({**p, "L": L}) if p["setting"] == "bayes" else _minimax_cfg({**p, "L": L})
    elif cmd == "multidim":
        MinimaxDConfig(p["eps"], p["delta"], p["L"], p["d"])
    elif cmd == "verify-dp" and cfg["trials"] < 10_000:
        raise ConfigError(f"verify-dp needs trials >= 10000, got {cfg['trials']}")


# ------------------------------------------------------------------ commands

class Outcome:
    def __init__(self, result: dict, passed: bool, csv_header=None, csv_rows=None, trial_lines=None):
        self.result = result
        self.passed = passed
        self.csv_header = csv_header
        self.csv_rows = csv_rows
        self.trial_lines = trial_lines


def _transcript_lines(t) -> list:
    return t.to_jsonl().splitlines()


def cmd_simulate_minimax(cfg: dict) -> Outcome:
    p = cfg["params"]
    mcfg = _minimax_cfg(p)
    rng = np.random.default_rng(cfg["seed"])
    truth = p.get("truth")
    truth = sample_planted_truth(mcfg, rng) if truth is None else float(truth)
    if not 0.0 < truth < 1.0:
        raise ConfigError(f"truth must lie in (0, 1), got {truth}")
    f = random_piecewise_convex(rng, minimizer=truth)
    t, est = run_minimax(mcfg, gradient_oracle(f, p["subgradient"]), seed=cfg["seed"])
    lower, upper = theoretical_bounds("minimax", p)
    count = t.reported_count
    accurate = abs(est - truth) <= mcfg.eps / 2
    result = {
        "truth": truth, "estimate": est, "abs_error": abs(est - truth), "accurate": accurate,
        "query_count": count, "submitted": len(t), "theory": {"lower_bound": lower, "upper_bound": upper},
        "dyadic_regime": mcfg.dyadic, "planted_candidates": [list(c) for c in extract_planted_candidates(mcfg)],
        "queries": t.queries, "phases": t.phases,
    }
    rows = [[i, q, ph] for i, (q, ph) in enumerate(zip(t.queries, t.phases))]
    return Outcome(result, accurate and lower - 1e-9 <= count <= upper + 1e-9, ["i", "query", "phase"], rows,
                   _transcript_lines(t))


def prior_rows(alpha: float, samples: int, rng: np.random.Generator, grid_points: int = 1001) -> tuple:
    """Sampled ``F`` step functions on an even grid, plus each draw's largest stick."""
    xs = np.linspace(0.0, 1.0, grid_points)
    rows, largest = [], []
    for s in range(samples):
        f = sample_stick_breaking(alpha, rng=rng)
        largest.append(f.largest_stick)
        rows += [[s, float(x), dp_cdf(f, float(x))] for x in xs]
    return rows, largest


def cmd_simulate_bayes(cfg: dict) -> Outcome:
    p = cfg["params"]
    bcfg = _bayes_cfg(p)
    rng = np.random.default_rng(cfg["seed"])
    f = sample_stick_breaking(bcfg.alpha, rng=rng)
    run = bayes_strategy(bcfg, f.gradient, rng, seed=cfg["seed"])
    plan = run.plan
    cands = [f.minimizer if x is None else x for x in plan.decoys]
    gaps = np.diff(np.sort(cands))
    min_gap = float(gaps.min()) if len(gaps) else math.inf
    count = len(run.transcript)
    accurate = abs(run.estimate - f.minimizer) <= bcfg.eps / 2
    lower, upper = theoretical_bounds("bayes", p)
    result = {
        "truth": f.minimizer, "gamma_plus": f.gamma_plus, "estimate": run.estimate,
        "abs_error": abs(run.estimate - f.minimizer), "accurate": accurate, "query_count": count,
        "phase_counts": plan.phase_counts,
        "theory": {"lower_bound": lower, "upper_bound": upper, "gate_upper_bound": upper + 3 * bcfg.L},
        "j_star": plan.j_star, "side": plan.side, "I": list(plan.I), "kappas": plan.kappas,
        "medians": plan.medians, "J": [list(j) for j in plan.J], "decoys": plan.decoys,
        "min_candidate_gap": min_gap if math.isfinite(min_gap) else None,
        "queries": run.transcript.queries, "phases": run.transcript.phases,
    }
    passed = accurate and count <= upper + 3 * bcfg.L and min_gap > bcfg.delta
    if p["plot_prior"]:
        rows, largest = prior_rows(bcfg.alpha, p["prior_samples"], rng)
        result["prior_samples_largest_stick"] = largest
        return Outcome(result, passed, ["sample", "x", "F"], rows, _transcript_lines(run.transcript))
    rows = [[i, q, ph] for i, (q, ph) in enumerate(zip(run.transcript.queries, run.transcript.phases))]
    return Outcome(result, passed, ["i", "query", "phase"], rows, _transcript_lines(run.transcript))


def cmd_audit(cfg: dict) -> Outcome:
    p = cfg["params"]
    buf = io.StringIO() if cfg["output"]["trials"] else None
    if p["setting"] == "bayes":
        report = audit_bayes(_bayes_cfg(p), trials=cfg["trials"], seed=cfg["seed"], workers=cfg["workers"],
                             trial_log=buf, check_replay=p["check_replay"])
    else:
        report = audit_minimax(_minimax_cfg(p), trials=cfg["trials"], truth_sampler=p["truth_sampler"],
                               seed=cfg["seed"], workers=cfg["workers"], trial_log=buf)
    rows = [[name, v["successes"], cfg["trials"], v["rate"], v["wilson_ci"][0], v["wilson_ci"][1], v["bound"],
             v["slack"], v["pass"]] for name, v in sorted(report.adversary_success.items())]
    header = ["adversary", "successes", "trials", "rate", "ci_low", "ci_high", "bound", "slack", "pass"]
    lines = buf.getvalue().splitlines() if buf is not None else None
    return Outcome(report.to_dict(), report.passed, header, rows, lines)


def cmd_verify_lemma3(cfg: dict) -> Outcome:
    p = cfg["params"]
    n = p["grid_points"]
    grid = np.linspace(0.02, 0.98, n) if n > 1 else [0.5]
    rep = verify_lemma3(p["alpha"], grid=grid, fd_step=p["fd_step"])
    rows = [[s["t"], s["derivative"], s["pass"]] for s in rep.statistics]
    return Outcome(rep.to_dict(), rep.passed, ["t", "derivative", "pass"], rows)


def cmd_verify_dp(cfg: dict) -> Outcome:
    alpha, trials = cfg["params"]["alpha"], cfg["trials"]
    streams = np.random.SeedSequence(cfg["seed"]).spawn(3)
    reports = [
        check_dp_marginals(alpha, trials=trials, rng=np.random.default_rng(streams[0])),
        check_first_stick(alpha, trials=trials, rng=np.random.default_rng(streams[1])),
        check_minimizer_uniform(1e-9, trials=trials, rng=np.random.default_rng(streams[2])),
    ]
    rows = []
    for rep in reports:
        for s in rep.statistics:
            stat = s.get("ks", s.get("observed", s.get("min")))
            rows.append([rep.check, s["test"], s.get("t", ""), stat, s.get("pvalue", ""), s["pass"]])
    result = {"reports": [r.to_dict() for r in reports]}
    return Outcome(result, all(r.passed for r in reports),
                   ["check", "test", "t", "statistic", "pvalue", "pass"], rows)


def cmd_bench_complexity(cfg: dict) -> Outcome:
    p = cfg["params"]
    rows, ok = [], True
    if p["setting"] == "minimax":
        header = ["L", "count", "lower_bound", "upper_bound", "branch", "regime", "within_bounds"]
        for L in p["L_values"]:
            mcfg = _minimax_cfg({**p, "L": L})
            counts = set()
            for ss in np.random.SeedSequence([cfg["seed"], L]).spawn(5):
                rng = np.random.default_rng(ss)
                truth = sample_planted_truth(mcfg, rng)
                t, _ = run_minimax(mcfg, gradient_oracle(random_piecewise_convex(rng, minimizer=truth)))
                counts.add(t.reported_count)
            lower, upper = theoretical_bounds("minimax", {**p, "L": L})
            count = max(counts)
            branch = "2L+log(delta/eps)" if L >= math.log2(1 / mcfg.delta) - 1e-12 else "L+log(1/eps)"
            within = len(counts) == 1 and lower - 1e-9 <= count <= upper + 1e-9
            ok &= within
            rows.append([L, count, lower, upper, branch, "dyadic" if mcfg.dyadic else "grid", within])
    else:
        header = ["L", "count_min", "count_mean", "count_max", "lower_bound", "upper_bound", "gate_upper_bound",
                  "within_bounds"]
        for L in p["L_values"]:
            bcfg = _bayes_cfg({**p, "L": L})
            counts = []
            for ss in np.random.SeedSequence([cfg["seed"], L]).spawn(cfg["trials"]):
                rng = np.random.default_rng(ss)
                f = sample_stick_breaking(bcfg.alpha, rng=rng)
                counts.append(len(bayes_strategy(bcfg, f.gradient, rng).transcript))
            lower, upper = theoretical_bounds("bayes", {**p, "L": L})
            within = max(counts) <= upper + 3 * L
            ok &= within
            rows.append([L, min(counts), float(np.mean(counts)), max(counts), lower, upper, upper + 3 * L, within])
    result = {"rows": [dict(zip(header, r)) for r in rows]}
    return Outcome(result, ok, header, rows)


def cmd_multidim(cfg: dict) -> Outcome:
    p = cfg["params"]
    dcfg = MinimaxDConfig(p["eps"], p["delta"], p["L"], p["d"])
    rng = np.random.default_rng(cfg["seed"])
    truth = p.get("truth")
    if truth is None:
        cell = planted_grid(dcfg)[int(rng.integers(dcfg.L))]
        truth = [max(rng.uniform(lo, hi), 0.5 * hi) if lo == 0.0 else rng.uniform(lo, hi) for lo, hi in cell]
    truth = [float(x) for x in (truth if isinstance(truth, list) else [truth])]
    if len(truth) != dcfg.d or not all(0.0 < x < 1.0 for x in truth):
        raise ConfigError(f"truth must be {dcfg.d} coordinates in (0, 1), got {truth}")
    f = SeparableFunction([random_piecewise_convex(rng, minimizer=x) for x in truth])
    t, est = run_minimax_d(dcfg, f.gradient, seed=cfg["seed"])
    err = float(np.max(np.abs(est - np.array(truth))))
    count = vector_reported_count(t)
    expected = expected_vector_count(dcfg)
    result = {
        "truth": truth, "estimate": est.tolist(), "linf_error": err, "accurate": err <= dcfg.eps / 2,
        "vector_query_count": count, "expected_vector_count": expected, "axis_budget": dcfg.axis_budget,
        "planted_grid_size": len(planted_grid(dcfg)),
        "queries": t.queries, "phases": t.phases,
    }
    header = ["i"] + [f"q{k}" for k in range(dcfg.d)] + [f"phase{k}" for k in range(dcfg.d)]
    rows = [[i] + [axis_projection(t, k)[i] for k in range(dcfg.d)] + list(t.phases[i]) for i in range(len(t))]
    return Outcome(result, err <= dcfg.eps / 2 and count == expected, header, rows, _transcript_lines(t))


HANDLERS: dict[str, Callable[[dict], Outcome]] = {
    "simulate-minimax": cmd_simulate_minimax,
    "simulate-bayes": cmd_simulate_bayes,
    "audit": cmd_audit,
    "verify-lemma3": cmd_verify_lemma3,
    "verify-dp": cmd_verify_dp,
    "bench-complexity": cmd_bench_complexity,
    "multidim": cmd_multidim,
}


# ------------------------------------------------------------------ output

def _provenance(cfg: dict) -> dict:
    return {k: cfg[k] for k in sorted(cfg)}


def summary_json(cfg: dict, outcome: Outcome) -> str:
    doc = {"config": _provenance(cfg), "seed": cfg["seed"], "pass": bool(outcome.passed), "result": outcome.result}
    return json.dumps(doc, sort_keys=True, indent=2, default=_json_default) + "\n"


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def write_csv(path: str, cfg: dict, header: list, rows: list):
    """CSV with a leading ``# config:`` comment line, then the header row."""
    with open(path, "w", newline="") as fh:
        fh.write("# config: " + json.dumps(_provenance(cfg), sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def write_trials(path: str, cfg: dict, lines: list):
    with open(path, "w") as fh:
        fh.write(json.dumps({"config": _provenance(cfg)}, sort_keys=True) + "\n")
        for line in lines:
            fh.write(line + "\n")


def run_command(cfg: dict, stdout=None) -> int:
    """Validate, run and write artifacts; returns the exit status."""
    stdout = stdout or sys.stdout
    validate_regime(cfg)
    outcome = HANDLERS[cfg["command"]](cfg)
    text = summary_json(cfg, outcome)
    out = cfg["output"]
    if out["summary"]:
        with open(out["summary"], "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    if out["csv"] and outcome.csv_header is not None:
        write_csv(out["csv"], cfg, outcome.csv_header, outcome.csv_rows)
    if out["trials"] and outcome.trial_lines is not None:
        write_trials(out["trials"], cfg, outcome.trial_lines)
    return EXIT_OK if outcome.passed else EXIT_GATE


# ------------------------------------------------------------------ argparse

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run")
    g.add_argument("--config", help="JSON config file; flags override its values")
    g.add_argument("--seed", type=int)
    g.add_argument("--trials", type=int)
    g.add_argument("--workers", type=int, help="worker processes for audits")
    o = common.add_argument_group("output")
    o.add_argument("--summary", help="summary JSON path (default: stdout)")
    o.add_argument("--trials-out", dest="trials_out", help="per-trial / transcript JSON lines path")
    o.add_argument("--csv", help="plot-ready CSV path")
    p = common.add_argument_group("parameters")
    p.add_argument("--setting", choices=["minimax", "bayes"])
    p.add_argument("--eps", type=parse_real)
    p.add_argument("--delta", type=parse_real)
    p.add_argument("--L", type=int)
    p.add_argument("--L-values", dest="L_values", type=_int_list, help="comma-separated, e.g. 1,2,4,8")
    p.add_argument("--alpha", type=parse_real)
    p.add_argument("--d", type=int)
    p.add_argument("--truth", type=parse_real, nargs="+")
    p.add_argument("--truth-sampler", dest="truth_sampler", choices=["planted", "uniform"])
    p.add_argument("--subgradient", choices=["mid", "left", "right"])
    p.add_argument("--grid-points", dest="grid_points", type=int)
    p.add_argument("--fd-step", dest="fd_step", type=parse_real)
    p.add_argument("--prior-samples", dest="prior_samples", type=int)
    p.add_argument("--plot-prior", dest="plot_prior", action="store_true", default=None)
    p.add_argument("--check-replay", dest="check_replay", action="store_true", default=None)

    parser = argparse.ArgumentParser(prog="privconvex", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "simulate-minimax": "one run of the minimax-private strategy",
        "simulate-bayes": "one run of the Bayesian-private strategy on a prior draw",
        "audit": "Monte Carlo audit of accuracy, privacy and query counts",
        "verify-lemma3": "density bounds of the minimizer's prior law",
        "verify-dp": "statistical checks of the Dirichlet-process sampler",
        "bench-complexity": "query counts across privacy levels against the bounds",
        "multidim": "separable d-dimensional minimax run",
    }
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


_PARAM_FLAGS = ("setting", "eps", "delta", "L", "L_values", "alpha", "d", "truth", "truth_sampler", "subgradient",
                "grid_points", "fd_step", "prior_samples", "plot_prior", "check_replay")


def config_from_args(args: argparse.Namespace) -> dict:
    file_cfg = None
    if args.config:
        try:
            with open(args.config) as fh:
                file_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {args.config}: {e}") from None
    params = {k: getattr(args, k) for k in _PARAM_FLAGS}
    if params["truth"] is not None and len(params["truth"]) == 1 and args.command != "multidim":
        params["truth"] = params["truth"][0]
    overrides = {
        "seed": args.seed, "trials": args.trials, "workers": args.workers, "params": params,
        "output": {"summary": args.summary, "trials": args.trials_out, "csv": args.csv},
    }
    return build_config(args.command, file_cfg, overrides)


def main(argv: list | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        return run_command(cfg)
    except NumericalError as e:
        print(f"numerical error: {e} {getattr(e, 'diagnostics', '')}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, RegimeError, InfeasibleError, DomainError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceeded as e:
        print(f"gate failure: {e}", file=sys.stderr)
        return EXIT_GATE


if __name__ == "__main__":
    sys.exit(main())
