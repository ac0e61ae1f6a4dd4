"""
Command-line front end.

Four subcommands, all emitting plain text or CSV for external tooling:

generate   write a synthetic instance bundle (L.mat, M.mat, meta)
run        run the adaptive completion against a saved instance
sweep      run a parameter grid, one CSV row per (cell, trial)
verify     run the inequality checks, one CSV row per check

Every behavior here is a thin shell over the library API: identical
seeds give identical results either way, and reruns with identical flags
produce byte-identical files.  ``ADAPTIVE_MC_THREADS`` caps the worker
count used by sweep and verify.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .linalg import coherence
from .lrebn import (
    REDRAW_ON_UPDATE,
    REDRAW_PER_COLUMN,
    LrebnConfig,
    recovery_errors,
    run_lrebn,
)
from .sampling import RngState
from .synthetic import (
    MAX_EPSILON,
    ObservationOracle,
    load_instance,
    make_instance,
    save_instance,
)
from .verify import CHECK_NAMES, run_check

# Stream labels for sweep-cell derivation.
_STREAM_SWEEP_INSTANCE = 100
_STREAM_SWEEP_RUN = 101


def _epsilon_value(text):
    v = float(text)
    if not 0.0 <= v < MAX_EPSILON:
        raise argparse.ArgumentTypeError(
            f"epsilon must be < {MAX_EPSILON} and >= 0"
        )
    return v


def _delta_value(text):
    v = float(text)
    if not 0.0 < v < 0.1:
        raise argparse.ArgumentTypeError("delta must satisfy 0 < delta < 0.1")
    return v


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("value must be a positive integer")
    return v


def _int_list(text):
    return [_positive_int(s) for s in text.split(",") if s != ""]


def _epsilon_list(text):
    return [_epsilon_value(s) for s in text.split(",") if s != ""]


def _delta_list(text):
    return [_delta_value(s) for s in text.split(",") if s != ""]


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if v is None:
        return ""
    s = str(v)
    if "," in s or "\n" in s:
        raise ValueError(f"CSV field may not contain commas or newlines: {s!r}")
    return s


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    content = "\n".join(lines) + "\n"
    with open(path, "w", encoding="ascii") as fh:
        fh.write(content)
    return content


def _thread_count(n_tasks):
    env = os.environ.get("ADAPTIVE_MC_THREADS")
    workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, min(workers, n_tasks))


def _derive_seed(seed, *key):
    seq = np.random.SeedSequence(
        entropy=int(seed), spawn_key=tuple(int(x) for x in key)
    )
    return int(seq.generate_state(1, dtype=np.uint64)[0])


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_generate(args):
    inst = make_instance(
        args.m, args.n, args.r, args.epsilon, args.seed,
        coherence_mode=args.coherence_mode, noise_mode=args.noise_mode,
        spike_index=args.spike_index, spike_weight=args.spike_weight,
    )
    save_instance(args.out, inst, args.seed, args.noise_mode,
                  args.coherence_mode)
    print(f"coherence={coherence(inst.true_basis):.17g}")
    return 0


def _build_config(args, epsilon, r, meta=None):
    if args.mu_upper is not None:
        mu = args.mu_upper
    elif args.estimate_mu:
        # Estimation mode must not peek at the instance's true coherence;
        # the first budget (nothing estimated yet) uses the floor value.
        mu = 1.0
    elif meta is not None and "mu" in meta:
        mu = float(meta["mu"])
    else:
        mu = 1.0
    return LrebnConfig(
        epsilon=epsilon,
        delta=args.delta,
        r=r,
        mu_upper=max(1.0, mu),
        budget_cap_to_m=not args.no_budget_cap,
        angle_cap_enabled=not args.no_angle_cap,
        estimate_mu=args.estimate_mu,
        omega_redraw=args.omega_redraw,
        seed=args.seed,
    )


def _write_manifest(path, cfg):
    lines = [
        f"epsilon={cfg.epsilon:.17g}",
        f"delta={cfg.delta:.17g}",
        f"r={cfg.r}",
        f"mu_upper={cfg.mu_upper:.17g}",
        f"seed={cfg.seed}",
        f"budget_cap_to_m={'true' if cfg.budget_cap_to_m else 'false'}",
        f"angle_cap_enabled={'true' if cfg.angle_cap_enabled else 'false'}",
        f"estimate_mu={'true' if cfg.estimate_mu else 'false'}",
        f"omega_redraw_policy={cfg.omega_redraw}",
    ]
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def cmd_run(args):
    L, M, meta = load_instance(args.instance)
    cfg = _build_config(args, float(meta["epsilon"]), int(meta["r"]), meta)
    oracle = ObservationOracle(M)
    result = run_lrebn(oracle, cfg)
    errors = recovery_errors(result, L)

    os.makedirs(args.out, exist_ok=True)
    _write_csv(
        os.path.join(args.out, "results.csv"),
        ["col_index", "mode", "k_at_time", "d_at_time", "theta_tilde",
         "residual", "threshold", "col_error_vs_L"],
        [(rec.index, rec.mode, rec.k, rec.d, rec.theta_tilde, rec.residual,
          rec.threshold, float(errors[rec.index]))
         for rec in result.column_records],
    )
    m, n = M.shape
    _write_csv(
        os.path.join(args.out, "summary.csv"),
        ["m", "n", "r", "epsilon", "delta", "k_final", "observations",
         "max_col_error", "mean_col_error", "bound_violations"],
        [(m, n, cfg.r, cfg.epsilon, cfg.delta, result.k_final,
          result.observations, float(errors.max()) if n else 0.0,
          float(errors.mean()) if n else 0.0, result.bound_violations)],
    )
    _write_manifest(os.path.join(args.out, "manifest"), cfg)
    return 0


def _sweep_cell(args, cell_index, m, n, r, epsilon, delta, trial):
    inst = make_instance(
        m, n, r, epsilon,
        RngState(args.seed, _STREAM_SWEEP_INSTANCE, cell_index, trial),
        noise_mode=args.noise_mode,
    )
    cfg = LrebnConfig(
        epsilon=epsilon, delta=delta, r=r,
        mu_upper=coherence(inst.true_basis),
        budget_cap_to_m=not args.no_budget_cap,
        angle_cap_enabled=not args.no_angle_cap,
        omega_redraw=args.omega_redraw,
        seed=_derive_seed(args.seed, _STREAM_SWEEP_RUN, cell_index, trial),
    )
    result = run_lrebn(ObservationOracle(inst.M), cfg)
    errors = recovery_errors(result, inst.L)
    theta_final = result.theta_trace[-1][1]
    return (m, n, r, epsilon, delta, trial, result.observations,
            result.k_final, float(errors.max()), theta_final)


def cmd_sweep(args):
    cells = [
        (m, n, r, epsilon, delta)
        for m in args.m
        for n in args.n
        for r in args.r
        for epsilon in args.epsilon
        for delta in args.delta
    ]
    tasks = [
        (idx, *cell, trial)
        for idx, cell in enumerate(cells)
        for trial in range(args.trials)
    ]
    workers = _thread_count(len(tasks))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda t: _sweep_cell(args, *t), tasks))
    else:
        rows = [_sweep_cell(args, *t) for t in tasks]
    os.makedirs(args.out, exist_ok=True)
    _write_csv(
        os.path.join(args.out, "sweep.csv"),
        ["m", "n", "r", "epsilon", "delta", "trial", "observations",
         "k_final", "max_col_error", "theta_tilde_final"],
        rows,
    )
    return 0


def _report_row(report):
    params_json = json.dumps(report.params, sort_keys=True,
                             separators=(";", ":"))
    return (
        report.name, report.trials, report.violations,
        report.violation_rate,
        report.theoretical_bound if report.theoretical_bound is not None else None,
        report.worst_margin, params_json,
        report.seed if report.seed is not None else None,
        report.verdict,
    )


def cmd_verify(args):
    if args.names == "all":
        names = list(CHECK_NAMES)
    else:
        names = [s for s in args.names.split(",") if s != ""]
        unknown = [s for s in names if s not in CHECK_NAMES]
        if unknown:
            raise ValueError(
                f"unknown check name(s) {unknown}; choose from {CHECK_NAMES}"
            )
    workers = _thread_count(len(names))

    def runner(name):
        return run_check(name, trials=args.trials, seed=args.seed)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            reports = list(pool.map(runner, names))
    else:
        reports = [runner(name) for name in names]

    header = ["name", "trials", "violations", "violation_rate",
              "theoretical_bound", "worst_margin", "params_json", "seed",
              "verdict"]
    rows = [_report_row(rep) for rep in reports]
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        content = _write_csv(os.path.join(args.out, "verify.csv"), header, rows)
    else:
        content = ",".join(header) + "\n" + "\n".join(
            ",".join(_fmt(v) for v in row) for row in rows
        ) + "\n"
    sys.stdout.write(content)
    failing = [rep.name for rep in reports if rep.verdict == "FAIL"]
    return 1 if failing else 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_algorithm_flags(p):
    p.add_argument("--delta", type=_delta_value, default=0.05)
    p.add_argument("--mu-upper", dest="mu_upper", type=float, default=None,
                   help="coherence upper bound for the true column space")
    p.add_argument("--estimate-mu", dest="estimate_mu", action="store_true",
                   help="heuristic: refresh mu from the estimated basis")
    p.add_argument("--no-angle-cap", dest="no_angle_cap", action="store_true")
    p.add_argument("--no-budget-cap", dest="no_budget_cap",
                   action="store_true")
    p.add_argument("--omega-redraw", dest="omega_redraw",
                   choices=[REDRAW_ON_UPDATE, REDRAW_PER_COLUMN],
                   default=REDRAW_ON_UPDATE)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="adaptive-mc",
        description="Adaptive low-rank completion under bounded column noise",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic instance bundle")
    g.add_argument("--m", type=_positive_int, required=True)
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--r", type=_positive_int, required=True)
    g.add_argument("--epsilon", type=_epsilon_value, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--noise-mode", dest="noise_mode",
                   choices=["sphere", "scaled-gaussian"], default="sphere")
    g.add_argument("--coherence-mode", dest="coherence_mode",
                   choices=["incoherent", "spiked"], default="incoherent")
    g.add_argument("--spike-index", dest="spike_index", type=int, default=0)
    g.add_argument("--spike-weight", dest="spike_weight", type=float,
                   default=0.99)
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="run the completion on a saved instance")
    r.add_argument("--instance", required=True,
                   help="instance bundle directory")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", required=True)
    _add_algorithm_flags(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="parameter grid, one CSV row per trial")
    s.add_argument("--m", type=_int_list, required=True)
    s.add_argument("--n", type=_int_list, required=True)
    s.add_argument("--r", type=_int_list, required=True)
    s.add_argument("--epsilon", type=_epsilon_list, required=True)
    s.add_argument("--delta", type=_delta_list, default=[0.05])
    s.add_argument("--trials", type=_positive_int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--noise-mode", dest="noise_mode",
                   choices=["sphere", "scaled-gaussian"], default="sphere")
    s.add_argument("--no-angle-cap", dest="no_angle_cap", action="store_true")
    s.add_argument("--no-budget-cap", dest="no_budget_cap",
                   action="store_true")
    s.add_argument("--omega-redraw", dest="omega_redraw",
                   choices=[REDRAW_ON_UPDATE, REDRAW_PER_COLUMN],
                   default=REDRAW_ON_UPDATE)
    s.set_defaults(func=cmd_sweep)

    v = sub.add_parser("verify", help="run the inequality checks")
    v.add_argument("--names", default="all",
                   help="comma-separated check names, or 'all'")
    v.add_argument("--trials", type=_positive_int, default=None)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", default=None)
    v.set_defaults(func=cmd_verify)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
