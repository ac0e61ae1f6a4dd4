"""Run the full inequality-verification suite at a quick scale.

Deterministic claims must show zero violations; probabilistic ones must
keep their empirical violation frequency within the stated bound plus
three standard errors.  The `verify` CLI subcommand runs the same checks
and renders the same fields as CSV.
"""

from adaptive_mc import CHECK_NAMES, run_check

print(f"{'check':10s} {'trials':>7s} {'viol':>5s} {'rate':>8s} "
      f"{'bound':>8s} {'worst margin':>13s} verdict")
for name in CHECK_NAMES:
    rep = run_check(name, trials=2000, seed=0)
    bound = "-" if rep.theoretical_bound is None else f"{rep.theoretical_bound:.4f}"
    print(f"{rep.name:10s} {rep.trials:7d} {rep.violations:5d} "
          f"{rep.violation_rate:8.4f} {bound:>8s} {rep.worst_margin:+13.4e} "
          f"{rep.verdict}")
