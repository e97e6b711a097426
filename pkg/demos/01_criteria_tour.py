"""Tour of the uniqueness criteria on a few model problems.

Each problem is the IVP x' + f(t,x) = 0, x(0) = 0 on (0, 1].  The checkers
sample the defining inequalities on geometric grids and report the worst
margin (negative = violated) plus a concrete witness point.
"""
import numpy as np

from odeuniq import (
    CheckConfig,
    ProblemSpec,
    check_athanassov,
    check_constantin,
    check_nagumo,
    check_theorem_main,
    equivalence_suite,
)

cfg = CheckConfig()

PROBLEMS = [
    # f, u, omega, comment
    ("t*x", "t", "r", "mild field, sharp 1/t constant"),
    ("x/t", "t", "r", "borderline: |f| = |x|/t exactly"),
    ("-sqrt(abs(x))", "t", "sqrt(r)", "square-root field (non-unique)"),
    ("x", "t^(1/4)*exp(t)", "r", "Lipschitz field, growing gauge"),
]

for f_src, u_src, om_src, comment in PROBLEMS:
    p = ProblemSpec.from_dict({"f": f_src, "u": u_src, "omega": om_src})
    print(f"\n=== f = {f_src}   ({comment})")
    for rep in (check_nagumo(p, cfg), check_athanassov(p, cfg),
                check_constantin(p, cfg)):
        verdict = "pass" if rep.overall else "fail"
        print(f"  {rep.criterion:12s} {verdict}")
        for h in rep.hypotheses:
            mark = "ok " if h.passed else "BAD"
            print(f"    [{mark}] {h.name:36s} margin={h.worst_margin:+.3e}")
            if not h.passed:
                print(f"          witness: {h.witness}")

# The same verdicts through the reduced gauge pair v = u, lambda = u/u'.
print("\n=== reduction consistency (constantin vs reduced main criterion)")
for f_src, u_src, om_src, _ in PROBLEMS:
    p = ProblemSpec.from_dict({"f": f_src, "u": u_src, "omega": om_src})
    eq = equivalence_suite(p, cfg)
    print(f"  f = {f_src:16s} verdicts_match={eq.verdicts_match} "
          f"max_margin_gap={eq.max_discrepancy:.2e}")

# Direct gauge pair, no reduction: the five hypotheses H1-H5.
print("\n=== main criterion with explicit gauges v = lambda = t, omega = r")
p = ProblemSpec.from_dict({"f": "t*x", "v": "t", "lambda": "t", "omega": "r"})
rep = check_theorem_main(p, cfg)
for h in rep.hypotheses:
    print(f"  {h.name:36s} {'ok' if h.passed else 'BAD'} "
          f"margin={h.worst_margin:+.3e}")
print(f"overall: {'pass' if rep.overall else 'fail'}")
