"""Acceptance criteria, one test per criterion, each at its stated tolerance.

Every test records a pass/fail line that is printed in the pytest terminal
summary (section "acceptance criteria") and echoed to stdout.  Run alone
with ``pytest tests/test_acceptance.py`` or ``python tests/test_acceptance.py``.
"""

import math
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from fracsunflower.bifurcation import escape_threshold_h1, tangency_threshold_h2
from fracsunflower.chaos import mle, count_cycles
from fracsunflower.core import weight_table
from fracsunflower.solver import (
    InitialData,
    RhsKind,
    SolverConfig,
    SystemParams,
    integrate,
    tail,
)
from fracsunflower.stability import Classification, classify_x1, classify_x2, refine_complex_root


def record(crit, ok, detail):
    ACCEPTANCE_LINES.append((crit, bool(ok), detail))
    print(f"criterion {crit}: {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, detail


def timed(fn, *args, **kw):
    t0 = time.perf_counter()
    out = fn(*args, **kw)
    return out, time.perf_counter() - t0


def test_criterion_01_critical_delay_ssr():
    v, dt = timed(classify_x1, 14, 5.6, 0.85)
    tau = v.critical_delays[0] if v.critical_delays else float("nan")
    ok = (v.classification is Classification.SingleStableRegion and len(v.critical_delays) == 1
          and abs(tau - 5.16433) <= 5e-3 and dt < 1.0)
    record(1, ok, f"{v.classification.value} tau1={tau:.6f} (want 5.16433 +- 5e-3), {dt:.3f} s")


def _rel(a, b):
    return abs(a - b) / abs(b)


def test_criterion_02_switch_alpha03():
    v, dt = timed(classify_x1, 3, 6, 0.3)
    d = v.critical_delays
    ok = (v.classification is Classification.StabilitySwitch and len(d) == 2
          and _rel(d[0], 0.567501) <= 1e-3 and _rel(d[1], 10.133) <= 1e-3 and dt < 1.0)
    record(2, ok, f"{v.classification.value} taus={[round(x, 6) for x in d]} "
                  f"(want 0.567501, 10.133 rel 1e-3), {dt:.3f} s")


def test_criterion_03_switch_and_ssr_alpha04():
    a = classify_x1(1, 3.2, 0.4)
    b = classify_x1(1, 8, 0.4)
    da, db = a.critical_delays, b.critical_delays
    ok = (len(da) == 2 and _rel(da[0], 0.616608) <= 1e-3 and _rel(da[1], 10.733) <= 1e-3
          and len(db) == 1 and abs(db[0] - 0.0173043) <= 1e-4)
    record(3, ok, f"m=3.2 taus={[round(x, 6) for x in da]}; m=8 tau1={db[0] if db else None:.7f}")


def test_criterion_04_ssr_alpha09():
    v = classify_x1(1, 1.5, 0.9)
    tau = v.critical_delays[0]
    ok = v.classification is Classification.SingleStableRegion and abs(tau - 1.03915) <= 1e-3
    record(4, ok, f"{v.classification.value} tau1={tau:.6f} (want 1.03915 +- 1e-3)")


def test_criterion_05_tangency_thresholds():
    a = tangency_threshold_h2(3, 0.3)
    b = tangency_threshold_h2(1, 0.4)
    ok = abs(a - 5.3092) <= 1e-2 and abs(b - 2.95108) <= 1e-2
    record(5, ok, f"h2(3; 0.3)={a:.6f} (want 5.3092), h2(1; 0.4)={b:.6f} (want 2.95108), +- 1e-2")


def test_criterion_06_escape_threshold():
    h200 = escape_threshold_h1(1, 0.4, t_max=200)
    h400 = escape_threshold_h1(1, 0.4, t_max=400)
    drift = abs(h400 - h200) / h200
    ok = abs(h200 - 7.16) <= 0.1 and drift < 5e-2
    record(6, ok, f"h1(1; 0.4)={h200:.4f} at T_max=200 (want 7.16 +- 0.1), "
                  f"{h400:.4f} at 400, doubling drift {drift:.3f} (want < 0.05)")


def test_criterion_07_complex_roots():
    cases = [((3, 6, 0.3, 0.7), 0.04 + 3.6j, 0.0425373 + 3.65101j),
             ((1, 3.2, 0.4, 0.8), 0.03 + 2.7j, 0.0322057 + 2.72212j)]
    ok = True
    found = []
    for args, seed, want in cases:
        r = refine_complex_root(SystemParams(*args), seed)
        found.append(f"{r.lam.real:.7f}{r.lam.imag:+.5f}i (res {r.residual:.1e})")
        ok &= (abs(r.lam.real - want.real) <= 1e-4 and abs(r.lam.imag - want.imag) <= 1e-4
               and r.residual < 1e-10)
    record(7, ok, "; ".join(found))


def test_criterion_08_x2_unstable_grid():
    worst = 0.0
    ok = True
    n = 0
    for alpha in (0.3, 0.85):
        for l in (1, 5, 14):
            for m in (1, 2, 5.6):
                for tau in (0.5, 2.8, 10):
                    v = classify_x2(SystemParams(l, m, alpha, tau))
                    ok &= (v.classification is Classification.AlwaysUnstable and v.witness > 0
                           and v.witness_residual < 1e-12)
                    worst = max(worst, v.witness_residual)
                    n += 1
    record(8, ok, f"{n} cases AlwaysUnstable with positive witness, worst residual {worst:.1e}")


def test_criterion_09_period_doubling():
    want = {8.0: 1, 14.0: 2, 15.0: 4, 20.0: "Aperiodic"}
    got = {}
    t0 = time.perf_counter()
    for tau in want:
        tr = integrate(SystemParams(14, 5.6, 0.85, tau), InitialData(6.9, x0_prime=2.5),
                       SolverConfig(k=200, T=3000))
        got[tau] = count_cycles(tail(tr, 0.5)).multiplicity
    dt = time.perf_counter() - t0
    ok = got == want and dt < 120
    record(9, ok, ", ".join(f"tau={t:g}: {got[t]} (want {want[t]})" for t in want) + f"; {dt:.1f} s")


def _mle(alpha, tau):
    tr = integrate(SystemParams(14, 5.6, alpha, tau), InitialData(6.9, x0_prime=2.5),
                   SolverConfig(k=100, T=3000))
    return mle(tail(tr, 0.5), transient_discarded=1500.0).exponent


def test_criterion_10_mle():
    a085 = _mle(0.85, 20)
    a1 = _mle(1.0, 20)
    per = _mle(0.85, 8)
    bands = 0.1383 <= a085 <= 0.3383 and 0.2539 <= a1 <= 0.4539
    ok = bands and a085 > 0 and a1 > a085 and per <= 0.02
    record(10, ok, f"alpha=0.85: {a085:.4f} (band [0.1383, 0.3383]), alpha=1: {a1:.4f} "
                   f"(band [0.2539, 0.4539]), ordering {'ok' if a1 > a085 else 'violated'}, "
                   f"tau=8: {per:.4f} (<= 0.02)")


def _stable_expected(verdict, tau):
    # stability flips at every crossing; stable below the first
    return sum(c < tau for c in verdict.critical_delays) % 2 == 0


def _growth_ratio(l, m, alpha, tau):
    cfg = SolverConfig(k=100, T=200 * tau, scheme="exact")
    tr = integrate(SystemParams(l, m, alpha, tau), InitialData(0.02, x0_prime=0.0), cfg,
                   RhsKind.LinearNearX1)
    x = np.abs(tr.x[tr.origin:])
    q = len(x) // 4
    return x[-q:].mean() / x[:q].mean()


def test_criterion_11_property_suite():
    failures = []
    # equilibrium preservation
    p = SystemParams(14, 5.6, 0.85, 4)
    for value in (0.0, 2 * math.pi, math.pi):
        tr = integrate(p, InitialData(value, x0_prime=0.0), SolverConfig(k=50, T=100))
        drift = np.max(np.abs(tr.x - value))
        if not drift < 1e-8:
            failures.append(f"equilibrium {value:.4f} drift {drift:.1e}")
    # self-convergence under step halving
    xs = {}
    for k in (25, 50, 100, 200):
        tr = integrate(p, InitialData(6.9, x0_prime=2.5), SolverConfig(k=k, T=50))
        xs[k] = tr.x[tr.origin:]
    errs = [np.max(np.abs(xs[a] - xs[2 * a][::2])) for a in (25, 50, 100)]
    ratios = [float(errs[i] / errs[i + 1]) for i in range(2)]
    if min(ratios) < 1.8:
        failures.append(f"self-convergence ratios {ratios}")
    # verdict / simulation consistency at +-10% around every critical delay
    checked = 0
    for l, m, alpha in [(14, 5.6, 0.85), (3, 6, 0.3), (1, 3.2, 0.4), (1, 8, 0.4), (1, 1.5, 0.9)]:
        v = classify_x1(l, m, alpha)
        for c in v.critical_delays:
            for f in (0.9, 1.1):
                tau = f * c
                r = _growth_ratio(l, m, alpha, tau)
                stable = _stable_expected(v, tau)
                checked += 1
                if (stable and not r < 0.5) or (not stable and not r > 2.0):
                    failures.append(f"({l},{m},{alpha}) tau={tau:.5g} ratio {r:.3g}")
    # weight-table identities
    for q in (0.3, 0.85, 1.7):
        tab = weight_table(q, 50)
        if any(tab.row(n)[-1] != 1.0 for n in range(50)):
            failures.append(f"last weight != 1 for order {q}")
    detail = (f"equilibria, self-convergence ratios {[round(r, 2) for r in ratios]}, "
              f"{checked} consistency runs, weight identities")
    record(11, not failures, detail + ("" if not failures else " | failures: " + "; ".join(failures)))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
