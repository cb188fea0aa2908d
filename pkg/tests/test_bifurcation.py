import json

import pytest

from fracsunflower.bifurcation import (
    BifurcationCurve,
    BracketError,
    Which,
    _bisect,
    escape_threshold_h1,
    min_gap,
    tangency_threshold_h2,
    trace_curve,
)
from fracsunflower.stability import Classification, classify_x1


@pytest.mark.parametrize("l,alpha,want", [(3, 0.3, 5.3092), (1, 0.4, 2.95108)])
def test_tangency_reference(l, alpha, want):
    assert tangency_threshold_h2(l, alpha) == pytest.approx(want, abs=1e-2)


def test_tangency_separates_regimes():
    m_star = tangency_threshold_h2(3, 0.3)
    assert classify_x1(3, m_star * 0.99, 0.3).classification is Classification.StableForAll
    assert classify_x1(3, m_star * 1.01, 0.3).classification is Classification.StabilitySwitch
    assert min_gap(3, m_star * 0.99, 0.3) > 0 > min_gap(3, m_star * 1.01, 0.3)


def test_threshold_independent_of_bracket():
    a = tangency_threshold_h2(1, 0.4, (2.0, 4.0))
    b = tangency_threshold_h2(1, 0.4, (2.9, 3.0))
    c = tangency_threshold_h2(1, 0.4)
    assert a == b == c


def test_bad_bracket():
    with pytest.raises(BracketError):
        tangency_threshold_h2(1, 0.4, (10.0, 20.0))
    m = tangency_threshold_h2(1, 0.4, (10.0, 20.0), widen=True)
    assert m == pytest.approx(2.95108, abs=1e-2)


def test_bisect_lattice():
    m = _bisect(lambda x: x > 1.2345, 1.0, 2.0, 1e-4)
    assert abs(m - 1.2345) < 1e-4 * 1.2345


def test_escape_threshold_depends_on_horizon():
    h200 = escape_threshold_h1(1, 0.4, t_max=200)
    h400 = escape_threshold_h1(1, 0.4, t_max=400)
    assert h200 > tangency_threshold_h2(1, 0.4)
    assert h400 > h200  # the second fixed point escapes to infinity only in the limit
    below = classify_x1(1, h200 * 0.99, 0.4)
    above = classify_x1(1, h200 * 1.01, 0.4)
    assert below.classification is Classification.StabilitySwitch
    assert above.classification is Classification.SingleStableRegion


def test_regime_refusals():
    with pytest.raises(ValueError):
        tangency_threshold_h2(1, 0.6)
    with pytest.raises(ValueError):
        trace_curve(0.3, (1, 2), 3, which="h1")
    with pytest.raises(ValueError):
        trace_curve(0.7, (1, 2), 3)
    with pytest.raises(ValueError):
        trace_curve(0.3, (2, 1), 3)
    with pytest.raises(ValueError):
        trace_curve(0.3, (1, 2), 1)


def test_trace_curve_warm_equals_parallel():
    warm = trace_curve(0.3, (1.0, 5.0), 5)
    cold = trace_curve(0.3, (1.0, 5.0), 5, workers=2)
    assert warm.samples == cold.samples
    assert not warm.gaps
    assert dict(warm.samples)[3.0] == pytest.approx(5.3092, abs=1e-2)
    assert all(b[1] > a[1] for a, b in zip(warm.samples, warm.samples[1:]))


def test_curve_csv_metadata():
    curve = BifurcationCurve(0.4, Which.H2, [(1.0, 2.95)], 200.0, [1.5], {"rtol": 1e-6})
    lines = curve.to_csv().splitlines()
    meta = json.loads(lines[0][2:])
    assert meta == {"alpha": 0.4, "which": "h2", "T_max": 200.0, "tolerances": {"rtol": 1e-6},
                    "gaps": [1.5]}
    assert lines[1] == "l,m" and lines[2] == "1.0,2.95"
    assert Which.parse("H1") is Which.H1
