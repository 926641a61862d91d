import math

import numpy as np
import pytest

from explab.freegroup import QuotientHom
from explab.schottky import orbit_enumerate, schottky_symmetric
from explab.series import (
    DeltaEstimate,
    DisplacementTable,
    EmptyKernel,
    EmptyWindow,
    NoSignChange,
    default_counting_window,
    delta_via_counting,
    delta_via_pressure,
    growth_slope,
    coset_series_constant,
    logsumexp,
    poincare_partial,
    pressure,
    stabilization_diagnostic,
    subgroup_delta,
)

RNG = np.random.default_rng(3)


@pytest.fixture(scope="module")
def table10(group):
    return DisplacementTable.build(group, 10)


# ----------------------------------------------------------------------
# log-space summation
# ----------------------------------------------------------------------


def test_logsumexp_against_naive():
    d = RNG.uniform(0.0, 30.0, size=1000)
    for s in (0.1, 0.5, 1.0):
        naive = math.log(np.exp(-s * d).sum())
        assert abs(logsumexp(-s * d) - naive) < 1e-12


def test_logsumexp_no_underflow():
    # naive summation underflows to log(0); log-space stays finite
    d = np.array([1e4, 1e4 + 1.0])
    val = logsumexp(-1.0 * d)
    assert math.isfinite(val)
    assert abs(val - (-1e4 + math.log(1 + math.exp(-1.0)))) < 1e-9
    assert logsumexp(np.array([])) == -math.inf


def test_poincare_partial_examples():
    est = poincare_partial(np.array([0.0]), s=2.0)
    assert est.log_sum == 0.0
    t = 3.0
    est2 = poincare_partial(np.array([0.0, t]), s=0.7)
    assert abs(est2.log_sum - math.log(1 + math.exp(-0.7 * t))) < 1e-12
    with pytest.raises(ValueError):
        poincare_partial(np.array([0.0]), s=-1.0)


def test_poincare_partial_from_entries(group):
    entries = list(orbit_enumerate(group, 3))
    est = poincare_partial(entries, s=0.5)
    assert est.L == 3
    assert len(est.per_length) == 4
    naive = math.log(sum(math.exp(-0.5 * e.displacement) for e in entries))
    assert abs(est.log_sum - naive) < 1e-12
    # layer zero is the identity alone
    assert est.per_length[0] == 0.0


def test_poincare_partial_from_table(table10):
    est = poincare_partial(table10, s=0.5)
    assert est.L == 10
    assert len(est.per_length) == 11


# ----------------------------------------------------------------------
# pressure
# ----------------------------------------------------------------------


def test_pressure_at_zero_counts_words(group, table10):
    for L in (4, 7, 10):
        expected = math.log(4 * 3 ** (L - 1)) / L
        assert abs(pressure(group, 0.0, L, table=table10) - expected) < 1e-12
    # the limit of (1/L) log count is log(2k-1)
    assert abs(pressure(group, 0.0, 10, table=table10) - math.log(3)) < 0.15


def test_pressure_single_layer_closed_form(group):
    table = DisplacementTable.build(group, 1)
    for s in (0.0, 0.3, 1.1):
        assert abs(pressure(group, s, 1, table=table) - (math.log(4) - 3.0 * s)) < 1e-12


def test_pressure_strictly_decreasing_and_convex(group, table10):
    grid = [pressure(group, s, 10, table=table10) for s in np.arange(0.0, 1.01, 0.1)]
    diffs = np.diff(grid)
    assert (diffs < 0).all()
    second = np.diff(diffs)
    assert (second >= -1e-6).all()


# ----------------------------------------------------------------------
# delta via pressure root
# ----------------------------------------------------------------------


def test_delta_pressure_basics(group, table10):
    est = delta_via_pressure(group, 10, table=table10)
    assert est.method == "pressure_root"
    assert est.bracket[1] - est.bracket[0] <= 1e-4
    assert est.bracket[0] <= est.value <= est.bracket[1]
    assert est.value >= math.log(3) / 3.0  # subadditivity lower bound
    assert est.value < 1.0
    assert est.diagnostics["pressure_hi"] < 0 < est.diagnostics["pressure_lo"]


def test_delta_pressure_decreasing_in_t():
    values = []
    for t in (3.0, 4.0, 5.0):
        g = schottky_symmetric(2, t)
        values.append(delta_via_pressure(g, 9).value)
    assert values[0] > values[1] > values[2]


def test_delta_pressure_no_sign_change(group, table10):
    with pytest.raises(NoSignChange):
        delta_via_pressure(group, 10, table=table10, s_max=0.2)


def test_stabilization_trend(group, table10):
    gaps = stabilization_diagnostic(group, [6, 8, 10], table=table10)
    assert len(gaps) == 2
    assert gaps[0] > gaps[1] > 0


# ----------------------------------------------------------------------
# delta via counting
# ----------------------------------------------------------------------


def test_growth_slope_exact_exponential():
    radii = np.arange(5.0, 15.5, 1.0)
    slope, intercept, rms = growth_slope(radii, 0.5 * radii)
    assert abs(slope - 0.5) < 1e-6
    assert abs(intercept) < 1e-9
    assert rms < 1e-12


def test_counting_doubling_invariance():
    d = np.sort(RNG.uniform(2.0, 20.0, size=4000))
    est = delta_via_counting(d, 5.0, 15.0)
    doubled = np.sort(np.concatenate([d, d]))
    est2 = delta_via_counting(doubled, 5.0, 15.0)
    assert est2.value == pytest.approx(est.value, abs=1e-12)
    assert est2.diagnostics["intercept"] - est.diagnostics["intercept"] == pytest.approx(
        math.log(2), abs=1e-12
    )


def test_counting_window_errors():
    d = np.array([1.0, 2.0, 3.0])
    with pytest.raises(EmptyWindow):
        delta_via_counting(d, 50.0, 60.0)
    with pytest.raises(ValueError):
        delta_via_counting(d, 5.0, 4.0)
    with pytest.raises(ValueError):
        delta_via_counting(d, 1.0, 2.0, bin_width=1.0)  # only 2 bins


def test_cross_estimator_consistency_smoke(group, table10):
    dp = delta_via_pressure(group, 10, table=table10)
    lo, hi = default_counting_window(table10)
    dc = delta_via_counting(table10, lo, hi)
    assert abs(dp.value - dc.value) <= 0.05
    assert dc.residual < 0.2


# ----------------------------------------------------------------------
# subgroup delta
# ----------------------------------------------------------------------


def test_subgroup_delta_trivial_hom_equals_full_counting(group, table10):
    trivial = QuotientHom.trivial(2)
    est = subgroup_delta(group, trivial, 10, table=table10)
    lo, hi = default_counting_window(table10)
    direct = delta_via_counting(table10, lo, hi)
    assert est.value == direct.value
    assert est.residual == direct.residual


def test_subgroup_delta_finite_index(group, table10, mod2):
    est = subgroup_delta(group, mod2, 10, table=table10)
    dp = delta_via_pressure(group, 10, table=table10)
    assert abs(est.value - dp.value) <= 0.05
    assert est.diagnostics["kernel_size"] > 0
    proxy = est.diagnostics["divergence_proxy"]
    assert len(proxy["log_partial_sums"]) == 4
    assert proxy["growing"]  # truncated sums still rising at the estimate


def test_subgroup_delta_empty_kernel(group):
    sparse = QuotientHom.mod_cyclic(2, 7, [1, 2])
    with pytest.raises(EmptyKernel):
        subgroup_delta(group, sparse, 2)


def test_delta_estimate_serialization(group, table10):
    est = delta_via_pressure(group, 10, table=table10)
    data = est.to_dict()
    assert set(data) == {"value", "method", "cutoff", "residual", "bracket", "diagnostics"}
    assert data["bracket"][0] <= data["value"] <= data["bracket"][1]
    with pytest.raises(ValueError):
        DeltaEstimate(-0.1, "pressure_root", 5, 0.0, (0.0, 1.0))


# ----------------------------------------------------------------------
# the coset-series constant
# ----------------------------------------------------------------------


def test_coset_series_constant_against_truncated_sum():
    s, t_h = 0.5, 3.0
    direct = 4.0**s * sum(
        math.exp(-s * (abs(n) - 2) * t_h) for n in range(-200, 201)
    )
    assert abs(coset_series_constant(s, t_h) - direct) < 1e-10


def test_coset_series_constant_blows_up_at_zero():
    # the harmonic factor (1+q)/(1-q) ~ 2/(s t_h) takes over once s t_h is
    # small; the blow-up is monotone on that part of the grid
    values = [coset_series_constant(s, 3.0) for s in (0.05, 0.02, 0.01, 0.005)]
    assert values[0] < values[1] < values[2] < values[3]
    assert coset_series_constant(1e-6, 3.0) > 1e5
    with pytest.raises(ValueError):
        coset_series_constant(0.0, 3.0)
    with pytest.raises(ValueError):
        coset_series_constant(0.5, -1.0)


def test_coset_series_constant_t_dependence():
    # decreasing in t_h while s t_h stays small (harmonic factor dominates) ...
    small = [coset_series_constant(0.1, t) for t in (2.0, 3.0, 4.0)]
    assert small[0] > small[1] > small[2]
    # ... but the e^{2 s t_h} prefactor wins at moderate s, where the direct
    # sum itself grows with t_h (checked against the truncation oracle)
    import math

    for t in (2.0, 3.0, 4.0):
        direct = 4.0**0.5 * sum(
            math.exp(-0.5 * (abs(n) - 2) * t) for n in range(-300, 301)
        )
        assert abs(coset_series_constant(0.5, t) - direct) < 1e-9
    large = [coset_series_constant(0.5, t) for t in (2.0, 3.0, 4.0)]
    assert large[0] < large[1] < large[2]
