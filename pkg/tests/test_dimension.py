import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spectral_entropy.dimension import (
    DimensionEstimate,
    appendix_scales,
    cover_count_log,
    fractal_dimension,
    geometric_scales,
    hausdorff_estimate,
    information_dimension,
    native_base,
    partition_entropy,
    pointwise_alpha,
)
from spectral_entropy.entropy import entropy_curve
from spectral_entropy.measures import (
    AppendixMeasure,
    AtomicMeasure,
    ExactAngle,
    MixtureMeasure,
    binomial,
    cantor,
    uniform,
)

D_CANTOR = math.log(2) / math.log(3)
DEEP = range(1000, 4001, 500)


def binary_entropy(p):
    return -(p * math.log(p) + (1 - p) * math.log(1 - p)) / math.log(2)


def test_estimate_clamps_and_requires_data():
    e = DimensionEstimate("info", 1.3, [1, 2], [(1, 0.0), (2, 1.0)], 0.0)
    assert e.value == 1.0
    with pytest.raises(ValueError):
        DimensionEstimate("info", 0.5, [], [], 0.0)


def test_native_base():
    assert native_base(cantor()) == 3
    assert native_base(AppendixMeasure()) == 2
    assert native_base(MixtureMeasure(AtomicMeasure([1.0], [1.0]), cantor(), 0.5)) == 3
    assert native_base(AtomicMeasure([1.0], [1.0])) == 2


# ---------------------------------------------------------------- information


def test_information_examples():
    assert information_dimension(AtomicMeasure([1.0, 4.0], [0.3, 0.7])).value == pytest.approx(0, abs=1e-12)
    assert information_dimension(uniform(), 2, range(4, 13)).value == pytest.approx(1, abs=1e-6)
    assert information_dimension(cantor(), 3, range(4, 13)).value == pytest.approx(D_CANTOR, abs=1e-6)


def test_partition_entropy_exact_in_base3():
    for k in (1, 5, 9):
        assert partition_entropy(cantor(), 3, k) == pytest.approx(k * math.log(2), abs=1e-9)


@pytest.mark.parametrize("p", [0.5, 0.7, 0.8])
def test_binomial_information_closed_form(p):
    est = information_dimension(binomial(p), 2, range(4, 13))
    assert est.value == pytest.approx(binary_entropy(p), abs=0.02)


def test_cantor_base2_information_close():
    # non-native base: slower convergence but still near D
    est = information_dimension(cantor(), 2, range(6, 13))
    assert est.value == pytest.approx(D_CANTOR, abs=0.03)


# ---------------------------------------------------------------- fractal


def test_fractal_examples():
    two = AtomicMeasure([1.0, 4.0], [0.5, 0.5])
    assert fractal_dimension(two, 0.3).value == pytest.approx(0, abs=1e-12)
    assert fractal_dimension(cantor(), 0.01, 3).value == pytest.approx(D_CANTOR, abs=0.02)
    app = fractal_dimension(AppendixMeasure(), 0.01, 2, range(6, 23)).value
    assert 0.85 <= app <= 1.0


def test_cover_count_greedy_oracle():
    # brute-force greedy count from explicit cells
    m = binomial(0.8)
    for k in (3, 8, 12):
        masses = np.sort(np.exp(m.refine_log(2, k)[1]))[::-1]
        count = int(np.flatnonzero(np.cumsum(masses) > 0.99)[0]) + 1
        assert math.exp(cover_count_log(m, 0.01, 2, k)) == pytest.approx(count, rel=1e-9)


def test_fractal_rejects_bad_eps():
    with pytest.raises(ValueError):
        fractal_dimension(uniform(), 1.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.55, 0.95), st.floats(0.005, 0.3))
def test_info_below_fractal(p, eps):
    # greedy covers are biased low by ~sqrt(depth) at large eps, so compare deep
    m = binomial(p)
    info = information_dimension(m, 2, range(6, 15)).value
    frac = fractal_dimension(m, eps, 2, range(1000, 4001, 1000)).value
    assert info <= frac + 0.05


# ---------------------------------------------------------------- pointwise


def test_pointwise_uniform_and_atom():
    for delta, alpha in pointwise_alpha(uniform(), 2.0, [1.0, 0.1, 1e-4]):
        assert alpha == pytest.approx(1.0, abs=1e-9)
    at = AtomicMeasure([2.0], [1.0])
    assert all(a == 0.0 for _, a in pointwise_alpha(at, 2.0, [0.5, 1e-3]))


def test_pointwise_zero_mass_sentinel():
    out = pointwise_alpha(cantor(), math.pi, [0.1])  # middle gap
    assert out[0][1] == math.inf


def test_pointwise_rejects_bad_scale():
    with pytest.raises(ValueError):
        pointwise_alpha(uniform(), 1.0, [4.0])


def test_appendix_scales_exact():
    sc = appendix_scales()
    assert [s.turns for s in sc] == [Fraction(2, 2**6), Fraction(2, 2**24), Fraction(2, 2**120)]


def test_appendix_pointwise_along_factorial_scales():
    m = AppendixMeasure()
    for lam in m.sample(7, 20, exact=True):
        alphas = [a for _, a in pointwise_alpha(m, lam, appendix_scales())]
        # k = 3: between ln2/ln16 and 2 ln2/ln16; k = 5 exactly 19/118
        assert 0.25 - 1e-12 <= alphas[0] <= 0.5 + 1e-12
        assert alphas[2] == pytest.approx(19 / 118, abs=1e-12)
        assert alphas[2] < alphas[0]


def test_geometric_scales_deep_do_not_underflow():
    sc = geometric_scales(2, 2000, 2000)
    assert isinstance(sc[0], ExactAngle) and sc[0].turns == Fraction(1, 2**2001)


# ---------------------------------------------------------------- hausdorff


def test_hausdorff_examples():
    u = hausdorff_estimate(uniform(), 0, 100)
    assert u.value == pytest.approx(1.0, abs=1e-9) and u.lower == pytest.approx(1.0, abs=1e-9)
    c = hausdorff_estimate(cantor(), 1, 150)
    assert c.value == pytest.approx(D_CANTOR, abs=0.05)


def test_hausdorff_appendix_decreasing_with_odd_scales():
    m = AppendixMeasure()
    upto3 = hausdorff_estimate(m, 0, 100, appendix_scales(3)).value
    upto5 = hausdorff_estimate(m, 0, 100, appendix_scales(5)).value
    assert upto5 <= 0.35
    assert upto5 < upto3


def test_hausdorff_requires_samples():
    with pytest.raises(ValueError):
        hausdorff_estimate(uniform(), 0, 50)


def test_hausdorff_deterministic():
    a = hausdorff_estimate(cantor(), 4, 100)
    b = hausdorff_estimate(cantor(), 4, 100)
    assert a.value == b.value and a.lower == b.lower


# ---------------------------------------------------------------- collapse and ordering


def test_exactly_scaling_collapse_uniform_cantor():
    for m, b in ((uniform(), 2), (cantor(), 3)):
        vals = [
            information_dimension(m, b).value,
            fractal_dimension(m, 0.01, b).value,
            hausdorff_estimate(m, 0, 100).value,
        ]
        assert max(vals) - min(vals) < 0.05


def test_exactly_scaling_collapse_binomial_deep():
    # greedy covers converge like 1/sqrt(depth); deep mass classes make this cheap
    m = binomial(0.8)
    vals = [
        information_dimension(m, 2, DEEP).value,
        fractal_dimension(m, 0.01, 2, DEEP).value,
        hausdorff_estimate(m, 0, 100, geometric_scales(2, 1000, 2000, 250)).value,
    ]
    assert max(vals) - min(vals) < 0.05
    assert vals[0] == pytest.approx(binary_entropy(0.8), abs=1e-4)


def test_ordering_against_fractal():
    cases = [
        (uniform(), 2, None),
        (cantor(), 3, None),
        (binomial(0.8), 2, None),
        (AppendixMeasure(), 2, appendix_scales()),
    ]
    for m, b, scales in cases:
        depths = range(6, 23) if isinstance(m, AppendixMeasure) else None
        frac = fractal_dimension(m, 0.01, b, depths).value
        info = information_dimension(m, b, depths).value
        haus = hausdorff_estimate(m, 0, 100, scales).value
        assert info <= frac + 0.05
        assert haus <= frac + 0.05


def test_appendix_separation():
    m = AppendixMeasure()
    assert fractal_dimension(m, 0.01, 2, range(6, 23)).value >= 0.85
    assert hausdorff_estimate(m, 0, 200, appendix_scales()).value <= 0.35


def test_entropy_slope_bracketed_by_dimensions():
    times = [2**k for k in range(4, 11)]
    for m, b in ((uniform(), 2), (cantor(), 3), (binomial(0.8), 2)):
        slope = entropy_curve(m, times).slope
        lower = hausdorff_estimate(m, 0, 100).lower
        upper = fractal_dimension(m, 0.01, b).value
        assert lower - 0.1 <= slope <= upper + 0.1
