"""Dimension estimators computed from measure evaluations alone.

* information dimension -- slope of the partition entropy against ``k ln b``,
* fractal dimension -- slope of the log size of the smallest cover holding
  mass ``> 1 - eps`` (greedy, highest-mass cells first),
* Hausdorff-type estimates -- quantiles of pointwise scaling exponents at
  sampled points.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .measures import (
    DigitProductMeasure,
    ExactAngle,
    IfsMeasure,
    MixtureMeasure,
    SpectralMeasure,
    TWO_PI,
    _radius_turns,
    _to_turns,
)

DEFAULT_DEPTHS = range(4, 13)


@dataclass
class DimensionEstimate:
    kind: str
    value: float
    depths: list
    per_depth: list
    residual: float
    lower: float | None = None
    raw_slope: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.per_depth:
            raise ValueError("per_depth must not be empty")
        self.value = min(1.0, max(0.0, self.value))
        if self.lower is not None:
            self.lower = min(1.0, max(0.0, self.lower))

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "value": self.value, "depths": [float(x) for x in self.depths],
             "per_depth": [[float(a), float(b)] for a, b in self.per_depth], "residual": self.residual}
        if self.lower is not None:
            d["lower"] = self.lower
        return d


def native_base(m: SpectralMeasure) -> int:
    """Partition base in which the measure's cells are exact cylinders."""
    if isinstance(m, DigitProductMeasure):
        return m.base
    if isinstance(m, IfsMeasure) and m.native_base:
        return m.native_base
    if isinstance(m, MixtureMeasure):
        return native_base(m.continuous_part)
    return 2


def _fit(depths, stats, base):
    x = np.asarray(depths, dtype=float) * math.log(base)
    y = np.asarray(stats, dtype=float)
    if len(x) < 2:
        raise ValueError("need at least two depths")
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - slope * x - intercept) ** 2)))
    return float(slope), resid


def partition_entropy(m: SpectralMeasure, base: int, depth: int, max_classes: int = 1_000_000) -> float:
    """``sum_j theta(mu(I_j))`` over the ``base**depth`` partition."""
    logm, logc = m.mass_classes(base, depth, max_classes)
    return float(np.sum(np.exp(logc + logm) * -logm))


def cover_count_log(m: SpectralMeasure, eps: float, base: int, depth: int, max_classes: int = 1_000_000) -> float:
    """``ln`` of the fewest cells whose total mass exceeds ``1 - eps``."""
    logm, logc = m.mass_classes(base, depth, max_classes)
    order = np.argsort(-logm, kind="stable")
    logm, logc = logm[order], logc[order]
    class_mass = np.exp(logm + logc)
    cum = np.cumsum(class_mass)
    target = 1.0 - eps
    hit = np.flatnonzero(cum > target)
    j = int(hit[0]) if len(hit) else len(cum) - 1
    before = cum[j - 1] if j else 0.0
    need = max(target - before, 0.0)
    # cells needed from class j: floor(need / mass) + 1, in log space when huge
    log_ratio = math.log(need) - logm[j] if need > 0 else -math.inf
    if log_ratio < 30:
        log_partial = math.log(math.floor(math.exp(log_ratio)) + 1)
    else:
        log_partial = log_ratio
    terms = list(logc[:j]) + [min(log_partial, logc[j])]
    return float(logsumexp(terms))


def information_dimension(m: SpectralMeasure, base: int | None = None, depths=None,
                          max_classes: int = 1_000_000) -> DimensionEstimate:
    """Slope of ``H_k`` against ``k ln(base)``."""
    base = base or native_base(m)
    depths = list(depths if depths is not None else DEFAULT_DEPTHS)
    H = [partition_entropy(m, base, k, max_classes) for k in depths]
    slope, resid = _fit(depths, H, base)
    return DimensionEstimate("info", slope, depths, list(zip(depths, H)), resid, raw_slope=slope)


def fractal_dimension(m: SpectralMeasure, eps: float = 0.01, base: int | None = None, depths=None,
                      max_classes: int = 1_000_000) -> DimensionEstimate:
    """Slope of ``ln #_k`` (greedy cover of mass ``> 1 - eps``) against ``k ln(base)``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    base = base or native_base(m)
    depths = list(depths if depths is not None else DEFAULT_DEPTHS)
    counts = [cover_count_log(m, eps, base, k, max_classes) for k in depths]
    slope, resid = _fit(depths, counts, base)
    return DimensionEstimate("fractal", slope, depths, list(zip(depths, counts)), resid,
                             raw_slope=slope, extra={"eps": eps})


def pointwise_alpha(m: SpectralMeasure, lam, scales) -> list[tuple[float, float]]:
    """``ln mu((lam - delta, lam + delta)) / ln(delta / pi)`` for each ``delta``.

    Lengths are measured in turns, so the uniform measure gives exactly 1 at
    interior points.  A zero-mass interval yields ``+inf``.
    """
    x = _to_turns(lam)
    out = []
    for delta in scales:
        r = _radius_turns(delta)
        if not 0 < r < 0.5:
            raise ValueError("scales must lie in (0, pi)")
        lm = m._log_mass_turns(x - r, x + r, close_right=(x + r >= 1))
        log_len = math.log(2 * r.numerator) - math.log(r.denominator)
        alpha = lm / log_len if lm > -math.inf else math.inf
        out.append((delta.radians if isinstance(delta, ExactAngle) else float(delta), alpha))
    return out


def geometric_scales(base: int, first: int, last: int, step: int = 1) -> list[ExactAngle]:
    """``delta_j = pi * base**-j``: intervals one depth-``j`` cell long.

    Exact angles, so arbitrarily deep scales do not underflow.
    """
    return [ExactAngle(Fraction(1, 2 * base**j)) for j in range(first, last + 1, step)]


def default_scales(m: SpectralMeasure, bits=(24, 48, 96, 192)) -> list[ExactAngle]:
    """Cell-sized scales about ``2**-bits`` in the measure's own base.

    Fluctuations of ``alpha`` shrink like ``depth**-1/2``, so the defaults
    reach well past float resolution.
    """
    b = native_base(m)
    depths = sorted({max(1, round(k / math.log2(b))) for k in bits})
    return [ExactAngle(Fraction(1, 2 * b**j)) for j in depths]


def _log_radians(delta) -> float:
    r = _radius_turns(delta)
    return math.log(TWO_PI) + math.log(r.numerator) - math.log(r.denominator)


def appendix_scales(kmax: int = 5, kmin: int = 3) -> list[ExactAngle]:
    """``delta_k = 2 * Delta_k = 2 * 2pi * 2**-k!`` as exact angles.

    ``k = 2`` gives ``delta = pi`` and is excluded by the ``delta < pi`` domain.
    """
    return [ExactAngle(Fraction(2, 2 ** math.factorial(k))) for k in range(kmin, kmax + 1)]


def hausdorff_estimate(m: SpectralMeasure, seed: int = 0, samples: int = 200, scales=None,
                       upper_q: float = 0.95, lower_q: float = 0.05) -> DimensionEstimate:
    """Quantiles of per-point minimal scaling exponents over ``scales``.

    The upper quantile estimates the essential supremum (``value``), the lower
    one the essential infimum (``lower``).
    """
    if samples < 100:
        raise ValueError("samples must be >= 100")
    if scales is None:
        scales = default_scales(m)
    scales = list(scales)
    min_r = min(_radius_turns(s) for s in scales)
    rng = np.random.default_rng(seed)
    points = m._sample_exact(rng, samples, min_r)
    table = np.array([[a for _, a in pointwise_alpha(m, p, scales)] for p in points])
    finite = np.where(np.isfinite(table), table, np.nan)
    minima = np.nanmin(np.where(np.isnan(finite), np.inf, finite), axis=1)
    minima = minima[np.isfinite(minima)]
    # scales are recorded as ln(delta) since deep ones underflow
    per_scale = [(_log_radians(s), float(np.nanmean(finite[:, i]))) for i, s in enumerate(scales)]
    upper = float(np.quantile(minima, upper_q))
    lower = float(np.quantile(minima, lower_q))
    return DimensionEstimate("pointwise", upper, [d for d, _ in per_scale], per_scale,
                             residual=float(np.std(minima)), lower=lower,
                             extra={"quantiles": (lower_q, upper_q), "samples": samples})
