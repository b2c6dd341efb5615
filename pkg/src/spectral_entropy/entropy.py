"""Entropy of the time-averaged density matrix and its basis-dependent bounds.

``S(psi, T)`` is computed from the eigenvalues of the ``T x T`` autocorrelation
matrix ``R[s, t] = mu_hat(t - s)`` divided by ``T``.  The ``B_F`` route builds the
time-averaged occupation probabilities over the basis
``phi_n(lam) = exp(2 pi i n F(lam))`` and gives an upper estimate.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvalsh, toeplitz as _toeplitz
from scipy.integrate import quad

from .measures import AtomicPartError, MixtureMeasure, SpectralMeasure

log = logging.getLogger(__name__)

DEFAULT_T_CAP = 4096
CLAMP_FLOOR = -1e-10


class ResourceError(RuntimeError):
    """Requested size exceeds the configured dense-eigensolve cap."""


class WindowTooSmallError(ValueError):
    """The label window does not capture enough probability."""


def theta(x):
    """``-x ln x`` with ``theta(0) = 0`` (vectorised)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = -x[pos] * np.log(x[pos])
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DensityMatrixSpectrum:
    T: int
    eigenvalues: np.ndarray  # descending, clamped at 0
    min_raw: float = 0.0

    def __post_init__(self):
        if abs(float(np.sum(self.eigenvalues)) - 1.0) > 1e-9:
            raise ValueError("density matrix spectrum must sum to 1")

    @property
    def entropy(self) -> float:
        return float(np.sum(theta(self.eigenvalues)))


@dataclass(frozen=True)
class BasisDistribution:
    """Time-averaged occupation ``p_n(T)`` for labels ``-n_max..n_max``."""

    T: int
    n_max: int
    probs: np.ndarray
    leak: float
    grid: int | None = None

    @property
    def labels(self) -> np.ndarray:
        return np.arange(-self.n_max, self.n_max + 1)

    def p(self, n: int) -> float:
        return float(self.probs[n + self.n_max]) if abs(n) <= self.n_max else 0.0

    @classmethod
    def from_probs(cls, probs, T: int = 1, labels=None) -> "BasisDistribution":
        """Build a distribution from explicit probabilities.

        ``labels`` defaults to ``0, 1, ...``; the window is widened to be
        symmetric around 0.
        """
        probs = np.asarray(probs, dtype=float)
        labels = np.arange(len(probs)) if labels is None else np.asarray(labels)
        n_max = int(np.max(np.abs(labels))) if len(labels) else 0
        full = np.zeros(2 * n_max + 1)
        np.add.at(full, labels + n_max, probs)
        return cls(T, n_max, full, float(1.0 - full.sum()))


@dataclass
class EntropyCurve:
    times: np.ndarray
    entropies: np.ndarray
    fit_window: tuple[int, int]
    slope: float
    intercept: float
    residual: float
    method: str = "eig"
    extra: dict = field(default_factory=dict)

    @property
    def points(self) -> list[tuple[int, float]]:
        return [(int(t), float(s)) for t, s in zip(self.times, self.entropies)]

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "points": [{"T": t, "S": s} for t, s in self.points],
            "fit_window": list(self.fit_window),
            "slope": self.slope,
            "intercept": self.intercept,
            "residual": self.residual,
        }


# ---------------------------------------------------------------------------
# eigenvalue route
# ---------------------------------------------------------------------------


def toeplitz(m: SpectralMeasure, T: int, cap: int = DEFAULT_T_CAP) -> np.ndarray:
    """``R[s, t] = mu_hat(t - s)`` for ``0 <= s, t < T``."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if T > cap:
        raise ResourceError(f"T={T} exceeds the dense eigensolve cap {cap}")
    row = m.fourier(np.arange(T))
    return toeplitz_from_row(row)


def toeplitz_from_row(row) -> np.ndarray:
    row = np.asarray(row, dtype=complex)
    return _toeplitz(np.conj(row), row)


def spectrum_from_toeplitz(R: np.ndarray) -> DensityMatrixSpectrum:
    """Eigenvalues of ``R / T``, clamped at zero and sorted descending."""
    T = R.shape[0]
    r = eigvalsh(R, check_finite=False) / T
    min_raw = float(r.min())
    if min_raw < CLAMP_FLOOR:
        log.warning("eigenvalue %.3e below clamp floor at T=%d", min_raw, T)
    p = np.clip(r, 0.0, None)[::-1]
    return DensityMatrixSpectrum(T, p, min_raw)


def eigen_entropy(m: SpectralMeasure, T: int, cap: int = DEFAULT_T_CAP):
    """Return ``(spectrum, S)`` with ``S`` in nats; ``0 <= S <= ln T``."""
    spec = spectrum_from_toeplitz(toeplitz(m, T, cap))
    return spec, spec.entropy


def m_epsilon(s: DensityMatrixSpectrum, eps: float) -> int:
    """Fewest largest eigenvalues whose sum exceeds ``1 - eps``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    cum = np.cumsum(np.sort(s.eigenvalues)[::-1])
    hit = np.flatnonzero(cum > 1.0 - eps)
    return int(hit[0]) + 1 if len(hit) else len(cum)


def lwb_bound(S: float, m_eps: int, eps: float) -> tuple[float, bool]:
    """Lower bound ``eps ln(1/eps) + eps ln(m_eps - 3)``; vacuous for ``m_eps <= 3``."""
    if m_eps <= 3:
        return -math.inf, True
    bound = eps * math.log(1.0 / eps) + eps * math.log(m_eps - 3)
    return bound, S >= bound - 1e-12


# ---------------------------------------------------------------------------
# B_F basis route
# ---------------------------------------------------------------------------


def _default_grid(T: int, n_max: int) -> int:
    need = 4 * max(T, n_max)
    return 1 << (need - 1).bit_length()


def bf_distribution(m: SpectralMeasure, T: int, n_max: int | None = None, grid: int | None = None,
                    chunk: int = 256) -> BasisDistribution:
    """Time-averaged occupation of ``phi_n = exp(2 pi i n F)``.

    ``c_n(s) = int_0^1 exp(-2 pi i n x) exp(i s F^-1(x)) dx`` is evaluated on
    ``grid`` midpoints with an FFT; ``p_n(T)`` averages ``|c_n(s)|^2`` over
    ``s < T``.  The grid total is exactly one, so ``leak`` is the mass that
    falls outside the label window.
    """
    if m.has_atoms:
        raise AtomicPartError("B_F basis needs a purely continuous measure")
    if T < 1:
        raise ValueError("T must be >= 1")
    if n_max is None:
        n_max = 2 * T
    if grid is None:
        grid = _default_grid(T, n_max)
    if grid & (grid - 1) or grid < 4 * max(T, n_max):
        raise ValueError(f"grid must be a power of two >= 4*max(T, n_max) = {4 * max(T, n_max)}")
    if 2 * n_max + 1 > grid:
        raise ValueError("label window wider than the grid")
    x = (np.arange(grid) + 0.5) / grid
    q = m.quantile(x)
    power = np.zeros(grid)
    for s0 in range(0, T, chunk):
        s = np.arange(s0, min(T, s0 + chunk))
        f = np.exp(1j * np.outer(s, q))
        power += np.sum(np.abs(np.fft.fft(f, axis=1)) ** 2, axis=0)
    power /= T * grid * grid
    labels = np.arange(-n_max, n_max + 1)
    probs = power[labels % grid]
    return BasisDistribution(T, n_max, probs, float(1.0 - probs.sum()), grid)


def shannon_entropy(d: BasisDistribution) -> float:
    """Shannon entropy over the window; a lower estimate when ``d.leak > 0``."""
    return float(np.sum(theta(np.clip(d.probs, 0.0, None))))


def n_epsilon(d: BasisDistribution, eps: float) -> int:
    """Smallest ``nu`` with ``sum_{|n| <= nu} p_n > 1 - eps**2``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    target = 1.0 - eps**2
    centre = d.n_max
    pos = d.probs[centre + 1:]
    neg = d.probs[:centre][::-1]
    cum = d.probs[centre] + np.concatenate([[0.0], np.cumsum(pos + neg)])
    hit = np.flatnonzero(cum > target)
    if not len(hit):
        raise WindowTooSmallError(
            f"window |n| <= {d.n_max} holds {cum[-1]:.6f}, need more than {target:.6f}")
    return int(hit[0])


def moment(d: BasisDistribution, q: float) -> tuple[float, float]:
    """``(sum |n|**q p_n, leak)``; the moment is a window-truncated lower estimate."""
    if q <= 0:
        raise ValueError("q must be positive")
    return float(np.sum(np.abs(d.labels) ** q * d.probs)), d.leak


def mixture_distribution(m: MixtureMeasure, T: int, n_max: int | None = None, grid: int | None = None):
    """Occupation over the combined basis (atom eigenvectors, then ``B_F`` of the continuous part).

    Returns ``(point_probs, continuous)`` where ``point_probs[i]`` is the
    time-averaged weight on the eigenvector of atom ``i`` and ``continuous`` is
    the ``B_F`` distribution scaled by ``1 - P``.
    """
    atoms = m.point_part
    s = np.arange(T)
    amp = np.sqrt(m.P * atoms.weights)[None, :] * np.exp(1j * np.outer(s, atoms.positions))
    point_probs = np.mean(np.abs(amp) ** 2, axis=0)
    cont = bf_distribution(m.continuous_part, T, n_max, grid)
    scaled = BasisDistribution(T, cont.n_max, (1.0 - m.P) * cont.probs, (1.0 - m.P) * cont.leak, cont.grid)
    return point_probs, scaled


# ---------------------------------------------------------------------------
# partition quantities
# ---------------------------------------------------------------------------


def _partition_base(N: int) -> tuple[int, int]:
    for b in range(2, N + 1):
        k, v = 0, 1
        while v < N:
            v *= b
            k += 1
        if v == N:
            return b, k
    raise ValueError("N must be >= 2")


def select_cells(m: SpectralMeasure, N: int, keep_mass: float, max_cells: int = 1_000_000):
    """Fewest highest-mass cells of the ``N``-cell partition holding more than ``keep_mass``.

    Returns the selected cells (with their masses) in decreasing mass order.
    """
    if not 0 < keep_mass <= 1:
        raise ValueError("keep_mass must lie in (0, 1]")
    base, depth = _partition_base(N)
    cells = m.refine(base, depth, max_cells)
    cells.sort(key=lambda cm: -cm[1])
    chosen, total = [], 0.0
    for cell, mass in cells:
        chosen.append((cell, mass))
        total += mass
        if total > keep_mass:
            break
    return chosen


def w_quantity(m: SpectralMeasure, n: int, N: int, keep_mass: float, max_cells: int = 1_000_000) -> float:
    """``sum_j sin^2(pi n mu(I_j)) / (pi n)^2`` over the selected cells ``I_j``."""
    if n == 0:
        raise ValueError("n must be nonzero")
    masses = np.array([mass for _, mass in select_cells(m, N, keep_mass, max_cells)])
    return float(np.sum(np.sin(np.pi * n * masses) ** 2) / (np.pi * n) ** 2)


def w_quantity_quadrature(m: SpectralMeasure, n: int, N: int, keep_mass: float) -> float:
    """Same sum, integrating ``exp(2 pi i n u)`` over ``u in [F(lo), F(hi)]`` numerically."""
    total = 0.0
    for cell, _ in select_cells(m, N, keep_mass):
        iv = cell.interval
        a, b = m.cdf(iv.lo), m.cdf(iv.hi)
        re = quad(lambda u: math.cos(2 * math.pi * n * u), a, b, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        im = quad(lambda u: math.sin(2 * math.pi * n * u), a, b, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        total += re * re + im * im
    return total


# ---------------------------------------------------------------------------
# curves
# ---------------------------------------------------------------------------


def fit_log_slope(times, entropies, fit_window: tuple[int, int] | None = None):
    """Least-squares fit ``S = slope * ln T + intercept`` over ``fit_window``.

    Default window is the upper half of ``times``.  Returns
    ``(slope, intercept, rms_residual, window)``.
    """
    times = np.asarray(times)
    entropies = np.asarray(entropies, dtype=float)
    if fit_window is None:
        lo = times[len(times) // 2] if len(times) > 2 else times[0]
        fit_window = (int(lo), int(times[-1]))
    sel = (times >= fit_window[0]) & (times <= fit_window[1])
    if sel.sum() < 2:
        raise ValueError("fit window needs at least two times")
    x = np.log(times[sel].astype(float))
    y = entropies[sel]
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), float(intercept), resid, (int(fit_window[0]), int(fit_window[1]))


def entropy_curve(m: SpectralMeasure, times, method: str = "eig", fit_window=None,
                  cap: int = DEFAULT_T_CAP, n_max: int | None = None) -> EntropyCurve:
    """``S`` at each ``T`` and its fitted slope against ``ln T``.

    ``method="eig"`` is the exact time-averaging entropy; ``"bf"`` is the
    Shannon entropy over ``B_F``, an upper estimate that is not bounded by
    ``ln T``.
    """
    times = np.asarray(list(times), dtype=np.int64)
    if len(times) < 2 or np.any(np.diff(times) <= 0) or times[0] < 1:
        raise ValueError("times must be a strictly increasing list of at least two positive integers")
    if method == "eig":
        if times[-1] > cap:
            raise ResourceError(f"T={times[-1]} exceeds the dense eigensolve cap {cap}")
        S = np.array([eigen_entropy(m, int(T), cap)[1] for T in times])
    elif method == "bf":
        S = np.array([shannon_entropy(bf_distribution(m, int(T), n_max)) for T in times])
    else:
        raise ValueError(f"unknown method {method!r}")
    slope, intercept, resid, window = fit_log_slope(times, S, fit_window)
    return EntropyCurve(times, S, window, slope, intercept, resid, method)
