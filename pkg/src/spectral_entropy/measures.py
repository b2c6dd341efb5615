"""Probability measures on the circle [0, 2*pi].

Four constructions cover every measure the toolkit needs:

* :class:`AtomicMeasure` -- finitely many point masses,
* :class:`IfsMeasure` -- invariant measure of an affine iterated function system,
* :class:`DigitProductMeasure` -- independent base-``b`` digits with a
  position-dependent law,
* :class:`MixtureMeasure` -- ``P * atoms + (1 - P) * continuous``.

Angles are radians.  Internally positions are handled in *turns*
(``x = lambda / 2pi`` in [0, 1]) and deep masses are carried as natural
logarithms so that cells like ``2**-619`` stay representable.

Partition cells are left-closed, ``[lo, hi)``; the last cell also receives the
point ``2*pi``.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import gmpy2
import numpy as np
from scipy.special import logsumexp

TWO_PI = 2.0 * math.pi
LOG_ZERO = -math.inf

# Largest b**n for which integer phase reduction is done exactly.
_EXACT_PHASE_LIMIT = 2**50
# Hard stop for digit walks on pathological laws.
_MAX_DIGITS = 200_000


class CellBudgetError(RuntimeError):
    """More nonzero cells than the caller allowed; use closed forms instead."""


class AtomicPartError(ValueError):
    """Operation needs a purely continuous measure but atoms are present."""


class MeasureResourceError(RuntimeError):
    """Evaluation would exceed an internal work budget."""


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 <= self.lo <= self.hi <= TWO_PI):
            raise ValueError(f"need 0 <= lo <= hi <= 2pi, got [{self.lo}, {self.hi}]")

    @property
    def length(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class DyadicCell:
    """Cell ``index`` of the uniform ``base**depth`` partition of [0, 2pi]."""

    base: int
    depth: int
    index: int

    def __post_init__(self):
        if self.base < 2 or self.depth < 0:
            raise ValueError("base must be >= 2 and depth >= 0")
        if not 0 <= self.index < self.base**self.depth:
            raise ValueError(f"index {self.index} outside [0, {self.base}**{self.depth})")

    @property
    def turns(self) -> tuple[Fraction, Fraction]:
        n = self.base**self.depth
        return Fraction(self.index, n), Fraction(self.index + 1, n)

    @property
    def interval(self) -> Interval:
        lo, hi = self.turns
        return Interval(TWO_PI * float(lo), TWO_PI * float(hi))


@dataclass(frozen=True)
class ExactAngle:
    """An angle known exactly as a rational number of turns.

    Float radians cannot resolve cells deeper than about 2**-52; sampled points
    used for pointwise scaling exponents are carried in this form instead.
    """

    turns: Fraction

    @property
    def radians(self) -> float:
        return TWO_PI * float(self.turns)

    def __float__(self) -> float:
        return self.radians


def _to_turns(lam) -> Fraction:
    if isinstance(lam, ExactAngle):
        return lam.turns
    x = float(lam) / TWO_PI
    return Fraction(min(max(x, 0.0), 1.0))


def _radius_turns(delta) -> Fraction:
    if isinstance(delta, ExactAngle):
        return delta.turns
    return Fraction(float(delta) / TWO_PI)


def _log_fraction(x: Fraction) -> float:
    """``ln x`` for a positive Fraction too small for a float."""
    return math.log(x.numerator) - math.log(x.denominator)


def _logsumexp(values) -> float:
    values = np.asarray(values, dtype=float)
    if values.size == 0 or not np.any(np.isfinite(values)):
        return LOG_ZERO
    return float(logsumexp(values))


def _log_add(a: float, b: float) -> float:
    return float(np.logaddexp(a, b))


def _group_log_classes(logm: np.ndarray, logc: np.ndarray, rtol: float = 1e-9):
    """Merge equal log-masses, summing their (log) multiplicities.

    Sorted neighbours closer than ``rtol`` (relative) form one class.  The
    first unrounded value represents the class, so repeated grouping over
    thousands of digits does not drift.
    """
    if len(logm) <= 1:
        return logm, logc
    order = np.argsort(logm, kind="stable")
    logm, logc = logm[order], logc[order]
    gap = np.diff(logm) > rtol * np.maximum(1.0, np.abs(logm[1:]))
    starts = np.flatnonzero(np.r_[True, gap])
    counts = np.logaddexp.reduceat(logc, starts) if len(starts) < len(logm) else logc
    return logm[starts], counts


class SpectralMeasure:
    """Common interface; concrete measures are immutable after construction."""

    fourier_tolerance: float = 1e-10
    has_atoms: bool = False
    kind: str = "abstract"

    # -- public operations ----------------------------------------------------
    def cdf(self, lam):
        """Distribution function ``F(lam) = mu([0, lam])`` (vectorised).

        Accepts float radians or an :class:`ExactAngle`.
        """
        if isinstance(lam, ExactAngle):
            return min(1.0, math.exp(self._log_mass_turns(Fraction(0), lam.turns, close_right=True)))
        lam_arr = np.asarray(lam, dtype=float)
        out = np.array([self._cdf_scalar(v) for v in lam_arr.ravel()])
        out = out.reshape(lam_arr.shape)
        return float(out) if out.ndim == 0 else out

    def quantile(self, x, exact: bool = False):
        """Inverse distribution function on purely continuous measures.

        At a plateau of ``F`` the value is read off the terminating base
        expansion of ``x`` (digit mapping), i.e. ``inf{lam : F(lam) > x}``.
        ``exact=True`` returns an :class:`ExactAngle` for a scalar ``x``, which
        keeps the digits that a float angle would round away.
        """
        if self.has_atoms:
            raise AtomicPartError("quantile is only defined for purely continuous measures")
        if exact:
            return self._quantile_exact(Fraction(min(max(float(x), 0.0), 1.0)))
        x_arr = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
        out = self._quantile(x_arr.ravel()).reshape(x_arr.shape)
        return float(out) if out.ndim == 0 else out

    def fourier(self, t):
        """``mu_hat(t) = int exp(i t lam) dmu(lam)`` for integer ``t`` (vectorised)."""
        t_arr = np.asarray(t)
        if not np.issubdtype(t_arr.dtype, np.integer):
            if not np.all(np.equal(np.mod(t_arr, 1), 0)):
                raise ValueError("fourier is defined on integer times")
            t_arr = t_arr.astype(np.int64)
        flat = t_arr.ravel()
        mag = np.abs(flat)
        out = np.ones(flat.shape, dtype=complex)
        pos = mag > 0
        if np.any(pos):
            out[pos] = self._fourier_nonneg(mag[pos])
        neg = flat < 0
        out[neg] = np.conj(out[neg])
        out = out.reshape(t_arr.shape)
        return complex(out) if out.ndim == 0 else out

    def log_cell_mass(self, cell: DyadicCell) -> float:
        lo, hi = cell.turns
        return self._log_mass_turns(lo, hi, close_right=(hi == 1))

    def cell_mass(self, cell: DyadicCell) -> float:
        return math.exp(self.log_cell_mass(cell))

    def interval_mass(self, interval: Interval) -> float:
        """Mass of the left-closed interval ``[lo, hi)``."""
        lo = Fraction(interval.lo / TWO_PI)
        hi = Fraction(interval.hi / TWO_PI)
        return math.exp(self._log_mass_turns(lo, hi, close_right=(interval.hi >= TWO_PI)))

    def refine(self, base: int, depth: int, max_cells: int = 1_000_000):
        """All cells with nonzero mass at ``depth``, as ``(DyadicCell, mass)`` pairs."""
        idx, logm = self.refine_log(base, depth, max_cells)
        return [
            (DyadicCell(base, depth, int(i)), math.exp(lm)) for i, lm in zip(idx, logm)
        ]

    def refine_log(self, base: int, depth: int, max_cells: int = 1_000_000):
        """Array form of :meth:`refine`: ``(indices, log_masses)``."""
        if depth < 0 or max_cells < 1 or base < 2:
            raise ValueError("need base >= 2, depth >= 0, max_cells >= 1")
        return self._refine_log(int(base), int(depth), int(max_cells))

    def mass_classes(self, base: int, depth: int, max_classes: int = 1_000_000):
        """Multiset of nonzero cell masses at ``depth``.

        Returns ``(log_mass, log_count)`` arrays: ``exp(log_count[i])`` cells
        carry mass ``exp(log_mass[i])`` each.  Partition entropies and greedy
        covers only depend on this multiset, which stays small for digit
        measures even when the number of cells is astronomical.
        """
        _, logm = self.refine_log(base, depth, max_classes)
        return _group_log_classes(logm, np.zeros_like(logm))

    def sample(self, seed: int, count: int, exact: bool = False):
        """``count`` points distributed according to the measure.

        With ``exact=True`` the points are :class:`ExactAngle` values resolved
        well below float precision.
        """
        if count < 1:
            raise ValueError("count must be >= 1")
        rng = np.random.default_rng(seed)
        if exact:
            return self._sample_exact(rng, count, Fraction(1, 2**80))
        return self._sample(rng, count)

    def known_dimensions(self) -> dict:
        return {}

    def describe(self) -> dict:
        return {"kind": self.kind}

    # -- hooks ------------------------------------------------------------------
    def _cdf_scalar(self, lam: float) -> float:
        if lam >= TWO_PI:
            return 1.0
        if lam < 0:
            return 0.0
        x = Fraction(lam / TWO_PI)
        return min(1.0, math.exp(self._log_mass_turns(Fraction(0), x, close_right=True)))

    def _log_mass_turns(self, lo: Fraction, hi: Fraction, close_right: bool = False) -> float:
        raise NotImplementedError

    def _quantile(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _fourier_nonneg(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _quantile_exact(self, x: Fraction) -> ExactAngle:
        return ExactAngle(Fraction(float(self._quantile(np.array([float(x)]))[0]) / TWO_PI))

    def _refine_log(self, base, depth, max_cells):
        return _subdivide(self, base, depth, max_cells)

    def _sample(self, rng, count) -> np.ndarray:
        return np.array([p.radians for p in self._sample_exact(rng, count, Fraction(1, 2**60))])

    def _sample_exact(self, rng, count, resolution: Fraction) -> list:
        raise NotImplementedError


def _subdivide(m: SpectralMeasure, base: int, depth: int, max_cells: int):
    """Branch-and-bound refinement using exact interval masses."""
    floor = math.log(m.fourier_tolerance) - math.log(1e3)
    idx = [0]
    logm = [0.0]
    for k in range(1, depth + 1):
        n = base**k
        new_idx, new_logm = [], []
        for i in idx:
            for d in range(base):
                j = i * base + d
                lm = m._log_mass_turns(Fraction(j, n), Fraction(j + 1, n), close_right=(j + 1 == n))
                if lm > floor:
                    new_idx.append(j)
                    new_logm.append(lm)
        if len(new_idx) > max_cells:
            raise CellBudgetError(f"{len(new_idx)} nonzero cells at depth {k} exceed budget {max_cells}")
        idx, logm = new_idx, new_logm
    logm = np.array(logm)
    # Dropped sub-tolerance cells; renormalise what remains.
    logm -= logsumexp(logm)
    return np.array(idx, dtype=object if base**depth >= 2**62 else np.int64), logm


# ---------------------------------------------------------------------------
# Atoms
# ---------------------------------------------------------------------------


class AtomicMeasure(SpectralMeasure):
    """Finite sum of point masses at angles in [0, 2pi]."""

    kind = "atomic"
    has_atoms = True

    def __init__(self, positions: Sequence[float], weights: Sequence[float], fourier_tolerance: float = 1e-10):
        pos = np.asarray(positions, dtype=float)
        w = np.asarray(weights, dtype=float)
        if pos.ndim != 1 or pos.shape != w.shape or len(pos) == 0:
            raise ValueError("positions and weights must be equal-length, non-empty 1-d sequences")
        if np.any(w <= 0):
            raise ValueError("atom weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"atom weights sum to {w.sum()!r}, expected 1")
        if np.any((pos < 0) | (pos > TWO_PI)):
            raise ValueError("atom positions must lie in [0, 2pi]")
        if len(np.unique(pos)) != len(pos):
            raise ValueError("atom positions must be distinct")
        order = np.argsort(pos)
        self.positions = pos[order]
        self.weights = w[order] / w.sum()
        self.fourier_tolerance = fourier_tolerance
        self._turns = [Fraction(float(p) / TWO_PI) for p in self.positions]

    def __repr__(self):
        return f"AtomicMeasure({len(self.positions)} atoms)"

    def _cdf_scalar(self, lam):
        return float(self.weights[self.positions <= lam].sum()) if lam < TWO_PI else 1.0

    def _fourier_nonneg(self, t):
        return np.exp(1j * np.outer(t, self.positions)) @ self.weights

    def _log_mass_turns(self, lo, hi, close_right=False):
        total = 0.0
        for x, w in zip(self._turns, self.weights):
            if lo <= x < hi or (close_right and x == hi):
                total += w
        return math.log(total) if total > 0 else LOG_ZERO

    def _cell_index(self, x: Fraction, base: int, depth: int) -> int:
        n = base**depth
        return min(math.floor(x * n), n - 1)

    def _refine_log(self, base, depth, max_cells):
        cells: dict[int, float] = {}
        for x, w in zip(self._turns, self.weights):
            j = self._cell_index(x, base, depth)
            cells[j] = cells.get(j, 0.0) + w
        if len(cells) > max_cells:
            raise CellBudgetError(f"{len(cells)} nonzero cells exceed budget {max_cells}")
        keys = sorted(cells)
        dtype = object if base**depth >= 2**62 else np.int64
        return np.array(keys, dtype=dtype), np.log([cells[k] for k in keys])

    def _sample(self, rng, count):
        return rng.choice(self.positions, size=count, p=self.weights)

    def _sample_exact(self, rng, count, resolution):
        picks = rng.choice(len(self.positions), size=count, p=self.weights)
        return [ExactAngle(self._turns[i]) for i in picks]

    def known_dimensions(self):
        return {"information": 0.0, "hausdorff": 0.0, "fractal": 0.0}

    def describe(self):
        return {"kind": self.kind, "positions": self.positions.tolist(), "weights": self.weights.tolist()}


# ---------------------------------------------------------------------------
# Digit products
# ---------------------------------------------------------------------------


class DigitProductMeasure(SpectralMeasure):
    """Law of ``lam = 2pi * sum_n a_n base**-n`` with independent digits.

    ``digit_law(n)`` gives the distribution of digit ``a_n`` (``n >= 1``) as a
    probability vector of length ``base``.  The measure is assumed to have no
    atoms, which holds whenever infinitely many digits are non-degenerate.
    """

    kind = "digit"

    def __init__(self, base: int, digit_law: Callable[[int], Sequence[float]], *,
                 name: str = "digit", fourier_tolerance: float = 1e-10):
        if int(base) != base or base < 2:
            raise ValueError("base must be an integer >= 2")
        self.base = int(base)
        self.digit_law = digit_law
        self.name = name
        self.fourier_tolerance = fourier_tolerance
        self._table = np.zeros((0, self.base))
        self._lock = threading.Lock()

    def __repr__(self):
        return f"DigitProductMeasure(base={self.base}, name={self.name!r})"

    @classmethod
    def constant(cls, base: int, probs: Sequence[float], **kw) -> "DigitProductMeasure":
        p = np.asarray(probs, dtype=float)
        if np.count_nonzero(p) < 2:
            raise ValueError("a constant digit law needs at least two possible digits")
        return cls(base, lambda n: p, **kw)

    # digit tables ---------------------------------------------------------------
    def law(self, n: int) -> np.ndarray:
        return self.law_table(n)[n - 1]

    def law_table(self, nmax: int) -> np.ndarray:
        """Rows ``0..nmax-1`` hold the laws of digits ``1..nmax``."""
        if nmax > len(self._table):
            with self._lock:
                if nmax > len(self._table):
                    size = max(nmax, 2 * len(self._table), 64)
                    rows = [self._checked_law(n) for n in range(len(self._table) + 1, size + 1)]
                    self._table = np.vstack([self._table, np.array(rows)])
        return self._table[:nmax]

    def _checked_law(self, n):
        p = np.asarray(self.digit_law(n), dtype=float)
        if p.shape != (self.base,) or np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"digit law at position {n} is not a probability vector over {self.base} digits")
        return p

    def _log_table(self, nmax):
        with np.errstate(divide="ignore"):
            return np.log(self.law_table(nmax))

    def _max_log_tail(self, start: int, target: float) -> int:
        """Smallest ``N >= start`` with ``sum_{start<n<=N} log max p_n < target``."""
        acc = 0.0
        n = start
        while acc >= target:
            n += 1
            if n > _MAX_DIGITS:
                raise MeasureResourceError("digit law too close to deterministic to resolve")
            acc += math.log(self.law(n).max())
        return n

    # fourier --------------------------------------------------------------------
    def _fourier_nonneg(self, t):
        b = self.base
        t = np.asarray(t, dtype=np.int64)
        tmax = int(t.max())
        # tail bound 2pi |t| b^-N < tol
        nmax = max(1, math.ceil(math.log(TWO_PI * tmax / self.fourier_tolerance) / math.log(b)) + 1)
        table = self.law_table(nmax)
        out = np.ones(len(t), dtype=complex)
        for n in range(1, nmax + 1):
            p = table[n - 1]
            digits = np.flatnonzero(p)
            if len(digits) == 1 and digits[0] == 0:
                continue
            bn = b**n
            if bn < _EXACT_PHASE_LIMIT:
                frac = ((t % bn)[:, None] * digits[None, :] % bn) / bn
            else:
                frac = np.outer(t.astype(float), digits) / float(bn)
            out *= np.exp(2j * np.pi * frac) @ p[digits]
        return out

    # quantile -------------------------------------------------------------------
    def _quantile(self, x):
        b = self.base
        nmax = math.ceil(60 / math.log2(b)) + 1
        table = self.law_table(nmax)
        lam = np.zeros_like(x)
        x = x.copy()
        for n in range(1, nmax + 1):
            p = table[n - 1]
            digits = np.flatnonzero(p)
            cum = np.concatenate([[0.0], np.cumsum(p)])[digits]
            k = np.clip(np.searchsorted(cum, x, side="right") - 1, 0, len(digits) - 1)
            d = digits[k]
            x = np.clip((x - cum[k]) / p[d], 0.0, 1.0)
            lam += d * float(b) ** (-n)
        return TWO_PI * lam

    def _quantile_exact(self, x):
        b = self.base
        lam = Fraction(0)
        log_prefix = 0.0
        n = 0
        while log_prefix > math.log(2.0**-64) or n * math.log2(b) < 64:
            n += 1
            if n > _MAX_DIGITS:
                break
            p = self.law(n)
            cum = Fraction(0)
            choice = None
            for d in np.flatnonzero(p):
                if cum <= x:
                    choice = (int(d), cum)
                cum += Fraction(float(p[d]))
            d, below = choice
            x = min(max((x - below) / Fraction(float(p[d])), Fraction(0)), Fraction(1))
            lam += Fraction(d, b**n)
            log_prefix += math.log(p[d])
        return ExactAngle(lam)

    # interval masses --------------------------------------------------------------
    def _digits_of(self, value: int, ndig: int) -> np.ndarray:
        s = gmpy2.digits(gmpy2.mpz(value), self.base).zfill(ndig) if value else "0" * ndig
        return np.frombuffer(s.encode(), dtype=np.uint8) - ord("0") if self.base <= 10 else \
            np.array([int(c, 36) for c in s])

    def _log_left(self, digits: np.ndarray, start: int) -> float:
        """log mu([0, c')) inside a cylinder; ``digits`` are c' from position ``start``."""
        if len(digits) == 0:
            return LOG_ZERO
        end = start + len(digits) - 1
        table = self.law_table(end)[start - 1:end]
        logt = self._log_table(end)[start - 1:end]
        rows = np.arange(len(digits))
        below = np.cumsum(table, axis=1) - table  # sum over d' < d
        with np.errstate(divide="ignore"):
            log_g = np.log(below[rows, digits])
        log_p = np.concatenate([[0.0], np.cumsum(logt[rows, digits])[:-1]])
        return _logsumexp(log_g + log_p)

    def _log_right(self, digits: np.ndarray, start: int) -> float:
        """log mu([a', 1)) inside a cylinder, with ``a'`` zero-padded past its digits."""
        total = LOG_ZERO
        log_prefix = 0.0
        pos = start
        chunk = digits if len(digits) else np.zeros(256, dtype=np.int64)
        while True:
            end = pos + len(chunk) - 1
            table = self.law_table(end)[pos - 1:end]
            logt = self._log_table(end)[pos - 1:end]
            rows = np.arange(len(chunk))
            above = np.cumsum(table[:, ::-1], axis=1)[:, ::-1] - table  # sum over d' > d
            with np.errstate(divide="ignore"):
                log_g = np.log(above[rows, chunk])
            step = logt[rows, chunk]
            log_p = log_prefix + np.concatenate([[0.0], np.cumsum(step)[:-1]])
            total = _log_add(total, _logsumexp(log_g + log_p))
            log_prefix = float(log_p[-1] + step[-1])
            if log_prefix == LOG_ZERO or log_prefix < total + math.log(1e-17):
                return total
            pos = end + 1
            if pos > _MAX_DIGITS:
                return total
            chunk = np.zeros(256, dtype=np.int64)

    def _log_mass_digits(self, lo_digits, hi_digits) -> float:
        """log mu([lo, hi)) for digit expansions; ``hi_digits=None`` means hi = 1."""
        if hi_digits is None:
            return self._log_right(lo_digits, 1)
        diff = np.flatnonzero(lo_digits != hi_digits)
        if len(diff) == 0:
            return LOG_ZERO
        j = int(diff[0])
        logt = self._log_table(j + 1)
        prefix = float(logt[np.arange(j), lo_digits[:j]].sum()) if j else 0.0
        if prefix == LOG_ZERO:
            return LOG_ZERO
        p = self.law(j + 1)
        a, c = int(lo_digits[j]), int(hi_digits[j])
        parts = [LOG_ZERO]
        mid = p[a + 1:c].sum()
        if mid > 0:
            parts.append(math.log(mid))
        if p[a] > 0:
            parts.append(math.log(p[a]) + self._log_right(lo_digits[j + 1:], j + 2))
        if p[c] > 0:
            parts.append(math.log(p[c]) + self._log_left(hi_digits[j + 1:], j + 2))
        return prefix + _logsumexp(parts)

    def _resolution(self, lo: Fraction, hi: Fraction) -> int:
        width = hi - lo
        coarse = max(0, math.ceil(-_log_fraction(width) / math.log(self.base))) if width > 0 else 0
        absolute = self._max_log_tail(0, math.log(self.fourier_tolerance) - math.log(1e3))
        relative = self._max_log_tail(coarse, math.log(1e-10))
        return max(absolute, relative, coarse + 8)

    def _log_mass_turns(self, lo, hi, close_right=False):
        lo = max(lo, Fraction(0))
        hi = min(hi, Fraction(1))
        if lo >= hi:
            return LOG_ZERO
        ndig = self._resolution(lo, hi)
        scale = self.base**ndig
        lo_int = math.floor(lo * scale)
        lo_digits = self._digits_of(lo_int, ndig)
        if hi == 1:
            return self._log_mass_digits(lo_digits, None)
        hi_int = math.floor(hi * scale)
        return self._log_mass_digits(lo_digits, self._digits_of(hi_int, ndig))

    def log_cell_mass(self, cell):
        if cell.base != self.base:
            return super().log_cell_mass(cell)
        if cell.depth == 0:
            return 0.0
        digits = self._digits_of(cell.index, cell.depth)
        logt = self._log_table(cell.depth)
        return float(logt[np.arange(cell.depth), digits].sum())

    # partitions -------------------------------------------------------------------
    def _refine_log(self, base, depth, max_cells):
        if base != self.base:
            return _subdivide(self, base, depth, max_cells)
        b = self.base
        idx = np.zeros(1, dtype=object if b**depth >= 2**62 else np.int64)
        logm = np.zeros(1)
        if depth:
            table = self.law_table(depth)
        for n in range(1, depth + 1):
            p = table[n - 1]
            digits = np.flatnonzero(p)
            if len(digits) == 1:
                idx = idx * b + int(digits[0])
                logm = logm + math.log(p[digits[0]])
                continue
            if len(idx) * len(digits) > max_cells:
                raise CellBudgetError(
                    f"{len(idx) * len(digits)} nonzero cells at depth {n} exceed budget {max_cells}")
            idx = (idx[:, None] * b + digits.astype(idx.dtype)[None, :]).ravel()
            logm = (logm[:, None] + np.log(p[digits])[None, :]).ravel()
        return idx, logm

    def mass_classes(self, base, depth, max_classes=1_000_000):
        if base != self.base:
            return super().mass_classes(base, depth, max_classes)
        logm = np.zeros(1)
        logc = np.zeros(1)
        table = self.law_table(max(depth, 1))
        for n in range(1, depth + 1):
            p = table[n - 1]
            digits = np.flatnonzero(p)
            if len(digits) == 1:
                logm = logm + math.log(p[digits[0]])
                continue
            logm = (logm[:, None] + np.log(p[digits])[None, :]).ravel()
            logc = np.repeat(logc, len(digits))
            logm, logc = _group_log_classes(logm, logc)
            if len(logm) > max_classes:
                raise CellBudgetError(f"{len(logm)} distinct cell masses exceed budget {max_classes}")
        return logm, logc

    # sampling -------------------------------------------------------------------
    def sample_digits(self, rng, count: int, ndig: int) -> np.ndarray:
        """Draw the first ``ndig`` digits of ``count`` independent points."""
        table = self.law_table(ndig)
        out = np.zeros((count, ndig), dtype=np.int64)
        for n in range(ndig):
            p = table[n]
            digits = np.flatnonzero(p)
            if len(digits) == 1:
                out[:, n] = digits[0]
            else:
                out[:, n] = rng.choice(digits, size=count, p=p[digits])
        return out

    def _sample(self, rng, count):
        ndig = math.ceil(60 / math.log2(self.base))
        digits = self.sample_digits(rng, count, ndig)
        weights = float(self.base) ** -np.arange(1, ndig + 1)
        return TWO_PI * (digits @ weights)

    def _sample_exact(self, rng, count, resolution):
        coarse = math.ceil(-_log_fraction(resolution) / math.log(self.base))
        ndig = self._max_log_tail(coarse, math.log(2.0**-64)) + 1
        digits = self.sample_digits(rng, count, ndig)
        denom = self.base**ndig
        out = []
        for row in digits:
            num = int(gmpy2.mpz("".join(map(str, row)), self.base)) if self.base <= 10 else \
                int("".join(np.base_repr(int(d), 36) for d in row), self.base)
            out.append(ExactAngle(Fraction(2 * num + 1, 2 * denom)))
        return out

    def describe(self):
        return {"kind": self.kind, "name": self.name, "base": self.base}


# ---------------------------------------------------------------------------
# Iterated function systems
# ---------------------------------------------------------------------------


class IfsMeasure(SpectralMeasure):
    """Invariant measure of ``x -> scale_m * x + offset_m`` on [0, 1] (in turns).

    When all scales equal ``1/b`` and all offsets are multiples of ``1/b`` the
    measure is a constant-law digit product and every operation is delegated
    to that exact representation.  Otherwise generic cylinder recursions are
    used.
    """

    kind = "ifs"

    def __init__(self, scales: Sequence[float], offsets: Sequence[float], probs: Sequence[float], *,
                 name: str = "ifs", fourier_tolerance: float = 1e-10):
        s = np.asarray(scales, dtype=float)
        o = np.asarray(offsets, dtype=float)
        p = np.asarray(probs, dtype=float)
        if not (s.shape == o.shape == p.shape) or s.ndim != 1 or len(s) == 0:
            raise ValueError("scales, offsets and probs must be equal-length 1-d sequences")
        if np.any((s <= 0) | (s >= 1)):
            raise ValueError("scales must lie in (0, 1)")
        if np.any(p <= 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError("probs must be positive and sum to 1")
        order = np.argsort(o)
        s, o, p = s[order], o[order], p[order]
        ends = o + s
        if o[0] < 0 or ends[-1] > 1 + 1e-12 or np.any(ends[:-1] > o[1:] + 1e-12):
            raise ValueError("map images must be disjoint (up to endpoints) and inside [0, 1]")
        self.scales, self.offsets, self.probs = s, o, p / p.sum()
        self.name = name
        self.fourier_tolerance = fourier_tolerance
        self.dimension = float(np.sum(self.probs * np.log(self.probs)) / np.sum(self.probs * np.log(self.scales)))
        self._mean = float(np.sum(self.probs * self.offsets) / (1.0 - np.sum(self.probs * self.scales)))
        self._digits = self._as_digits()

    def __repr__(self):
        return f"IfsMeasure(name={self.name!r}, maps={len(self.scales)})"

    def _as_digits(self):
        b = round(1.0 / self.scales[0])
        if b < 2 or np.any(np.abs(self.scales * b - 1.0) > 1e-12):
            return None
        d = np.round(self.offsets * b)
        if np.any(np.abs(self.offsets * b - d) > 1e-9):
            return None
        law = np.zeros(b)
        law[d.astype(int)] = self.probs
        if np.count_nonzero(law) < 2:
            return None
        return DigitProductMeasure.constant(b, law, name=self.name, fourier_tolerance=self.fourier_tolerance)

    @property
    def native_base(self):
        return self._digits.base if self._digits is not None else None

    def known_dimensions(self):
        d = self.dimension
        return {"information": d, "hausdorff": d, "fractal": d}

    def describe(self):
        return {"kind": self.kind, "name": self.name, "scales": self.scales.tolist(),
                "offsets": self.offsets.tolist(), "probs": self.probs.tolist(),
                "information_dimension": self.dimension}

    # delegation --------------------------------------------------------------------
    def _cdf_scalar(self, lam):
        if self._digits is not None:
            return self._digits._cdf_scalar(lam)
        return super()._cdf_scalar(lam)

    def _quantile(self, x):
        if self._digits is not None:
            return self._digits._quantile(x)
        lam = np.zeros_like(x)
        width = np.ones_like(x)
        x = x.copy()
        cum = np.concatenate([[0.0], np.cumsum(self.probs)[:-1]])
        while width.max() > 2.0**-60:
            k = np.clip(np.searchsorted(cum, x, side="right") - 1, 0, len(cum) - 1)
            x = np.clip((x - cum[k]) / self.probs[k], 0.0, 1.0)
            lam += width * self.offsets[k]
            width *= self.scales[k]
        return TWO_PI * lam

    def _quantile_exact(self, x):
        if self._digits is not None:
            return self._digits._quantile_exact(x)
        return super()._quantile_exact(x)

    def _fourier_nonneg(self, t):
        if self._digits is not None:
            return self._digits._fourier_nonneg(t)
        omega = TWO_PI * np.asarray(t, dtype=float)
        wmax = float(omega.max())
        # |phi(u) - exp(i u mean)| <= u^2 Var/2 <= u^2/8
        s_stop = math.sqrt(8.0 * self.fourier_tolerance) / wmax
        out = np.zeros(len(omega), dtype=complex)
        mass = np.ones(1)
        off = np.zeros(1)
        scale = np.ones(1)
        while len(mass):
            done = scale <= s_stop
            if np.any(done):
                out += np.exp(1j * np.outer(omega, off[done] + scale[done] * self._mean)) @ mass[done]
            mass, off, scale = mass[~done], off[~done], scale[~done]
            if len(mass) * len(self.probs) > 4_000_000:
                raise MeasureResourceError("IFS Fourier refinement exceeds node budget; lower |t| or tolerance")
            mass = np.outer(mass, self.probs).ravel()
            off = (off[:, None] + scale[:, None] * self.offsets[None, :]).ravel()
            scale = np.outer(scale, self.scales).ravel()
        return out

    def log_cell_mass(self, cell):
        if self._digits is not None:
            return self._digits.log_cell_mass(cell)
        return super().log_cell_mass(cell)

    def _log_mass_turns(self, lo, hi, close_right=False):
        if self._digits is not None:
            return self._digits._log_mass_turns(lo, hi, close_right)
        lo_f, hi_f = float(lo), float(hi)
        if lo_f >= hi_f:
            return LOG_ZERO
        floor = math.log(self.fourier_tolerance) - math.log(1e3)
        logs = [LOG_ZERO]
        stack = [(0.0, 0.0, 1.0)]
        while stack:
            lm, o, s = stack.pop()
            if o + s <= lo_f or o >= hi_f:
                continue
            if lo_f <= o and o + s <= hi_f:
                logs.append(lm)
                continue
            if lm < floor:
                frac = (min(hi_f, o + s) - max(lo_f, o)) / s
                logs.append(lm + math.log(frac))
                continue
            for pm, om, sm in zip(self.probs, self.offsets, self.scales):
                stack.append((lm + math.log(pm), o + s * om, s * sm))
        return _logsumexp(logs)

    def _refine_log(self, base, depth, max_cells):
        if self._digits is not None:
            return self._digits._refine_log(base, depth, max_cells)
        return _subdivide(self, base, depth, max_cells)

    def mass_classes(self, base, depth, max_classes=1_000_000):
        if self._digits is not None:
            return self._digits.mass_classes(base, depth, max_classes)
        return super().mass_classes(base, depth, max_classes)

    def _sample(self, rng, count):
        if self._digits is not None:
            return self._digits._sample(rng, count)
        x = np.zeros(count)
        width = np.ones(count)
        while width.max() > 2.0**-60:
            k = rng.choice(len(self.probs), size=count, p=self.probs)
            x += width * self.offsets[k]
            width *= self.scales[k]
        return TWO_PI * x

    def _sample_exact(self, rng, count, resolution):
        if self._digits is not None:
            return self._digits._sample_exact(rng, count, resolution)
        offs = [Fraction(float(v)) for v in self.offsets]
        scs = [Fraction(float(v)) for v in self.scales]
        out = []
        for _ in range(count):
            x, w = Fraction(0), Fraction(1)
            while w > resolution * Fraction(1, 2**20):
                k = rng.choice(len(self.probs), p=self.probs)
                x += w * offs[k]
                w *= scs[k]
            out.append(ExactAngle(x))
        return out


# ---------------------------------------------------------------------------
# Mixtures
# ---------------------------------------------------------------------------


class MixtureMeasure(SpectralMeasure):
    """``P * point_part + (1 - P) * continuous_part``."""

    kind = "mixture"

    def __init__(self, point_part: AtomicMeasure, continuous_part: SpectralMeasure, P: float,
                 fourier_tolerance: float = 1e-10):
        if not isinstance(point_part, AtomicMeasure):
            raise TypeError("point_part must be an AtomicMeasure")
        if continuous_part.has_atoms:
            raise ValueError("continuous_part must not have atoms")
        if not 0.0 <= P <= 1.0:
            raise ValueError("P must lie in [0, 1]")
        self.point_part = point_part
        self.continuous_part = continuous_part
        self.P = float(P)
        self.has_atoms = self.P > 0
        self.fourier_tolerance = fourier_tolerance

    def __repr__(self):
        return f"MixtureMeasure(P={self.P}, {self.point_part!r}, {self.continuous_part!r})"

    def _parts(self):
        if self.P > 0:
            yield math.log(self.P), self.point_part
        if self.P < 1:
            yield math.log1p(-self.P), self.continuous_part

    def _cdf_scalar(self, lam):
        return sum(math.exp(lw) * m._cdf_scalar(lam) for lw, m in self._parts())

    def _quantile(self, x):
        return self.continuous_part._quantile(x)

    def _fourier_nonneg(self, t):
        return sum(math.exp(lw) * m._fourier_nonneg(t) for lw, m in self._parts())

    def log_cell_mass(self, cell):
        return _logsumexp([lw + m.log_cell_mass(cell) for lw, m in self._parts()])

    def _log_mass_turns(self, lo, hi, close_right=False):
        return _logsumexp([lw + m._log_mass_turns(lo, hi, close_right) for lw, m in self._parts()])

    def _refine_log(self, base, depth, max_cells):
        cells: dict = {}
        for lw, m in self._parts():
            idx, logm = m._refine_log(base, depth, max_cells)
            for i, lm in zip(idx, logm):
                key = int(i)
                cells[key] = _log_add(cells.get(key, LOG_ZERO), lw + lm)
        if len(cells) > max_cells:
            raise CellBudgetError(f"{len(cells)} nonzero cells exceed budget {max_cells}")
        keys = sorted(cells)
        dtype = object if base**depth >= 2**62 else np.int64
        return np.array(keys, dtype=dtype), np.array([cells[k] for k in keys])

    def _sample(self, rng, count):
        n_point = rng.binomial(count, self.P)
        pts = np.concatenate([self.point_part._sample(rng, n_point) if n_point else np.zeros(0),
                              self.continuous_part._sample(rng, count - n_point) if count > n_point else np.zeros(0)])
        return pts[rng.permutation(count)]

    def _sample_exact(self, rng, count, resolution):
        which = rng.random(count) < self.P
        n_point = int(which.sum())
        pts = iter(self.point_part._sample_exact(rng, n_point, resolution) if n_point else [])
        rest = iter(self.continuous_part._sample_exact(rng, count - n_point, resolution) if count > n_point else [])
        return [next(pts) if w else next(rest) for w in which]

    def describe(self):
        return {"kind": self.kind, "P": self.P, "point": self.point_part.describe(),
                "continuous": self.continuous_part.describe()}


# ---------------------------------------------------------------------------
# Named constructions
# ---------------------------------------------------------------------------


def uniform(**kw) -> IfsMeasure:
    """Normalised Lebesgue measure, as the two-halves IFS."""
    return IfsMeasure([0.5, 0.5], [0.0, 0.5], [0.5, 0.5], name="uniform", **kw)


def cantor(**kw) -> IfsMeasure:
    """Middle-thirds Cantor measure."""
    return IfsMeasure([1 / 3, 1 / 3], [0.0, 2 / 3], [0.5, 0.5], name="cantor", **kw)


def binomial(p: float, **kw) -> IfsMeasure:
    """Binomial (Bernoulli) cascade: left half gets ``p``, right half ``1 - p``."""
    if not 0 < p < 1:
        raise ValueError("p must lie in (0, 1)")
    return IfsMeasure([0.5, 0.5], [0.0, 0.5], [p, 1 - p], name=f"binomial({p:g})", **kw)


def _factorial_block(n: int) -> int:
    """The ``k`` with ``k! <= n < (k+1)!``."""
    k, f = 1, 1
    while f * (k + 1) <= n:
        k += 1
        f *= k
    return k


def appendix_digit_law(n: int) -> np.ndarray:
    if _factorial_block(n) % 2 == 0:
        return np.array([1.0, 0.0])
    return np.array([0.5, 0.5])


class AppendixMeasure(DigitProductMeasure):
    """Binary digits frozen to 0 on even factorial blocks, fair on odd ones.

    Zero Hausdorff dimension but fractal dimension one: at depth ``k!`` every
    nonzero dyadic cell has the same mass ``appendix_mu(k)``.
    """

    def __init__(self, fourier_tolerance: float = 1e-10):
        super().__init__(2, appendix_digit_law, name="appendix", fourier_tolerance=fourier_tolerance)

    def known_dimensions(self):
        return {"hausdorff": 0.0, "fractal": 1.0}

    def describe(self):
        d = super().describe()
        d["log2_mu"] = {k: appendix_log2_mu(k) for k in range(1, 6)}
        return d


def appendix_log2_mu(k: int) -> int:
    """Exact ``log2`` of the common nonzero cell mass at depth ``k!``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    r = k // 2
    e = sum((2 * j - 1) * math.factorial(2 * j - 1) for j in range(1, r + 1))
    if k % 2:
        e += 1
    return -e


def appendix_mu(k: int) -> tuple[float, float]:
    """``(ln mu_k, mu_k)``; the second entry underflows to 0 from ``k = 6`` on."""
    e = appendix_log2_mu(k)
    return e * math.log(2.0), math.ldexp(1.0, e)
