"""Stationary sequences with prescribed spectral measure, and the reverse trip.

Synthesis uses random phases over the cells of a refinement: each cell
contributes one complex exponential at its midpoint frequency with amplitude
``sqrt(mass)``.  Analysis estimates autocorrelations from data, builds the
Toeplitz matrices and fits eigenvalue-entropy growth against ``ln T``.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import fft as sfft

from .entropy import EntropyCurve, fit_log_slope, spectrum_from_toeplitz, toeplitz_from_row
from .measures import AtomicMeasure, CellBudgetError, MixtureMeasure, SpectralMeasure, TWO_PI

log = logging.getLogger(__name__)

MAX_GRID = 1 << 24


class InsufficientLengthError(ValueError):
    """The series is too short for the requested lags."""


class SeriesFormatError(ValueError):
    """Malformed sample CSV; ``line`` is the 1-based offending line."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class StationarySeries:
    values: np.ndarray
    origin: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim != 1 or len(self.values) < 1:
            raise ValueError("a series needs at least one sample")

    @property
    def length(self) -> int:
        return len(self.values)


@dataclass
class AutocorrelationEstimate:
    lags: np.ndarray
    values: np.ndarray

    def at(self, t: int) -> complex:
        """Value at lag ``t``; negative lags by conjugate symmetry."""
        v = self.values[abs(t)]
        return complex(v if t >= 0 else np.conj(v))


def _cell_sum(idx, weights, phases, G: int, length: int) -> np.ndarray:
    # sum_j w_j e^{i(2pi (j + 1/2) t / G + phi_j)} via one inverse FFT of size G
    coeffs = np.zeros(G, dtype=complex)
    coeffs[np.asarray(idx, dtype=np.int64)] = weights * np.exp(1j * phases)
    periodic = sfft.ifft(coeffs) * G
    t = np.arange(length)
    return periodic[t % G] * np.exp(1j * np.pi * t / G)


def _atom_sum(positions, weights, phases, length: int) -> np.ndarray:
    t = np.arange(length)
    out = np.zeros(length, dtype=complex)
    for lam, w, ph in zip(positions, weights, phases):
        out += w * np.exp(1j * (lam * t + ph))
    return out


def synthesize(m: SpectralMeasure, length: int, depth: int = 12, seed: int = 0,
               base: int | None = None, max_cells: int = 1_000_000) -> StationarySeries:
    """Random-phase series whose autocorrelation approximates ``fourier(m, t)``.

    Atoms are placed at their exact positions.  The continuous part is
    represented by the depth-``depth`` cells of ``base`` (the measure's own
    base by default) at their midpoints.
    """
    from .dimension import native_base

    if length < 1:
        raise ValueError("length must be positive")
    rng = np.random.default_rng(seed)
    values = np.zeros(length, dtype=complex)
    parts = []
    if isinstance(m, AtomicMeasure):
        parts.append(("atoms", m, 1.0))
    elif isinstance(m, MixtureMeasure):
        if m.P > 0:
            parts.append(("atoms", m.point_part, m.P))
        if m.P < 1:
            parts.append(("cells", m.continuous_part, 1.0 - m.P))
    else:
        parts.append(("cells", m, 1.0))

    b = base or native_base(m)
    for how, part, weight in parts:
        if how == "atoms":
            phases = rng.uniform(0, TWO_PI, len(part.positions))
            values += _atom_sum(part.positions, np.sqrt(weight * part.weights), phases, length)
        else:
            G = b ** depth
            if G > MAX_GRID:
                raise CellBudgetError(f"grid {b}^{depth} exceeds {MAX_GRID} frequencies")
            idx, logm = part.refine_log(b, depth, max_cells)
            phases = rng.uniform(0, TWO_PI, len(idx))
            amp = np.sqrt(weight * np.exp(logm))
            values += _cell_sum(idx, amp, phases, G, length)
    origin = {"kind": "synthetic", "measure": m.describe() if hasattr(m, "describe") else repr(m),
              "seed": seed, "depth": depth, "base": b}
    return StationarySeries(values, origin)


def estimate_autocorrelation(s: StationarySeries, maxlag: int) -> AutocorrelationEstimate:
    """Biased estimate ``(1/L) sum_s X_{s+t} conj(X_s)`` normalised to 1 at lag 0.

    The biased form keeps every Toeplitz matrix built from it positive
    semidefinite.
    """
    L = s.length
    if maxlag < 0 or 4 * maxlag >= L:
        raise InsufficientLengthError(f"maxlag {maxlag} needs more than {4 * maxlag} samples, got {L}")
    n = sfft.next_fast_len(2 * L)
    X = sfft.fft(s.values, n)
    r = sfft.ifft(X * np.conj(X))[: maxlag + 1] / L
    if r[0].real <= 0:
        raise ValueError("series has zero power")
    r = r / r[0].real
    r[0] = 1.0
    return AutocorrelationEstimate(np.arange(maxlag + 1), r)


def spectrum_dimension(s: StationarySeries, times, fit_window=None) -> EntropyCurve:
    """Eigenvalue-entropy growth of the data Toeplitz matrices.

    The fitted slope against ``ln T`` estimates the dimension of the power
    spectrum.
    """
    times = np.asarray(list(times), dtype=np.int64)
    if len(times) < 2 or np.any(np.diff(times) <= 0) or times[0] < 1:
        raise ValueError("times must be a strictly increasing list of at least two positive integers")
    acf = estimate_autocorrelation(s, int(times[-1]) - 1)
    S, min_raw = [], []
    for T in times:
        spec = spectrum_from_toeplitz(toeplitz_from_row(acf.values[:T]))
        S.append(spec.entropy)
        min_raw.append(spec.min_raw)
    S = np.array(S)
    slope, intercept, resid, window = fit_log_slope(times, S, fit_window)
    return EntropyCurve(times, S, window, slope, intercept, resid, "data",
                        extra={"min_raw_eigenvalue": float(min(min_raw)), "length": s.length})


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


def write_series_csv(s: StationarySeries, dest) -> None:
    """Write ``re,im`` rows with a header to a path or text stream."""
    own = isinstance(dest, (str, Path))
    fh = open(dest, "w", newline="") if own else dest
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re", "im"])
        for z in s.values:
            w.writerow([repr(float(z.real)), repr(float(z.imag))])
    finally:
        if own:
            fh.close()


def read_series_csv(src) -> StationarySeries:
    """Parse an ``re,im`` CSV; raises :class:`SeriesFormatError` with the line number."""
    if isinstance(src, (str, Path)):
        with open(src, newline="") as fh:
            text = fh.read()
        origin = {"kind": "ingested", "file": str(src)}
    else:
        text = src.read()
        origin = {"kind": "ingested", "file": None}
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None:
        raise SeriesFormatError("empty file", 1)
    if [h.strip().lower() for h in header] != ["re", "im"]:
        raise SeriesFormatError(f"expected header 're,im', got {','.join(header)!r}", 1)
    vals = []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 2:
            raise SeriesFormatError(f"expected 2 columns, got {len(row)}", line)
        try:
            re_, im_ = float(row[0]), float(row[1])
        except ValueError:
            raise SeriesFormatError(f"not a number: {','.join(row)!r}", line) from None
        if not (math.isfinite(re_) and math.isfinite(im_)):
            raise SeriesFormatError("non-finite sample", line)
        vals.append(complex(re_, im_))
    if not vals:
        raise SeriesFormatError("no samples", reader.line_num + 1)
    return StationarySeries(np.array(vals), origin)
