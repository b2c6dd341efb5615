"""Time-averaging entropy of spectral measures and dimension estimators."""

from .dimension import (
    DimensionEstimate,
    appendix_scales,
    fractal_dimension,
    geometric_scales,
    hausdorff_estimate,
    information_dimension,
    pointwise_alpha,
)
from .entropy import (
    BasisDistribution,
    DensityMatrixSpectrum,
    EntropyCurve,
    bf_distribution,
    eigen_entropy,
    entropy_curve,
    lwb_bound,
    m_epsilon,
    moment,
    n_epsilon,
    shannon_entropy,
    toeplitz,
    w_quantity,
)
from .measures import (
    AppendixMeasure,
    AtomicMeasure,
    DigitProductMeasure,
    DyadicCell,
    ExactAngle,
    IfsMeasure,
    Interval,
    MixtureMeasure,
    SpectralMeasure,
    appendix_mu,
    binomial,
    cantor,
    uniform,
)
from .specfile import resolve as load_measure
from .timeseries import StationarySeries, estimate_autocorrelation, spectrum_dimension, synthesize

__version__ = "0.1.0"
