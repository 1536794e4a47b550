"""Temporal disaggregation of low-frequency series with high-frequency indicators.

Classical GLS estimators (Chow-Lin, Fernandez, Litterman) cover the case of
few indicators; `sp_td` and `adaptive_sp_td` handle more indicators than
low-frequency observations through a LASSO path scored by BIC.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .aggregation import AggMode, AggregationSpec, aggregate, build_aggregation_matrix
from .covariance import (
    CovarianceFactor,
    CovarianceKind,
    CovarianceModel,
    ar1_shape_matrix,
    build_ar1_shape,
    build_fernandez_shape,
    build_litterman_shape,
    cholesky_factor,
    fernandez_shape_matrix,
    litterman_shape_matrix,
)
from .data import (
    IndicatorPanel,
    LowFrequencySeries,
    correlation_filter,
    load_panel,
    load_series,
)
from .dgp import DgpConfig, DgpOutput, generate, generate_errors
from .errors import (
    DegenerateColumnWarning,
    DegenerateDesignError,
    DimensionRegimeError,
    DisaggError,
    DisaggWarning,
    DomainError,
    FallbackNotice,
    InvalidGrid,
    NumericalError,
    ParseError,
    RankError,
    ShapeError,
)
from .gls import (
    DisaggregationResult,
    GlsFit,
    Method,
    default_rho_grid,
    disaggregate_classical,
    gaussian_loglik,
    gls_estimate,
    profile_rho_search,
)
from .lars import LarsPath, lars_path
from .sparse import SparseFit, adaptive_sp_td, bic_select, debias_refit, disaggregate, sp_td, whiten_problem

__all__ = sorted(
    name for name, obj in globals().items()
    if not name.startswith("_") and name != "annotations" and not hasattr(obj, "__path__") and type(obj).__name__ != "module"
)
