"""Numerical laboratory for position/momentum Fisher information of 1-D free-particle states."""
from .analytic import (AnalyticState, c_of_t, density_p, density_x, fisher_p_exact,
                       fisher_x_quadrature, hermite, norm_const_sq, product_closed, psi_k)
from .errors import (FisherLabError, GridResourceError, GridTooSmallError, InvariantError,
                     StateError)
from .fisher import (Diagnostics, Estimator, FisherResult, fisher_amplitude, fisher_density,
                     fisher_product)
from .grid import (Grid, Space, WaveFunction, make_grid, moment, normalize, sample,
                   to_momentum, to_position)
from .propagator import (EvolutionPlan, ProductEvaluator, RegridPolicy, auto_grid,
                         evolve_free, evolve_series, resample)
from .series import CurveSeries, DecayFit, SeriesEntry, crossing_time, fit_decay
from .states import load_state, parse_state

__version__ = "0.1.0"

__all__ = [
    "AnalyticState", "c_of_t", "density_p", "density_x", "fisher_p_exact",
    "fisher_x_quadrature", "hermite", "norm_const_sq", "product_closed", "psi_k",
    "FisherLabError", "GridResourceError", "GridTooSmallError", "InvariantError", "StateError",
    "Diagnostics", "Estimator", "FisherResult", "fisher_amplitude", "fisher_density",
    "fisher_product", "Grid", "Space", "WaveFunction", "make_grid", "moment", "normalize",
    "sample", "to_momentum", "to_position", "EvolutionPlan", "ProductEvaluator",
    "RegridPolicy", "auto_grid", "evolve_free", "evolve_series", "resample",
    "CurveSeries", "DecayFit", "SeriesEntry", "crossing_time", "fit_decay",
    "load_state", "parse_state",
]
