"""spexbma: spatial-extremes ensemble pipelines.

Point-wise GEV and max-stable-process models for annual maxima, combined
across multiple simulation models by bootstrap-weighted Bayesian model
averaging, with return-level prediction and variance/bias diagnostics.
"""

__version__ = "0.1.0"

from .gev import GevParams, LMoments, fit_lmoments, gev_cdf, gev_pdf, gev_sample, return_level

__all__ = [
    "GevParams",
    "LMoments",
    "fit_lmoments",
    "gev_cdf",
    "gev_pdf",
    "gev_sample",
    "return_level",
]
