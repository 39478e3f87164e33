"""Information densities, exact sum laws and Gaussian approximations."""

from qres.info.berry_esseen import BerryEsseenGap, berry_esseen_bound, berry_esseen_gap
from qres.info.density import (
    InfoDensityTable,
    InfoStats,
    binary_entropy,
    closed_form_capacity,
    density_table,
    moments_grid,
    stats,
)
from qres.info.normal import gaussian_cdf, gaussian_quantile
from qres.info.sums import (
    SumDistribution,
    cdf,
    convolve,
    quantile,
    sum_distribution,
    tail_probabilities,
    two_point_law,
)

__all__ = [
    "BerryEsseenGap",
    "InfoDensityTable",
    "InfoStats",
    "SumDistribution",
    "berry_esseen_bound",
    "berry_esseen_gap",
    "binary_entropy",
    "cdf",
    "closed_form_capacity",
    "convolve",
    "density_table",
    "gaussian_cdf",
    "gaussian_quantile",
    "moments_grid",
    "quantile",
    "stats",
    "sum_distribution",
    "tail_probabilities",
    "two_point_law",
]
