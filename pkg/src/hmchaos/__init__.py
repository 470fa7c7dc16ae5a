"""hmchaos: simulation and exact combinatorics for holomorphic multiplicative chaos.

The central object is the random power series

    exp( sum_{k>=1} X(k) z^k / sqrt(k) ) = sum_{n>=0} A(n) z^n

with independent standard complex Gaussians X(k). The package provides
seeded replayable Gaussian streams, fast and reference power-series
exponentials, exact partition-level identities for the coefficients A(n),
Gaussian-walk barrier and change-of-measure experiments, and the Steinhaus
and F_q[t] multiplicative-function analogues, all behind a reproducible
experiment CLI.
"""

__version__ = "0.1.0"

from .chaos import (ChaosSample, circle_average_moment, circle_average_sample,
                    circle_mean_closed_form, circle_mean_mc, estimate_moment,
                    fit_decay_band, gaussian_abs_moment, sample_A,
                    theorem_band_factor)
from .errors import BudgetError, PreconditionError
from .mc import MomentEstimate
from .partitions import (Partition, a_of_partition, diagonal_second_moment,
                         enumerate_partitions, exact_total_mass,
                         orthogonality_check, partition_count,
                         reconstruct_A_by_largest_part)
from .rng import GaussianStream, Seed, UnitCircleStream, next_complex_gaussian, split
from .series import (ComplexSeries, exp_series, multiply, parseval_power_sum,
                     rankin_bound, smooth_partition_weight)

__all__ = [
    "BudgetError", "ChaosSample", "ComplexSeries", "GaussianStream",
    "MomentEstimate", "Partition", "PreconditionError", "Seed",
    "UnitCircleStream", "a_of_partition", "circle_average_moment",
    "circle_average_sample", "circle_mean_closed_form", "circle_mean_mc",
    "diagonal_second_moment", "enumerate_partitions", "estimate_moment",
    "exact_total_mass", "exp_series", "fit_decay_band", "gaussian_abs_moment",
    "multiply", "next_complex_gaussian", "orthogonality_check", "partition_count",
    "parseval_power_sum", "rankin_bound", "reconstruct_A_by_largest_part",
    "sample_A", "smooth_partition_weight", "split", "theorem_band_factor",
]
