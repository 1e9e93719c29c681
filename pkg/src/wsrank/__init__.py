"""Wasserstein stable ranks, algebraic Wasserstein distances and metric learning."""

from .barcode import INF, Bar, Barcode, barcode_p_norm, p_norm, rank
from .contours import (STANDARD, GaussianComponent, GaussianMixtureContour, StandardContour, lifetime,
                       pC_norm, shift, transform_barcode)
from .distances import (MetricChoice, dist_delete_shortest, dist_to_zero, kappa, wasserstein_pp,
                        wasserstein_qp_bruteforce)
from .stable_rank import StepFunction, interleaving_fast, interleaving_step, stable_rank

__all__ = [
    "INF", "Bar", "Barcode", "barcode_p_norm", "p_norm", "rank",
    "STANDARD", "GaussianComponent", "GaussianMixtureContour", "StandardContour", "lifetime", "pC_norm",
    "shift", "transform_barcode",
    "MetricChoice", "dist_delete_shortest", "dist_to_zero", "kappa", "wasserstein_pp",
    "wasserstein_qp_bruteforce",
    "StepFunction", "interleaving_fast", "interleaving_step", "stable_rank",
]
