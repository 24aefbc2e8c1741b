"""Simulation, estimation, and community detection for logit-link
degree-corrected block models."""

from .errors import ConfigError, DomainError, EstimationError, LogitDcbmError
from .model import (Adjacency, ModelParams, ThetaSpec, build_tilde_omega,
                    gen_partition, gen_theta, logit_link, mean_matrices,
                    sample_adjacency, snr)
from .pipeline import (ConditionReport, RScoreConfig, RScoreTrace, check_conditions,
                       hamming_error, r_score, rate_curves, renormalized_matrix,
                       trace_to_csv)
from .refit import (CycleCounts, FitBundle, assemble_N, cycle_counts_m3,
                    estimate_P, estimate_theta, estimate_theta_general_m,
                    estimate_x0, load_fit, refit_from_partition, save_fit)
from .rng import substream
from .spectral import EigenPairs, kmeans, score, score_detailed, score_embedding, top_k_eigenpairs

__version__ = "0.1.0"

__all__ = [
    "Adjacency", "ConditionReport", "ConfigError", "CycleCounts", "DomainError",
    "EigenPairs", "EstimationError", "FitBundle", "LogitDcbmError", "ModelParams",
    "RScoreConfig", "RScoreTrace", "ThetaSpec", "assemble_N", "build_tilde_omega",
    "check_conditions", "cycle_counts_m3", "estimate_P", "estimate_theta",
    "estimate_theta_general_m", "estimate_x0", "gen_partition", "gen_theta",
    "hamming_error", "kmeans", "load_fit", "logit_link", "mean_matrices",
    "r_score", "rate_curves", "refit_from_partition", "renormalized_matrix",
    "sample_adjacency", "save_fit", "score", "score_detailed", "score_embedding",
    "snr", "substream", "top_k_eigenpairs", "trace_to_csv",
]
