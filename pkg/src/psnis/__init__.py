"""Poisson denoising of class-specific images with sampled patch priors.

The package learns a clustered Gaussian prior from clean patches of an image
class, then restores Poisson-corrupted images by per-patch posterior-mean
estimation: candidate clean patches are drawn from the training rosters and
weighted by the exact Poisson likelihood of the observed counts, with the
weights normalized by their own sum (self-normalized importance sampling).
"""

from .clustering import (
    TrainingSet,
    assign_clean_patch,
    cem_refine,
    classification_log_likelihood,
    estimate_cluster_params,
    kmeans_init,
    learn_prior,
)
from .denoiser import (
    DegenerateWeightsError,
    PatchEstimate,
    SamplerState,
    denoise_patch,
    denoise_patch_rounds,
    draw_cluster_samples,
    fallback_estimate,
    mmse_estimate,
    select_cluster,
)
from .patches import (
    ClusterModel,
    ModelDegenerateError,
    Patch,
    PriorModel,
    gaussian_logpdf,
    gaussian_logpdf_batch,
    regularize_covariance,
    ridge_value,
)
from .pipeline import (
    DenoiseConfig,
    aggregate_patches,
    denoise_image,
    denoise_image_patches,
    extract_patches,
    psnr,
    scale_to_peak,
)
from .poisson import NoisyPatch, poisson_loglik, sample_poisson_image
from .model_io import ModelFormatError, load_model, save_model
from .snis import (
    WeightedSampleSet,
    effective_sample_size,
    normalize_weights,
    snis_estimate,
)

__version__ = "0.1.0"

__all__ = [
    "ClusterModel",
    "DegenerateWeightsError",
    "DenoiseConfig",
    "ModelDegenerateError",
    "ModelFormatError",
    "NoisyPatch",
    "Patch",
    "PatchEstimate",
    "PriorModel",
    "SamplerState",
    "TrainingSet",
    "WeightedSampleSet",
    "aggregate_patches",
    "assign_clean_patch",
    "cem_refine",
    "classification_log_likelihood",
    "denoise_image",
    "denoise_image_patches",
    "denoise_patch",
    "denoise_patch_rounds",
    "draw_cluster_samples",
    "effective_sample_size",
    "estimate_cluster_params",
    "extract_patches",
    "fallback_estimate",
    "gaussian_logpdf",
    "gaussian_logpdf_batch",
    "kmeans_init",
    "learn_prior",
    "load_model",
    "mmse_estimate",
    "normalize_weights",
    "poisson_loglik",
    "psnr",
    "regularize_covariance",
    "ridge_value",
    "sample_poisson_image",
    "save_model",
    "scale_to_peak",
    "select_cluster",
    "snis_estimate",
]
