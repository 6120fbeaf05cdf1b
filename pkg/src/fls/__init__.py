"""Randomized kernel embeddings and fast landmark subspace clustering.

The public API is re-exported lazily so that `import fls` stays cheap and,
more importantly, so the CLI can pin BLAS thread counts through environment
variables before numpy is first imported.
"""

from importlib import import_module

__version__ = "0.1.0"

_EXPORTS = {
    "errors": [
        "FLSError",
        "InvalidParam",
        "DegenerateInput",
        "DimensionMismatch",
        "RankDeficient",
        "DenseLimitExceeded",
        "DegreeNotPositive",
        "ParseError",
        "RaggedRows",
        "DeltaTooLarge",
        "EigengapTooSmall",
        "PipelineError",
    ],
    "rng": ["seed_sequence", "make_rng", "split"],
    "linalg": [
        "AffineFlat",
        "SvdResult",
        "pca_fit",
        "truncated_svd",
        "truncated_svd_power",
        "kmeans",
        "hungarian_match",
    ],
    "kernels": [
        "GaussianRFF",
        "LandmarkGaussian",
        "SubspaceKernel",
        "EmbeddingMatrix",
        "sample_gaussian_rff",
        "sample_uniform_grassmann",
        "haar_frame_batch",
        "flat_distance",
        "flat_distance_matrix",
        "feature_matrix",
        "embed",
        "exact_gaussian_kernel",
        "gaussian_kernel_matrix",
        "approx_kernel_matrix",
        "spec_to_json",
        "spec_from_json",
    ],
    "landmarks": [
        "LandmarkConfig",
        "select_landmarks",
        "best_fit_flat",
        "default_sigma",
        "build_subspace_spec",
        "landmark_flat_pool",
    ],
    "datagen": [
        "SyntheticModel",
        "DataSet",
        "sphere_normalize",
        "gen_synthetic",
        "save_csv",
        "load_csv",
    ],
    "cluster": [
        "ClusterResult",
        "degrees",
        "spectral_embed",
        "fls_cluster",
        "dense_normalized",
        "dense_spectral_cluster",
    ],
    "evaluation": [
        "EvalReport",
        "clustering_rate",
        "RffFamily",
        "FlatPoolFamily",
        "GrassmannFamily",
        "LandmarkGaussianFamily",
        "verify_kernel_convergence",
        "hoeffding_check",
        "verify_perturbation",
        "verify_eigvec_convergence",
        "verify_rotation_invariance",
        "synthetic_suite",
        "benchmark_suite",
        "format_benchmark_table",
    ],
}

_LOOKUP = {name: module for module, names in _EXPORTS.items() for name in names}
__all__ = sorted(_LOOKUP) + ["__version__"]


def __getattr__(name):
    module = _LOOKUP.get(name)
    if module is None:
        raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
    value = getattr(import_module(f".{module}", __name__), name)
    globals()[name] = value
    return value


def __dir__():
    return __all__
