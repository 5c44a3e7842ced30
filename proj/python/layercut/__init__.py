"""Layer similarity analysis and cutoff selection."""

from ._core import (
    ActivationSet,
    LayercutError,
    Metric,
    Regime,
    __version__,
    block_variability,
    cka,
    jaccard_knn,
    read_container,
    read_layer_csvs,
    run_sensitivity,
    select_cutoff,
    similarity_matrix,
    svcca,
    synthesize,
    write_container,
)

__all__ = [
    "ActivationSet",
    "LayercutError",
    "Metric",
    "Regime",
    "__version__",
    "block_variability",
    "cka",
    "jaccard_knn",
    "read_container",
    "read_layer_csvs",
    "run_sensitivity",
    "select_cutoff",
    "similarity_matrix",
    "svcca",
    "synthesize",
    "write_container",
]
