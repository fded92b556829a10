"""Imbalanced node classification on graphs with gated bi-kernel message passing."""

from imgbk._core import (
    DatasetBundle,
    Graph,
    SplitMasks,
    accuracy,
    auc_ovr_macro,
    build_graph,
    class_counts,
    class_homophily,
    expected_homophily,
    fast_gate_table,
    graph_homophily,
    imbalance_ratio,
    load_dataset,
    macro_f1,
    make_extreme_split,
    profile,
    save_dataset,
    sbm_generate,
    split_random,
    train,
    validate_graph,
    __version__,
)

__all__ = [
    "DatasetBundle",
    "Graph",
    "SplitMasks",
    "accuracy",
    "auc_ovr_macro",
    "build_graph",
    "class_counts",
    "class_homophily",
    "expected_homophily",
    "fast_gate_table",
    "graph_homophily",
    "imbalance_ratio",
    "load_dataset",
    "macro_f1",
    "make_extreme_split",
    "profile",
    "save_dataset",
    "sbm_generate",
    "split_random",
    "train",
    "validate_graph",
    "__version__",
]
