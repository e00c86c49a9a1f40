"""Extractive sentence compression as tree-to-subtree transduction."""

from .tree import Tree, build_tree, is_isomorphic, skeleton
from .ptb import (
    CorpusRecord,
    leaf_tokens,
    load_corpus,
    parse_bracketed,
    serialize_bracketed,
    write_corpus,
)
from .labeling import align_compression, apply_mask, mask_to_sentence
from .encoding import (
    EmbeddingTable,
    NodeEncoder,
    Vocabulary,
    build_vocab,
    load_embeddings,
    random_embeddings,
)
from .model import (
    ModelParameters,
    binary_head,
    cell_forward,
    init_parameters,
    nearest_word,
    predict_mask,
    unfold,
    vectorial_head,
)
from .metrics import (
    MetricsReport,
    accuracy_histogram,
    compression_rate,
    edit_distance,
    evaluate_masks,
    f1,
    ssa,
    tradeoff_t,
)
from .training import (
    Adam,
    TrainingConfig,
    backward,
    bce_loss,
    finite_difference_grads,
    grid_search,
    l2_penalty,
    load_checkpoint,
    mse_loss,
    save_checkpoint,
    train,
)
from .estimator import TreeCompressor

__version__ = "0.1.0"

__all__ = [
    "Tree",
    "build_tree",
    "is_isomorphic",
    "skeleton",
    "CorpusRecord",
    "leaf_tokens",
    "load_corpus",
    "parse_bracketed",
    "serialize_bracketed",
    "write_corpus",
    "align_compression",
    "apply_mask",
    "mask_to_sentence",
    "EmbeddingTable",
    "NodeEncoder",
    "Vocabulary",
    "build_vocab",
    "load_embeddings",
    "random_embeddings",
    "ModelParameters",
    "binary_head",
    "cell_forward",
    "init_parameters",
    "nearest_word",
    "predict_mask",
    "unfold",
    "vectorial_head",
    "MetricsReport",
    "accuracy_histogram",
    "compression_rate",
    "edit_distance",
    "evaluate_masks",
    "f1",
    "ssa",
    "tradeoff_t",
    "Adam",
    "TrainingConfig",
    "backward",
    "bce_loss",
    "finite_difference_grads",
    "grid_search",
    "l2_penalty",
    "load_checkpoint",
    "mse_loss",
    "save_checkpoint",
    "train",
    "TreeCompressor",
]
