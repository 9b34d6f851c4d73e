from .lda import LinearDiscriminantReducer, lda_reduce
from .metrics import adjusted_rand_index, knn_purity
from .remap import RemapTable, kmeans, remap_accents
from .tsne import ExactTSNE, joint_probabilities, tsne

__all__ = [
    "LinearDiscriminantReducer",
    "lda_reduce",
    "adjusted_rand_index",
    "knn_purity",
    "RemapTable",
    "kmeans",
    "remap_accents",
    "ExactTSNE",
    "joint_probabilities",
    "tsne",
]
