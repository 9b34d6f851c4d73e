from .extractor import AccentEmbeddingExtractor, frame_windows
from .sampler import WeightedAccentSampler, default_sampler_weights
from .table import (
    EmbeddingTable,
    corrupt_labels,
    load_embeddings,
    load_table,
    save_embeddings,
    save_table,
    z_normalize,
)

__all__ = [
    "AccentEmbeddingExtractor",
    "frame_windows",
    "WeightedAccentSampler",
    "default_sampler_weights",
    "EmbeddingTable",
    "corrupt_labels",
    "load_embeddings",
    "load_table",
    "save_embeddings",
    "save_table",
    "z_normalize",
]
