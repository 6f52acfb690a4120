"""Second-order word embeddings from nearest-neighbour graphs."""

__version__ = "0.1.0"

from .embed_io import EmbeddingSet, Vocabulary, load_embeddings, normalize_rows, save_embeddings
from .graph import WeightedDigraph, build_alias_tables, induce_multi, induce_single, load_graph, save_graph
from .knn import NeighborList, all_neighbors, cosine_similarity, top_k_neighbors
from .sgns import SgnsConfig, train
from .walks import WalkConfig, WalkCorpus, generate_corpus, generate_walk, transition_distribution

__all__ = [
    "EmbeddingSet",
    "NeighborList",
    "SgnsConfig",
    "Vocabulary",
    "WalkConfig",
    "WalkCorpus",
    "WeightedDigraph",
    "all_neighbors",
    "build_alias_tables",
    "cosine_similarity",
    "generate_corpus",
    "generate_walk",
    "induce_multi",
    "induce_single",
    "load_embeddings",
    "load_graph",
    "normalize_rows",
    "save_embeddings",
    "save_graph",
    "top_k_neighbors",
    "train",
    "transition_distribution",
]
