"""Hybrid movie recommendation: catalog ingestion, page/payload extraction,
TF-IDF content similarity, SGD matrix factorization and blended re-ranking."""

__version__ = "0.1.0"

from .catalog import Catalog, ColumnMapping, MovieRecord, load_movie_catalog, lookup_title, merge_records
from .collaborative import ItemKNN, KnnConfig, MatrixFactorization, TrainConfig, train_mf
from .content import ContentRecommender, FeatureVector, FeatureVocabulary, cosine
from .evaluation import EvalReport, evaluate
from .hybrid import HybridConfig, HybridRecommendation, HybridRecommender, min_max_normalize
from .ratings import InteractionMatrix, RatingEvent, SplitSpec, build_interaction_matrix, load_ratings, split_ratings

__all__ = [
    "Catalog", "ColumnMapping", "MovieRecord", "load_movie_catalog", "lookup_title", "merge_records",
    "ItemKNN", "KnnConfig", "MatrixFactorization", "TrainConfig", "train_mf",
    "ContentRecommender", "FeatureVector", "FeatureVocabulary", "cosine",
    "EvalReport", "evaluate",
    "HybridConfig", "HybridRecommendation", "HybridRecommender", "min_max_normalize",
    "InteractionMatrix", "RatingEvent", "SplitSpec", "build_interaction_matrix", "load_ratings",
    "split_ratings",
]
