"""Unsupervised identification and scoring of key disinformation sentences."""

__version__ = "0.1.0"

from resco.embedding_store import VectorStore, load_binary, load_text, load_vectors
from resco.text_pipeline import Document, Sentence, build_document, segment, tokenize
from resco.features import ReScoPoint, embed_document
from resco.clustering import ClusteringResult, best_kmeans, choose_k_elbow, kmeans
from resco.selector import SelectionOutput
from resco.pipeline import RunConfig, run_document

__all__ = [
    "ClusteringResult",
    "Document",
    "ReScoPoint",
    "RunConfig",
    "SelectionOutput",
    "Sentence",
    "VectorStore",
    "best_kmeans",
    "build_document",
    "choose_k_elbow",
    "embed_document",
    "kmeans",
    "load_binary",
    "load_text",
    "load_vectors",
    "run_document",
    "segment",
    "tokenize",
]
