"""Concept detection in text segments with LDA topic models.

Two inference engines (collapsed Gibbs sampling and online variational
Bayes), topic-based concept heuristics, a keyword baseline and hybrid, and
an evaluation harness against rating-step annotations.
"""
from ._backend import BACKEND
from .corpus import EncodedCorpus, Vocabulary, ingest, keyword_lookup, load_corpus, save_corpus
from .detect import (ConceptQuery, DetectionMethod, OutOfVocabularyError, detect, hybrid,
                     keyword_baseline, make_query, segments_for_topics, topics_for_concept)
from .evaluate import (ContingencyTable, GoldStandard, ac1_pvalue, build_gold, gwet_ac1, prf,
                       reuse_rate, split_by_keyword)
from .model import (Hyperparameters, TopicModel, generate_corpus, load_model, save_model,
                    top_words)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "EncodedCorpus", "Vocabulary", "ingest", "keyword_lookup", "load_corpus",
    "save_corpus", "ConceptQuery", "DetectionMethod", "OutOfVocabularyError", "detect",
    "hybrid", "keyword_baseline", "make_query", "segments_for_topics", "topics_for_concept",
    "ContingencyTable", "GoldStandard", "ac1_pvalue", "build_gold", "gwet_ac1", "prf",
    "reuse_rate", "split_by_keyword", "Hyperparameters", "TopicModel", "generate_corpus",
    "load_model", "save_model", "top_words", "__version__",
]
