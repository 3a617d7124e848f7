"""Pipeline toolkit for medical question summarization.

Stages: dataset ingestion, question-focus extraction with faithfulness
validation, enhanced-dataset construction and SFT export,
multi-dimensional candidate scoring and selection, and ROUGE
evaluation. All model access goes through a cached, replayable gateway
so every stage runs deterministically offline.
"""

from .corpus import DatasetSchema, QuestionRecord, SplitStats, dataset_stats, load_dataset
from .evaluate import (
    CandidateSummary,
    EvalConfig,
    QualityScores,
    WeightTriple,
    grid_search_weights,
    select_best,
)
from .focus import (
    EnhancedExample,
    FocusConfig,
    FocusExtraction,
    SftRecord,
    build_enhanced_dataset,
    export_sft,
    extract_focus,
    validate_faithfulness,
)
from .gateway import ChatRequest, ChatResponse, Gateway, HttpBackend
from .rouge import RougeScore, corpus_rouge, rouge_l, rouge_n
from .textgraph import (
    KeyPhrase,
    TextRankParams,
    candidate_noun_phrases,
    extract_keyphrases,
    similarity,
    tokenize,
)

__version__ = "0.1.0"

__all__ = [
    "CandidateSummary",
    "ChatRequest",
    "ChatResponse",
    "DatasetSchema",
    "EnhancedExample",
    "EvalConfig",
    "FocusConfig",
    "FocusExtraction",
    "Gateway",
    "HttpBackend",
    "KeyPhrase",
    "QualityScores",
    "QuestionRecord",
    "RougeScore",
    "SftRecord",
    "SplitStats",
    "TextRankParams",
    "WeightTriple",
    "build_enhanced_dataset",
    "candidate_noun_phrases",
    "corpus_rouge",
    "dataset_stats",
    "export_sft",
    "extract_focus",
    "extract_keyphrases",
    "grid_search_weights",
    "load_dataset",
    "rouge_l",
    "rouge_n",
    "select_best",
    "similarity",
    "tokenize",
    "validate_faithfulness",
]
