"""Map ambiguous text to a state of coexisting interpretations.

The mapping runs in three stages: marker detection
(:func:`detect_conflict_markers`), interpretation extraction
(:func:`rule_extract`, :func:`llm_extract`, :func:`merge`) and state
construction (:func:`construct_state`). :func:`phi` composes them.
"""

from .embed_merge import HashingEmbedder, MergePolicy, cosine_sim, embed, merge
from .errors import TextStateError
from .evaluation import CorpusSentence, MetricsReport, bundled_fixtures, emit_report, evaluate, load_corpus
from .lexicon import FeatureVector, MarkerCategory, MarkerLexicon, detect_conflict_markers, load_lexicon
from .llm_extract import FixtureStore, ProviderConfig, build_prompt, llm_extract, parse_llm_response
from .pipeline import OperatorStage, PhiConfig, nrr_pipeline, phi
from .rule_extract import RawInterpretation, rule_extract, segment_at_markers
from .state import State, check_noncollapse, collapse, construct_state, epr, state_entropy

__all__ = [
    "CorpusSentence", "FeatureVector", "FixtureStore", "HashingEmbedder", "MarkerCategory",
    "MarkerLexicon", "MergePolicy", "MetricsReport", "OperatorStage", "PhiConfig", "ProviderConfig",
    "RawInterpretation", "State", "TextStateError", "build_prompt", "bundled_fixtures", "check_noncollapse", "collapse",
    "construct_state", "cosine_sim", "detect_conflict_markers", "embed", "emit_report", "epr",
    "evaluate", "llm_extract", "load_corpus", "load_lexicon", "merge", "nrr_pipeline",
    "parse_llm_response", "phi", "rule_extract", "segment_at_markers", "state_entropy",
]
