"""State construction and information-theoretic metrics."""

from __future__ import annotations

import logging
import math
import sys
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .embed_merge import Embedder, HashingEmbedder
from .errors import StateInvariantError
from .lexicon import FeatureVector
from .rule_extract import RawInterpretation

log = logging.getLogger(__name__)

DEFAULT_BETA = 0.5
LITERAL_CONTEXT = "literal"


def encode_context(label: str) -> str:
    """Intern a context label into the shared context namespace."""
    label = (label or "").strip()
    if not label:
        raise StateInvariantError("context label must be non-empty")
    return sys.intern(label)


@dataclass(frozen=True)
class StateEntry:
    meaning: str
    vector: np.ndarray = field(compare=False, repr=False)
    context: str
    weight: float
    source: str
    conflict: FeatureVector
    collapsed: bool = False

    @property
    def metadata(self) -> dict:
        return {"source": self.source, "conflict": self.conflict}


@dataclass(frozen=True)
class StateMetrics:
    size: int
    entropy_bits: float
    epr: float

    def to_dict(self) -> dict:
        return {"size": self.size, "entropy_bits": self.entropy_bits, "epr": self.epr}


@dataclass(frozen=True)
class State:
    """Coexisting interpretations of one text.

    Weights are kept unnormalized; normalization happens only inside the
    entropy computation.
    """

    entries: tuple[StateEntry, ...]
    source_text: str
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "warnings", tuple(self.warnings))

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def weights(self) -> list[float]:
        return [e.weight for e in self.entries]

    @property
    def collapsed_fallback(self) -> bool:
        return any(e.collapsed for e in self.entries)

    def metrics(self) -> StateMetrics:
        return StateMetrics(self.size, state_entropy(self), epr(self))

    def scaled(self, factor: float) -> "State":
        return replace(self, entries=tuple(replace(e, weight=e.weight * factor) for e in self.entries))

    def to_dict(self, include_embeddings: bool = False) -> dict:
        entries = []
        for e in self.entries:
            row = {
                "meaning": e.meaning,
                "context": e.context,
                "weight": e.weight,
                "source": e.source,
                "conflict_bits": [int(b) for b in e.conflict.bits],
            }
            if include_embeddings:
                row["embedding"] = [float(x) for x in e.vector]
            entries.append(row)
        doc = {
            "source_text": self.source_text,
            "entries": entries,
            "metrics": self.metrics().to_dict(),
            "collapsed_fallback": self.collapsed_fallback,
        }
        if self.warnings:
            doc["warnings"] = list(self.warnings)
        return doc


def construct_state(
    interps: Sequence[RawInterpretation],
    fv: FeatureVector,
    source_text: str,
    beta: float = DEFAULT_BETA,
    embedder: Embedder | None = None,
    warnings: Sequence[str] = (),
) -> State:
    """Build a state: embed each meaning, intern its context, boost weights on conflict.

    ``w = confidence * (1 + beta * [fv has any marker])``. Zero-confidence
    interpretations are dropped. With nothing left, the whole text becomes a
    single ``literal`` entry at weight 1.
    """
    if not math.isfinite(beta) or beta < 0:
        raise ValueError(f"beta must be finite and non-negative, got {beta!r}")
    embedder = embedder or HashingEmbedder()
    boost = 1.0 + beta * (1.0 if fv.has_conflict else 0.0)

    kept = []
    for interp in interps:
        if interp.confidence <= 0.0:
            log.info("dropping zero-confidence interpretation %r", interp.meaning)
            continue
        kept.append(interp)

    if not kept:
        text = source_text.strip()
        entry = StateEntry(
            meaning=text,
            vector=embedder(text),
            context=encode_context(LITERAL_CONTEXT),
            weight=1.0,
            source="rule",
            conflict=fv,
            collapsed=True,
        )
        return State((entry,), source_text, tuple(warnings))

    entries = tuple(
        StateEntry(
            meaning=i.meaning,
            vector=embedder(i.meaning),
            context=encode_context(i.context_label),
            weight=i.confidence * boost,
            source=i.source,
            conflict=fv,
        )
        for i in kept
    )
    return State(entries, source_text, tuple(warnings))


def _checked_weights(s: State) -> list[float]:
    weights = s.weights
    for w in weights:
        if not (w > 0.0 and math.isfinite(w)):
            raise StateInvariantError(f"state weights must be positive and finite, got {w!r}")
    return weights


def entropy_of_weights(weights: Sequence[float]) -> float:
    """Shannon entropy in bits of ``weights`` after normalization."""
    n = len(weights)
    if n <= 1:
        return 0.0
    total = math.fsum(weights)
    log_total = math.log2(total)
    h = -math.fsum((w / total) * (math.log2(w) - log_total) for w in weights)
    return min(max(h, 0.0), math.log2(n))


def state_entropy(s: State) -> float:
    return entropy_of_weights(_checked_weights(s))


def epr(s: State) -> float:
    """Entropy preservation ratio ``H / log2 |S|``; 0 for a single entry."""
    if s.size < 1:
        raise StateInvariantError("EPR is undefined for an empty state")
    if s.size == 1:
        return 0.0
    return state_entropy(s) / math.log2(s.size)


@dataclass(frozen=True)
class NonCollapseCheck:
    passed: bool
    reason: str = ""
    entropy_bits: float = 0.0

    def __bool__(self) -> bool:
        return self.passed


def check_noncollapse(s: State) -> NonCollapseCheck:
    if s.size < 2:
        return NonCollapseCheck(False, "structural", 0.0)
    h = state_entropy(s)
    if not h > 0.0:
        return NonCollapseCheck(False, "entropy", h)
    return NonCollapseCheck(True, "", h)


def argmax_index(s: State) -> int:
    """Index of the heaviest entry; the lowest index wins ties."""
    if not s.entries:
        raise StateInvariantError("empty state has no heaviest entry")
    best = 0
    for i, e in enumerate(s.entries):
        if e.weight > s.entries[best].weight:
            best = i
    return best


def collapse(s: State) -> State:
    """Forced-collapse baseline: keep only the heaviest interpretation."""
    return replace(s, entries=(s.entries[argmax_index(s)],))
