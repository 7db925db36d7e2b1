"""Rule-based interpretation extraction.

Explicit contradiction markers (adversative, contrastive, concessive) split
the text into clauses, one interpretation per clause. A hedge with no
contradiction marker yields two readings: the bare proposition and its
non-commitment counterpart.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .lexicon import FeatureVector, Hit, MarkerCategory

SPLIT_CATEGORIES = frozenset(
    {MarkerCategory.ADVERSATIVE, MarkerCategory.CONTRASTIVE, MarkerCategory.CONCESSIVE}
)

HEDGE_POS = "hedge-scope-pos"
HEDGE_NEG = "hedge-scope-neg"
HEDGE_NEG_TEMPLATE = "it is possible that not: {}"

SOURCES = ("rule", "llm")

# (pre-marker label, post-marker label). English concessives put the main
# clause first ("X despite Y"); Japanese puts the conceded clause first
# ("X nimo kakawarazu Y").
_SEGMENT_LABELS = {
    (MarkerCategory.ADVERSATIVE, "en"): ("pre-adv", "post-adv"),
    (MarkerCategory.ADVERSATIVE, "jp"): ("pre-adv", "post-adv"),
    (MarkerCategory.CONTRASTIVE, "en"): ("contrast-A", "contrast-B"),
    (MarkerCategory.CONTRASTIVE, "jp"): ("contrast-A", "contrast-B"),
    (MarkerCategory.CONCESSIVE, "en"): ("main", "concede"),
    (MarkerCategory.CONCESSIVE, "jp"): ("concede", "main"),
}

RULE_LABELS = frozenset(
    label for labels in _SEGMENT_LABELS.values() for label in labels
) | {HEDGE_POS, HEDGE_NEG}

MIN_SEGMENT_CHARS = 2


@dataclass(frozen=True)
class RawInterpretation:
    """One candidate meaning before embedding."""

    meaning: str
    context_label: str
    confidence: float
    source: str = "rule"

    def __post_init__(self) -> None:
        if not self.meaning or not self.meaning.strip():
            raise ValueError("interpretation meaning must be non-empty")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence!r} outside [0, 1]")
        if self.source not in SOURCES:
            raise ValueError(f"unknown interpretation source {self.source!r}")
        if self.source == "rule" and self.confidence == 0.0:
            raise ValueError("rule interpretations need a positive confidence")

    def to_dict(self) -> dict:
        return {
            "meaning": self.meaning,
            "context": self.context_label,
            "confidence": self.confidence,
            "source": self.source,
        }


def segment_labels(hit: Hit) -> tuple[str, str]:
    return _SEGMENT_LABELS[(hit.category, hit.entry.language)]


def _split_hits(hits: Iterable[Hit]) -> list[Hit]:
    """Contradiction-marker hits ordered by position, overlaps collapsed."""
    chosen: list[Hit] = []
    for hit in sorted(hits, key=lambda h: (h.start, -h.end)):
        if hit.category not in SPLIT_CATEGORIES:
            continue
        if chosen and hit.start < chosen[-1].end:
            continue
        chosen.append(hit)
    return chosen


def _degenerate(segment: str) -> bool:
    return len("".join(segment.split())) < MIN_SEGMENT_CHARS


def segment_at_markers(text: str, hits: Sequence[Hit]) -> list[tuple[str, str]]:
    """Split ``text`` at explicit contradiction markers.

    Returns ``(segment, context_label)`` pairs in reading order. The first
    segment takes the pre-marker label of the first marker; every later
    segment takes the post-marker label of the marker just before it.
    """
    markers = _split_hits(hits)
    if not markers:
        return []

    pieces: list[tuple[str, str]] = []
    cursor = 0
    for i, hit in enumerate(markers):
        label = segment_labels(hit)[0] if i == 0 else segment_labels(markers[i - 1])[1]
        pieces.append((text[cursor:hit.start], label))
        cursor = hit.end
    pieces.append((text[cursor:], segment_labels(markers[-1])[1]))

    return [(seg.strip(), label) for seg, label in pieces if not _degenerate(seg)]


def _strip_hedges(text: str, hits: Sequence[Hit]) -> str:
    out = []
    cursor = 0
    for hit in sorted(hits, key=lambda h: h.start):
        if hit.start < cursor:
            continue
        out.append(text[cursor:hit.start])
        cursor = hit.end
        # "Maybe, I should..." -> drop the comma that belonged to the hedge
        m = re.match(r"\s*[,、，]", text[cursor:])
        if m:
            cursor += m.end()
    out.append(text[cursor:])
    stripped = " ".join("".join(out).split())
    stripped = re.sub(r"\s+([.,!?;:。、])", r"\1", stripped)
    if stripped and text.lstrip()[:1].isupper() and stripped[0].islower():
        stripped = stripped[0].upper() + stripped[1:]
    return stripped


def hedge_variants(text: str, fv: FeatureVector) -> list[RawInterpretation]:
    hedges = [h for h in fv.hits if h.category is MarkerCategory.HEDGING]
    proposition = _strip_hedges(text, hedges)
    if _degenerate(proposition):
        proposition = text.strip()
    return [
        RawInterpretation(proposition, HEDGE_POS, 0.5, "rule"),
        RawInterpretation(HEDGE_NEG_TEMPLATE.format(proposition), HEDGE_NEG, 0.5, "rule"),
    ]


def rule_extract(text: str, fv: FeatureVector) -> list[RawInterpretation]:
    if not fv.has_conflict:
        return []
    if any(fv[c] for c in SPLIT_CATEGORIES):
        segments = segment_at_markers(text, fv.hits)
        if not segments:
            return []
        share = 1.0 / len(segments)
        return [RawInterpretation(seg, label, share, "rule") for seg, label in segments]
    if fv[MarkerCategory.HEDGING]:
        return hedge_variants(text, fv)
    return []
