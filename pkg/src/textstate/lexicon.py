"""Conflict-marker lexicon and stage-one detection.

The lexicon maps surface patterns (English and Japanese) onto eight marker
categories. :func:`detect_conflict_markers` scans a text and returns a
:class:`FeatureVector`: one presence bit per category plus every hit with its
character span in the original text.
"""

from __future__ import annotations

import enum
import json
import re
import unicodedata
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Iterable, Sequence

from .errors import EmptyInputError, LexiconParseError, LexiconValidationError


class MarkerCategory(str, enum.Enum):
    ADVERSATIVE = "adversative"
    CONTRASTIVE = "contrastive"
    CONCESSIVE = "concessive"
    HEDGING = "hedging"
    EPISTEMIC = "epistemic"
    MODAL = "modal"
    COORDINATION = "coordination"
    SCOPE = "scope"

    @property
    def index(self) -> int:
        return _CATEGORY_ORDER.index(self)

    @property
    def labels(self) -> tuple[str, ...]:
        return CONTEXT_LABELS[self]


_CATEGORY_ORDER = tuple(MarkerCategory)

CONTEXT_LABELS: dict[MarkerCategory, tuple[str, ...]] = {
    MarkerCategory.ADVERSATIVE: ("pre-adv", "post-adv"),
    MarkerCategory.CONTRASTIVE: ("contrast-A", "contrast-B"),
    MarkerCategory.CONCESSIVE: ("concede", "main"),
    MarkerCategory.HEDGING: ("hedge-scope",),
    MarkerCategory.EPISTEMIC: ("epistemic-stance",),
    MarkerCategory.MODAL: ("modal-world",),
    MarkerCategory.COORDINATION: ("coord-A", "coord-B"),
    MarkerCategory.SCOPE: ("wide-scope", "narrow-scope"),
}

LANGUAGES = ("en", "jp")
BOUNDARIES = ("word-bounded", "substring")

# A surface containing this token is a discontinuous pattern ("both ... and").
GAP = "..."

_CJK_RE = re.compile("[぀-ヿㇰ-ㇿ㐀-䶿一-鿿豈-﫿ｦ-ﾟ]")


def normalize_surface(surface: str) -> str:
    text = unicodedata.normalize("NFKC", surface).lower()
    return " ".join(text.split())


@dataclass(frozen=True)
class MarkerEntry:
    surface: str
    language: str
    category: MarkerCategory
    boundary: str = "word-bounded"

    def __post_init__(self) -> None:
        surface = normalize_surface(self.surface)
        if not surface or surface.replace(GAP, "").strip() == "":
            raise LexiconValidationError("marker surface must be non-empty")
        if self.language not in LANGUAGES:
            raise LexiconValidationError(f"unknown language {self.language!r}")
        if self.boundary not in BOUNDARIES:
            raise LexiconValidationError(f"unknown boundary {self.boundary!r}")
        if not isinstance(self.category, MarkerCategory):
            object.__setattr__(self, "category", parse_category(self.category))
        object.__setattr__(self, "surface", surface)

    @property
    def is_discontinuous(self) -> bool:
        return GAP in self.surface

    def pattern(self) -> re.Pattern[str]:
        return _compile(self.surface, self.boundary)

    def to_dict(self) -> dict:
        return {
            "surface": self.surface,
            "language": self.language,
            "category": self.category.value,
            "boundary": self.boundary,
        }


def parse_category(name: object) -> MarkerCategory:
    try:
        return MarkerCategory(str(name).strip().lower())
    except ValueError:
        known = ", ".join(c.value for c in MarkerCategory)
        raise LexiconValidationError(f"unknown marker category {name!r} (expected one of: {known})") from None


@lru_cache(maxsize=None)
def _compile(surface: str, boundary: str) -> re.Pattern[str]:
    parts = [p.strip() for p in surface.split(GAP)]
    pieces = []
    for part in parts:
        words = part.split()
        body = r"\s+".join(re.escape(w) for w in words)
        if boundary == "word-bounded":
            body = rf"(?<!\w){body}(?!\w)"
        pieces.append(body)
    return re.compile(".*?".join(pieces), re.DOTALL)


@dataclass(frozen=True)
class MarkerLexicon:
    entries: tuple[MarkerEntry, ...]
    version: str = "custom"

    def __post_init__(self) -> None:
        object.__setattr__(self, "entries", tuple(self.entries))
        seen: set[tuple[str, str, MarkerCategory]] = set()
        for entry in self.entries:
            key = (entry.surface, entry.language, entry.category)
            if key in seen:
                raise LexiconValidationError(f"duplicate marker entry {key[0]!r} ({key[1]}, {key[2].value})")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, item: object) -> bool:
        if isinstance(item, tuple) and len(item) == 3:
            surface, language, category = item
            key = (normalize_surface(surface), language, parse_category(category))
            return any((e.surface, e.language, e.category) == key for e in self.entries)
        return item in self.entries

    def for_language(self, language: str) -> tuple[MarkerEntry, ...]:
        return tuple(e for e in self.entries if e.language == language)

    def to_json(self) -> str:
        """Serialize in the lexicon file format (a JSON array of entries)."""
        return json.dumps([e.to_dict() for e in self.entries], ensure_ascii=False, indent=2) + "\n"


def load_lexicon(source: str | None = None) -> MarkerLexicon:
    """Load a lexicon from JSON text, or the built-in default when ``source`` is None.

    The file is either an array of ``{surface, language, category, boundary}``
    objects or an object ``{"version": ..., "entries": [...]}``.
    """
    if source is None:
        return default_lexicon()
    try:
        doc = json.loads(source)
    except json.JSONDecodeError as exc:
        raise LexiconParseError(f"invalid lexicon JSON: {exc.msg}", line=exc.lineno) from None

    version = "custom"
    if isinstance(doc, dict):
        version = str(doc.get("version", version))
        doc = doc.get("entries")
    if not isinstance(doc, list):
        raise LexiconParseError("lexicon must be a JSON array of marker entries", line=1)

    entries = []
    for i, item in enumerate(doc):
        if not isinstance(item, dict):
            raise LexiconValidationError(f"entry {i}: expected an object, got {type(item).__name__}")
        missing = [k for k in ("surface", "language", "category") if k not in item]
        if missing:
            raise LexiconValidationError(f"entry {i}: missing field(s) {', '.join(missing)}")
        try:
            entries.append(
                MarkerEntry(
                    surface=str(item["surface"]),
                    language=str(item["language"]),
                    category=parse_category(item["category"]),
                    boundary=str(item.get("boundary", "word-bounded")),
                )
            )
        except LexiconValidationError as exc:
            raise LexiconValidationError(f"entry {i}: {exc}") from None
    return MarkerLexicon(tuple(entries), version=version)


@lru_cache(maxsize=1)
def default_lexicon() -> MarkerLexicon:
    text = resources.files("textstate").joinpath("data/default_lexicon.json").read_text(encoding="utf-8")
    return load_lexicon(text)


@dataclass(frozen=True)
class Hit:
    entry: MarkerEntry
    start: int
    end: int

    @property
    def category(self) -> MarkerCategory:
        return self.entry.category

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


@dataclass(frozen=True)
class FeatureVector:
    bits: tuple[bool, ...]
    hits: tuple[Hit, ...] = ()
    language: str = "en"

    def __post_init__(self) -> None:
        if len(self.bits) != len(_CATEGORY_ORDER):
            raise ValueError(f"feature vector needs {len(_CATEGORY_ORDER)} bits, got {len(self.bits)}")

    @classmethod
    def empty(cls, language: str = "en") -> "FeatureVector":
        return cls(bits=(False,) * len(_CATEGORY_ORDER), language=language)

    @classmethod
    def from_hits(cls, hits: Iterable[Hit], language: str = "en") -> "FeatureVector":
        hits = tuple(sorted(hits, key=lambda h: (h.start, h.end)))
        present = {h.category for h in hits}
        return cls(bits=tuple(c in present for c in _CATEGORY_ORDER), hits=hits, language=language)

    @property
    def l1(self) -> int:
        return sum(self.bits)

    @property
    def has_conflict(self) -> bool:
        return self.l1 > 0

    def __getitem__(self, category: MarkerCategory | str) -> bool:
        if not isinstance(category, MarkerCategory):
            category = parse_category(category)
        return self.bits[category.index]

    def categories(self) -> list[MarkerCategory]:
        return [c for c, b in zip(_CATEGORY_ORDER, self.bits) if b]

    def to_dict(self) -> dict:
        return {
            "language": self.language,
            "bits": {c.value: b for c, b in zip(_CATEGORY_ORDER, self.bits)},
            "hits": [
                {
                    "surface": h.entry.surface,
                    "category": h.category.value,
                    "language": h.entry.language,
                    "span": [h.start, h.end],
                }
                for h in self.hits
            ],
        }


def detect_language(text: str) -> str:
    return "jp" if _CJK_RE.search(text) else "en"


def _normalize_with_offsets(text: str) -> tuple[str, list[int]]:
    # Per-character NFKC + lowercasing, keeping a map from each normalized
    # character back to the original index it came from.
    out: list[str] = []
    origin: list[int] = []
    for i, ch in enumerate(text):
        norm = unicodedata.normalize("NFKC", ch).lower()
        out.append(norm)
        origin.extend([i] * len(norm))
    return "".join(out), origin


def _scan(norm: str, origin: Sequence[int], entries: Iterable[MarkerEntry]) -> list[Hit]:
    hits = []
    for entry in entries:
        for m in entry.pattern().finditer(norm):
            if m.end() == m.start():
                continue
            hits.append(Hit(entry, origin[m.start()], origin[m.end() - 1] + 1))
    return hits


def detect_conflict_markers(
    text: str,
    lexicon: MarkerLexicon | None = None,
    language: str = "auto",
) -> FeatureVector:
    """Return the marker-presence vector for ``text``.

    ``language`` is ``"en"``, ``"jp"`` or ``"auto"``. Auto picks ``jp`` when the
    text contains kana or CJK ideographs; otherwise English markers are tried
    first and romanized Japanese markers only when no English marker matches.
    """
    if text is None or not text.strip():
        raise EmptyInputError("cannot detect markers in empty text")
    if lexicon is None:
        lexicon = default_lexicon()
    if language not in ("en", "jp", "auto"):
        raise ValueError(f"language must be 'en', 'jp' or 'auto', not {language!r}")

    norm, origin = _normalize_with_offsets(text)
    if language != "auto":
        return FeatureVector.from_hits(_scan(norm, origin, lexicon.for_language(language)), language)

    if detect_language(text) == "jp":
        return FeatureVector.from_hits(_scan(norm, origin, lexicon.for_language("jp")), "jp")
    hits = _scan(norm, origin, lexicon.for_language("en"))
    if hits:
        return FeatureVector.from_hits(hits, "en")
    romanized = [e for e in lexicon.for_language("jp") if not _CJK_RE.search(e.surface)]
    hits = _scan(norm, origin, romanized)
    return FeatureVector.from_hits(hits, "jp" if hits else "en")
