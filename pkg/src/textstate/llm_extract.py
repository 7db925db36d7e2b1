"""LLM-based interpretation enumeration with record/replay fixtures.

Live mode talks to a chat-completion style HTTP endpoint. Replay mode reads
previously recorded responses from a fixture store, which is what makes
evaluation runs reproducible.
"""

from __future__ import annotations

import json
import logging
import math
import os
import re
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import httpx

from .errors import (
    EmptyInputError,
    FixtureError,
    FixtureNotFoundError,
    MalformedResponseError,
    TransportError,
)
from .lexicon import FeatureVector, detect_conflict_markers
from .rule_extract import RawInterpretation

log = logging.getLogger(__name__)

UNSPECIFIED_CONTEXT = "llm-unspecified"

PROMPT_HEAD = 'Given the text: "{text}"\n\n'
PROMPT_NOTE = "Note: This text contains potential ambiguity markers.\n\n"
PROMPT_BODY = (
    "List ALL possible interpretations as distinct meanings.\n"
    "For each interpretation, provide:\n"
    "1. The interpretation (a clear restatement of one possible meaning)\n"
    "2. The context/condition under which this interpretation holds\n"
    "3. Confidence weight from 0.0 to 1.0\n"
    "\n"
    "Format each as:\n"
    "INTERP: [interpretation]\n"
    "CONTEXT: [context]\n"
    "CONFIDENCE: [0.0-1.0]\n"
    "---\n"
)


@dataclass(frozen=True)
class InterpPrompt:
    text: str
    conflict_note_included: bool
    rendered: str


def build_prompt(text: str, fv: FeatureVector) -> InterpPrompt:
    if not text or not text.strip():
        raise EmptyInputError("cannot build a prompt for empty text")
    note = fv.has_conflict
    rendered = PROMPT_HEAD.format(text=text) + (PROMPT_NOTE if note else "") + PROMPT_BODY
    return InterpPrompt(text=text, conflict_note_included=note, rendered=rendered)


# ---------------------------------------------------------------- parsing

def _parse_confidence(value: object) -> float | None:
    if value is None or isinstance(value, bool):
        return None
    if isinstance(value, str):
        m = re.search(r"[-+]?\d*\.?\d+(?:[eE][-+]?\d+)?", value)
        if not m:
            return None
        value = m.group(0)
    try:
        conf = float(value)
    except (TypeError, ValueError):
        return None
    if not math.isfinite(conf):
        return None
    return min(max(conf, 0.0), 1.0)


def _finish(rows: list[tuple[str, str, float | None]]) -> list[RawInterpretation]:
    rows = [(" ".join(m.split()), " ".join(c.split()), conf) for m, c, conf in rows]
    rows = [r for r in rows if r[0]]
    if not rows:
        return []
    default = 1.0 / len(rows)
    return [
        RawInterpretation(meaning, context or UNSPECIFIED_CONTEXT, default if conf is None else conf, "llm")
        for meaning, context, conf in rows
    ]


def _json_candidates(raw: str) -> Iterable[str]:
    yield raw.strip()
    for m in re.finditer(r"```(?:json)?\s*(.*?)```", raw, re.DOTALL):
        yield m.group(1)
    first, last = raw.find("{"), raw.rfind("}")
    if 0 <= first < last:
        yield raw[first:last + 1]
    first, last = raw.find("["), raw.rfind("]")
    if 0 <= first < last:
        yield raw[first:last + 1]


def _parse_structured(raw: str) -> list[RawInterpretation]:
    for candidate in _json_candidates(raw):
        try:
            doc = json.loads(candidate)
        except ValueError:
            continue
        items = doc.get("interpretations") if isinstance(doc, dict) else doc
        if not isinstance(items, list):
            continue
        rows = []
        for item in items:
            if not isinstance(item, dict):
                continue
            meaning = item.get("meaning", item.get("interpretation", ""))
            context = item.get("context", item.get("context_label", ""))
            if not isinstance(meaning, str) or not isinstance(context, (str, type(None))):
                continue
            rows.append((meaning, context or "", _parse_confidence(item.get("confidence"))))
        parsed = _finish(rows)
        if parsed:
            return parsed
    return []


_FIELD_RE = re.compile(r"^\s*(?:[-*>]\s*|\d+[.)]\s*)?\**\s*(INTERP(?:RETATION)?|CONTEXT|CONFIDENCE)\s*\**\s*:\s*\**\s*(.*)$", re.I)
_SEPARATOR_RE = re.compile(r"^\s*-{3,}\s*$")


def _parse_lines(raw: str) -> list[RawInterpretation]:
    rows: list[tuple[str, str, float | None]] = []
    current: dict[str, str] = {}
    last_key: str | None = None

    def flush() -> None:
        if current.get("interp", "").strip():
            rows.append((current["interp"], current.get("context", ""), _parse_confidence(current.get("confidence"))))
        current.clear()

    for line in raw.splitlines():
        if _SEPARATOR_RE.match(line):
            flush()
            last_key = None
            continue
        m = _FIELD_RE.match(line)
        if m:
            key = m.group(1).lower()
            key = "interp" if key.startswith("interp") else key
            if key == "interp" and "interp" in current:
                flush()
            current[key] = m.group(2).strip()
            last_key = key
        elif last_key in ("interp", "context") and line.strip():
            current[last_key] += " " + line.strip()
    flush()
    return _finish(rows)


def parse_llm_response(raw: str) -> list[RawInterpretation]:
    """Parse a model response into interpretations.

    The JSON object form (``{"interpretations": [{meaning, context,
    confidence}]}``) is tried first, then ``INTERP:``/``CONTEXT:``/
    ``CONFIDENCE:`` blocks separated by ``---``. Confidences are clamped to
    [0, 1]; a missing one defaults to ``1/n``.
    """
    parsed = _parse_structured(raw or "") or _parse_lines(raw or "")
    if not parsed:
        raise MalformedResponseError("no interpretations found in model response", raw=raw)
    return parsed


def render_interpretations(interps: Sequence[RawInterpretation], fmt: str = "lines") -> str:
    """Serialize interpretations in a form :func:`parse_llm_response` reads back."""
    if fmt == "json":
        return json.dumps(
            {"interpretations": [
                {"meaning": i.meaning, "context": i.context_label, "confidence": i.confidence} for i in interps
            ]},
            ensure_ascii=False,
            indent=2,
        )
    if fmt != "lines":
        raise ValueError(f"unknown render format {fmt!r}")
    blocks = [
        f"INTERP: {i.meaning}\nCONTEXT: {i.context_label}\nCONFIDENCE: {i.confidence!r}\n---\n" for i in interps
    ]
    return "".join(blocks)


# ---------------------------------------------------------------- providers

@dataclass(frozen=True)
class ProviderConfig:
    endpoint: str
    model_id: str
    auth_env: str | None = None
    timeout: float = 60.0
    max_concurrency: int = 4
    label: str = "live"
    max_retries: int = 3
    backoff: float = 0.5
    temperature: float | None = None

    def __post_init__(self) -> None:
        if not self.timeout > 0:
            raise ValueError("provider timeout must be positive")
        if self.max_concurrency < 1:
            raise ValueError("max_concurrency must be at least 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")

    @classmethod
    def from_dict(cls, doc: dict) -> "ProviderConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown provider config key(s): {', '.join(sorted(unknown))}")
        return cls(**doc)

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "ProviderConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


class ChatProvider:
    """Minimal client for an OpenAI-compatible ``/chat/completions`` endpoint."""

    def __init__(self, config: ProviderConfig, client: httpx.Client | None = None):
        self.config = config
        self._client = client or httpx.Client(timeout=config.timeout)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.config.auth_env:
            secret = os.environ.get(self.config.auth_env)
            if secret:
                headers["Authorization"] = f"Bearer {secret}"
        return headers

    def complete(self, prompt: str) -> str:
        body: dict = {"model": self.config.model_id, "messages": [{"role": "user", "content": prompt}]}
        if self.config.temperature is not None:
            body["temperature"] = self.config.temperature
        attempts = 0
        last: BaseException | None = None
        while attempts <= self.config.max_retries:
            attempts += 1
            try:
                resp = self._client.post(self.config.endpoint, json=body, headers=self._headers())
                if resp.status_code >= 500 or resp.status_code == 429:
                    raise httpx.HTTPStatusError(f"server returned {resp.status_code}", request=resp.request, response=resp)
                resp.raise_for_status()
                doc = resp.json()
                return doc["choices"][0]["message"]["content"]
            except (httpx.TransportError, httpx.HTTPStatusError) as exc:
                last = exc
                status = exc.response.status_code if isinstance(exc, httpx.HTTPStatusError) else None
                if status is not None and status < 500 and status != 429:
                    break
                log.warning("provider request failed (attempt %d): %s", attempts, type(exc).__name__)
                if attempts <= self.config.max_retries and self.config.backoff > 0:
                    time.sleep(self.config.backoff * 2 ** (attempts - 1))
            except (KeyError, IndexError, TypeError, ValueError) as exc:
                raise MalformedResponseError(f"unexpected provider payload: {exc}", raw=resp.text) from exc
        raise TransportError(f"request to {self.config.endpoint} failed", attempts=attempts, last_error=last)

    def close(self) -> None:
        self._client.close()


# ---------------------------------------------------------------- fixtures

@dataclass(frozen=True)
class Fixture:
    sentence_id: str
    provider_label: str
    raw_response: str
    parsed: tuple[RawInterpretation, ...]
    text: str = ""

    @classmethod
    def from_response(cls, sentence_id: str, provider_label: str, raw: str, text: str = "") -> "Fixture":
        return cls(sentence_id, provider_label, raw, tuple(parse_llm_response(raw)), text)

    def to_dict(self) -> dict:
        return {
            "sentence_id": self.sentence_id,
            "provider_label": self.provider_label,
            "text": self.text,
            "raw_response": self.raw_response,
            "parsed": [
                {"meaning": i.meaning, "context": i.context_label, "confidence": i.confidence, "source": i.source}
                for i in self.parsed
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "Fixture":
        try:
            parsed = tuple(
                RawInterpretation(p["meaning"], p["context"], float(p["confidence"]), p.get("source", "llm"))
                for p in doc["parsed"]
            )
            fixture = cls(doc["sentence_id"], doc["provider_label"], doc["raw_response"], parsed, doc.get("text", ""))
        except (KeyError, TypeError, ValueError) as exc:
            raise FixtureError(f"fixture is missing or has invalid fields: {exc}") from exc
        if list(fixture.parsed) != parse_llm_response(fixture.raw_response):
            raise FixtureError(f"fixture {fixture.sentence_id!r}: parsed list does not match raw_response")
        return fixture


def _safe_name(name: str) -> str:
    if not re.fullmatch(r"[A-Za-z0-9_.-]+", name) or name in (".", ".."):
        raise ValueError(f"identifier {name!r} is not usable as a fixture file name")
    return name


class FixtureStore:
    """Directory of fixtures laid out as ``<root>/<provider_label>/<sentence_id>.json``."""

    def __init__(self, root: str | os.PathLike, provider_label: str = "reference"):
        self.root = Path(root)
        self.provider_label = provider_label
        self._by_text: dict[str, Path] | None = None

    @property
    def directory(self) -> Path:
        return self.root / _safe_name(self.provider_label)

    def path_for(self, sentence_id: str) -> Path:
        return self.directory / f"{_safe_name(sentence_id)}.json"

    def _read(self, path: Path) -> Fixture:
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise FixtureError(f"cannot read fixture {path}: {exc}") from exc
        return Fixture.from_dict(doc)

    def _text_index(self) -> dict[str, Path]:
        if self._by_text is None:
            index = {}
            if self.directory.is_dir():
                for path in sorted(self.directory.glob("*.json")):
                    try:
                        text = json.loads(path.read_text(encoding="utf-8")).get("text", "")
                    except (OSError, ValueError):
                        continue
                    if text:
                        index.setdefault(" ".join(text.split()), path)
            self._by_text = index
        return self._by_text

    def lookup(self, sentence_id: str | None = None, text: str | None = None) -> Fixture:
        if sentence_id:
            path = self.path_for(sentence_id)
            if path.is_file():
                return self._read(path)
        if text:
            path = self._text_index().get(" ".join(text.split()))
            if path is not None:
                return self._read(path)
        key = sentence_id or text
        raise FixtureNotFoundError(f"no {self.provider_label!r} fixture for {key!r} under {self.root}")

    def __iter__(self):
        if not self.directory.is_dir():
            return iter(())
        return (self._read(p) for p in sorted(self.directory.glob("*.json")))

    def write(self, fixture: Fixture) -> Path:
        if fixture.provider_label != self.provider_label:
            raise ValueError("fixture provider label does not match the store")
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.path_for(fixture.sentence_id)
        payload = json.dumps(fixture.to_dict(), ensure_ascii=False, indent=2) + "\n"
        fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(payload)
        os.replace(tmp, path)
        self._by_text = None
        return path


def llm_extract(
    text: str,
    fv: FeatureVector,
    mode: str = "replay",
    *,
    provider: ProviderConfig | ChatProvider | None = None,
    fixtures: FixtureStore | None = None,
    sentence_id: str | None = None,
) -> list[RawInterpretation]:
    if mode == "replay":
        if fixtures is None:
            raise FixtureNotFoundError(f"replay mode needs a fixture store (text {text!r})")
        return list(fixtures.lookup(sentence_id=sentence_id, text=text).parsed)
    if mode == "live":
        if provider is None:
            raise ValueError("live mode needs a provider configuration")
        prompt = build_prompt(text, fv)
        if isinstance(provider, ChatProvider):
            return parse_llm_response(provider.complete(prompt.rendered))
        client = ChatProvider(provider)
        try:
            return parse_llm_response(client.complete(prompt.rendered))
        finally:
            client.close()
    raise ValueError(f"extraction mode must be 'live' or 'replay', not {mode!r}")


@dataclass
class RecordSummary:
    written: int = 0
    failures: dict[str, str] = field(default_factory=dict)

    def line(self) -> str:
        return f"recorded {self.written} fixture(s), {len(self.failures)} failure(s)"


def record_fixtures(
    sentences: Iterable,
    config: ProviderConfig,
    store_root: str | os.PathLike,
    *,
    lexicon=None,
    client: httpx.Client | None = None,
) -> RecordSummary:
    """Query the live provider for every sentence and write one fixture each.

    ``sentences`` are corpus sentences (anything with ``id``, ``text`` and
    ``language``). Failures are collected per sentence; successful fixtures
    are kept.
    """
    store = FixtureStore(store_root, config.label)
    provider = ChatProvider(config, client=client)
    summary = RecordSummary()

    def one(sentence) -> tuple[str, str | None]:
        try:
            fv = detect_conflict_markers(sentence.text, lexicon, getattr(sentence, "language", "auto"))
            raw = provider.complete(build_prompt(sentence.text, fv).rendered)
            store.write(Fixture.from_response(sentence.id, config.label, raw, sentence.text))
            return sentence.id, None
        except Exception as exc:  # reported per sentence, the batch continues
            return sentence.id, f"{type(exc).__name__}: {exc}"

    try:
        with ThreadPoolExecutor(max_workers=config.max_concurrency) as pool:
            for sentence_id, error in pool.map(one, list(sentences)):
                if error is None:
                    summary.written += 1
                else:
                    summary.failures[sentence_id] = error
    finally:
        if client is None:
            provider.close()
    return summary
