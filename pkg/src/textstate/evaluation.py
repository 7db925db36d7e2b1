"""Corpus loading, per-category evaluation and report rendering."""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import CorpusSchemaError, FixtureNotFoundError, MalformedResponseError
from .llm_extract import FixtureStore
from .pipeline import PhiConfig, phi
from .state import check_noncollapse, collapse, state_entropy

CATEGORIES = ("adversative", "hedging", "epistemic", "lexical", "structural")
RULE_CATEGORIES = ("adversative", "hedging")
METHOD_FOR = {c: ("rule" if c in RULE_CATEGORIES else "llm") for c in CATEGORIES}
_DISPLAY = {"rule": "Rule", "llm": "LLM", "hybrid": "Hybrid"}


@dataclass(frozen=True)
class CorpusSentence:
    id: str
    text: str
    language: str
    category: str
    expected_method: str


def _validate(doc: object, line: int) -> CorpusSentence:
    if not isinstance(doc, dict):
        raise CorpusSchemaError("expected a JSON object", line)
    fields = ("id", "text", "language", "category", "expected_method")
    missing = [f for f in fields if f not in doc]
    if missing:
        raise CorpusSchemaError(f"missing field(s): {', '.join(missing)}", line)
    extra = set(doc) - set(fields)
    if extra:
        raise CorpusSchemaError(f"unknown field(s): {', '.join(sorted(extra))}", line)
    for f in fields:
        if not isinstance(doc[f], str) or not doc[f].strip():
            raise CorpusSchemaError(f"field {f!r} must be a non-empty string", line)
    if doc["category"] not in CATEGORIES:
        raise CorpusSchemaError(f"unknown category {doc['category']!r}", line)
    if doc["language"] not in ("en", "jp"):
        raise CorpusSchemaError(f"unknown language {doc['language']!r}", line)
    if doc["language"] == "jp" and doc["category"] not in RULE_CATEGORIES:
        raise CorpusSchemaError(f"Japanese sentences are only allowed for {RULE_CATEGORIES}", line)
    if doc["expected_method"] != METHOD_FOR[doc["category"]]:
        raise CorpusSchemaError(
            f"category {doc['category']!r} expects method {METHOD_FOR[doc['category']]!r}", line
        )
    return CorpusSentence(**doc)


def parse_corpus(text: str) -> list[CorpusSentence]:
    sentences: list[CorpusSentence] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            doc = json.loads(raw)
        except ValueError as exc:
            raise CorpusSchemaError(f"invalid JSON: {exc}", lineno) from None
        sentence = _validate(doc, lineno)
        if sentence.id in seen:
            raise CorpusSchemaError(f"duplicate sentence id {sentence.id!r}", lineno)
        seen.add(sentence.id)
        sentences.append(sentence)
    return sentences


def load_corpus(path: str | os.PathLike | None = None) -> list[CorpusSentence]:
    """Read a JSONL corpus; ``None`` loads the bundled 68-sentence set."""
    if path is None:
        text = resources.files("textstate").joinpath("data/corpus.jsonl").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return parse_corpus(text)


def bundled_fixtures_root() -> Path:
    return Path(str(resources.files("textstate").joinpath("data/fixtures")))


def bundled_fixtures(provider_label: str = "reference") -> FixtureStore:
    return FixtureStore(bundled_fixtures_root(), provider_label)


# ---------------------------------------------------------------- evaluation

@dataclass(frozen=True)
class SentenceResult:
    id: str
    category: str
    language: str
    size: int
    entropy_bits: float
    epr: float
    conflict_detected: bool
    noncollapse: bool
    baseline_entropy: float
    degraded: bool = False


@dataclass(frozen=True)
class CategoryRow:
    category: str
    n: int
    mean_size: float
    mean_entropy: float
    mean_epr: float
    method: str


@dataclass
class MetricsReport:
    mode: str
    provider_label: str | None
    rows: list[CategoryRow]
    overall: CategoryRow
    conflict_detection_rate: dict[str, float]
    baseline_entropy: float
    sentences: list[SentenceResult] = field(default_factory=list)
    missing: dict[str, str] = field(default_factory=dict)
    degraded: list[str] = field(default_factory=list)

    def row(self, category: str) -> CategoryRow:
        for r in self.rows:
            if r.category == category:
                return r
        raise KeyError(category)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "provider_label": self.provider_label,
            "rows": [asdict(r) for r in self.rows],
            "overall": asdict(self.overall),
            "conflict_detection_rate": dict(self.conflict_detection_rate),
            "baseline_entropy": self.baseline_entropy,
            "missing": dict(self.missing),
            "degraded": list(self.degraded),
            "sentences": [asdict(s) for s in self.sentences],
        }


def _method_label(mode: str, category: str, languages: set[str]) -> str:
    method = _DISPLAY[METHOD_FOR[category] if mode == "hybrid" else mode]
    langs = "+".join(l.upper() for l in ("en", "jp") if l in languages)
    return f"{method} ({langs})" if langs else method


def _mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def _run_one(sentence: CorpusSentence, config: PhiConfig) -> SentenceResult | tuple[str, str]:
    try:
        state = phi(sentence.text, config, sentence_id=sentence.id, language=sentence.language)
    except (FixtureNotFoundError, MalformedResponseError) as exc:
        return (sentence.id, str(exc))
    m = state.metrics()
    return SentenceResult(
        id=sentence.id,
        category=sentence.category,
        language=sentence.language,
        size=m.size,
        entropy_bits=m.entropy_bits,
        epr=m.epr,
        conflict_detected=state.entries[0].conflict.has_conflict,
        noncollapse=bool(check_noncollapse(state)),
        baseline_entropy=state_entropy(collapse(state)),
        degraded=bool(state.warnings),
    )


def evaluate(
    corpus: Sequence[CorpusSentence],
    config: PhiConfig | None = None,
    *,
    jobs: int = 1,
) -> MetricsReport:
    """Run the mapping over every sentence and aggregate per category.

    Means are arithmetic means over per-sentence metrics. Sentences whose
    fixture is missing (or whose response cannot be parsed) in ``llm`` mode
    are listed in ``missing`` and excluded from the means.
    """
    config = config or PhiConfig()
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(lambda s: _run_one(s, config), corpus))
    else:
        outcomes = [_run_one(s, config) for s in corpus]

    results = [o for o in outcomes if isinstance(o, SentenceResult)]
    missing = dict(o for o in outcomes if isinstance(o, tuple))

    rows = []
    rates = {}
    for category in CATEGORIES:
        group = [r for r in results if r.category == category]
        if not group:
            continue
        rows.append(
            CategoryRow(
                category=category,
                n=len(group),
                mean_size=_mean([r.size for r in group]),
                mean_entropy=_mean([r.entropy_bits for r in group]),
                mean_epr=_mean([r.epr for r in group]),
                method=_method_label(config.mode, category, {r.language for r in group}),
            )
        )
        rates[category] = _mean([1.0 if r.conflict_detected else 0.0 for r in group])

    overall = CategoryRow(
        category="overall",
        n=len(results),
        mean_size=_mean([r.size for r in results]),
        mean_entropy=_mean([r.entropy_bits for r in results]),
        mean_epr=_mean([r.epr for r in results]),
        method=_DISPLAY[config.mode],
    )
    provider = config.fixtures.provider_label if config.fixtures is not None else None
    return MetricsReport(
        mode=config.mode,
        provider_label=provider,
        rows=rows,
        overall=overall,
        conflict_detection_rate=rates,
        baseline_entropy=_mean([r.baseline_entropy for r in results]),
        sentences=results,
        missing=missing,
        degraded=[r.id for r in results if r.degraded],
    )


def compare_providers(
    corpus: Sequence[CorpusSentence],
    config: PhiConfig,
    fixtures_root: str | os.PathLike,
    labels: Iterable[str],
    *,
    jobs: int = 1,
) -> dict[str, MetricsReport]:
    """Evaluate the same corpus once per fixture set (one set per provider label)."""
    return {
        label: evaluate(corpus, replace(config, fixtures=FixtureStore(fixtures_root, label)), jobs=jobs)
        for label in labels
    }


# ---------------------------------------------------------------- rendering

def _text_table(report: MetricsReport) -> str:
    header = f"{'Category':<12} {'N':>3} {'|S|':>6} {'H(S)':>7}  Method"
    lines = [header, "-" * len(header)]
    for r in report.rows + [report.overall]:
        lines.append(f"{r.category.capitalize():<12} {r.n:>3} {r.mean_size:>6.2f} {r.mean_entropy:>7.3f}  {r.method}")
    lines.append("")
    lines.append(f"Baseline (forced collapse) H(S): {report.baseline_entropy:.3f}")
    if report.conflict_detection_rate:
        rates = ", ".join(f"{c} {v:.2f}" for c, v in report.conflict_detection_rate.items())
        lines.append(f"Conflict detection rate: {rates}")
    if report.degraded:
        lines.append(f"Rule-only fallback (no LLM fixture): {len(report.degraded)} sentence(s)")
    for sid, reason in report.missing.items():
        lines.append(f"MISSING {sid}: {reason}")
    return "\n".join(lines) + "\n"


def _csv(report: MetricsReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["category", "n", "mean_size", "mean_entropy", "mean_epr", "method", "conflict_detection_rate"])
    for r in report.rows + [report.overall]:
        rate = report.conflict_detection_rate.get(r.category, "")
        writer.writerow([r.category, r.n, repr(r.mean_size), repr(r.mean_entropy), repr(r.mean_epr), r.method, rate])
    return buf.getvalue()


def emit_report(report: MetricsReport, fmt: str = "text") -> str:
    """Render a report as ``text`` (table), ``json`` or ``csv``."""
    if fmt in ("text", "text-table", "table"):
        return _text_table(report)
    if fmt == "json":
        return json.dumps(report.to_dict(), ensure_ascii=False, indent=2) + "\n"
    if fmt == "csv":
        return _csv(report)
    raise ValueError(f"unknown report format {fmt!r}")


def emit_comparison(reports: dict[str, MetricsReport]) -> str:
    """Side-by-side |S| and H(S) per category, one column per provider plus the mean."""
    labels = list(reports)
    categories = [c for c in CATEGORIES if any(c in {r.category for r in rep.rows} for rep in reports.values())]
    header = f"{'Category':<22}" + "".join(f"{l:>12}" for l in labels) + f"{'Mean':>12}"
    lines = [header, "-" * len(header)]
    for category in categories:
        for metric, attr, fmt in (("|S|", "mean_size", "{:>12.2f}"), ("H(S)", "mean_entropy", "{:>12.3f}")):
            values = []
            for label in labels:
                try:
                    values.append(getattr(reports[label].row(category), attr))
                except KeyError:
                    values.append(None)
            cells = "".join(fmt.format(v) if v is not None else f"{'-':>12}" for v in values)
            present = [v for v in values if v is not None]
            mean = fmt.format(_mean(present)) if present else f"{'-':>12}"
            lines.append(f"{category.capitalize() + ' ' + metric:<22}{cells}{mean}")
    return "\n".join(lines) + "\n"
