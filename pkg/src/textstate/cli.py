"""Command-line front end.

Exit codes: 0 success, 1 domain error, 2 usage error. Payloads go to stdout,
diagnostics to stderr. Settings resolve as flags > environment
(``TEXTSTATE_*``) > ``--config`` JSON file > built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Sequence

from .embed_merge import DEFAULT_TAU
from .errors import TextStateError
from .evaluation import (
    bundled_fixtures_root,
    compare_providers,
    emit_comparison,
    emit_report,
    evaluate,
    load_corpus,
)
from .lexicon import default_lexicon, detect_conflict_markers, load_lexicon
from .llm_extract import FixtureStore, ProviderConfig, record_fixtures
from .pipeline import PhiConfig, phi
from .state import DEFAULT_BETA

log = logging.getLogger("textstate")

DEFAULTS: dict[str, Any] = {
    "mode": "hybrid",
    "tau": DEFAULT_TAU,
    "beta": DEFAULT_BETA,
    "lang": "auto",
    "extraction": "replay",
    "provider": "reference",
}
_ENV = {
    "mode": ("TEXTSTATE_MODE", str),
    "tau": ("TEXTSTATE_TAU", float),
    "beta": ("TEXTSTATE_BETA", float),
    "lang": ("TEXTSTATE_LANG", str),
    "extraction": ("TEXTSTATE_EXTRACTION", str),
    "fixtures": ("TEXTSTATE_FIXTURES", str),
    "provider": ("TEXTSTATE_PROVIDER", str),
    "provider_config": ("TEXTSTATE_PROVIDER_CONFIG", str),
    "lexicon": ("TEXTSTATE_LEXICON", str),
}


class UsageError(Exception):
    pass


def _resolve(args: argparse.Namespace, key: str) -> Any:
    value = getattr(args, key, None)
    if value is not None:
        return value
    env_name, cast = _ENV.get(key, (None, str))
    if env_name and os.environ.get(env_name):
        try:
            return cast(os.environ[env_name])
        except ValueError:
            raise UsageError(f"invalid value for {env_name}: {os.environ[env_name]!r}") from None
    config = getattr(args, "_file_config", {})
    if key in config:
        return config[key]
    return DEFAULTS.get(key)


def _read_text(args: argparse.Namespace) -> str:
    if args.stdin:
        if args.text is not None:
            raise UsageError("give the text either as an argument or via --stdin, not both")
        text = sys.stdin.read()
    else:
        text = args.text
    if text is None or not text.strip():
        raise UsageError("input text must be non-empty")
    return text


def _lexicon(args: argparse.Namespace):
    path = _resolve(args, "lexicon")
    if not path:
        return default_lexicon()
    return load_lexicon(Path(path).read_text(encoding="utf-8"))


def _fixtures_root(value: str | None) -> Path | None:
    if not value:
        return None
    if value == "bundled":
        return bundled_fixtures_root()
    return Path(value)


def _phi_config(args: argparse.Namespace, fixtures_default: str | None = None) -> PhiConfig:
    root = _fixtures_root(_resolve(args, "fixtures") or fixtures_default)
    label = _resolve(args, "provider")
    provider_path = _resolve(args, "provider_config")
    extraction = _resolve(args, "extraction")
    provider = ProviderConfig.from_file(provider_path) if provider_path else None
    if provider is not None and getattr(args, "extraction", None) is None:
        extraction = "live"
    try:
        return PhiConfig(
            mode=_resolve(args, "mode"),
            tau=float(_resolve(args, "tau")),
            beta=float(_resolve(args, "beta")),
            language=_resolve(args, "lang"),
            extraction_mode=extraction,
            fixtures=FixtureStore(root, label) if root is not None else None,
            provider=provider,
            lexicon=_lexicon(args),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(payload: str, out: str | None = None) -> None:
    if out:
        Path(out).write_text(payload, encoding="utf-8")
        print(f"wrote {out}", file=sys.stderr)
    else:
        sys.stdout.write(payload)


def cmd_detect(args: argparse.Namespace) -> int:
    text = _read_text(args)
    fv = detect_conflict_markers(text, _lexicon(args), _resolve(args, "lang"))
    doc = fv.to_dict()
    doc["has_conflict"] = fv.has_conflict
    _emit(json.dumps(doc, ensure_ascii=False, indent=2) + "\n")
    return 0


def cmd_map(args: argparse.Namespace) -> int:
    text = _read_text(args)
    state = phi(text, _phi_config(args))
    _emit(json.dumps(state.to_dict(include_embeddings=args.emit_embeddings), ensure_ascii=False, indent=2) + "\n")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    corpus = load_corpus(args.corpus)
    config = _phi_config(args, fixtures_default="bundled")
    labels = args.provider or [DEFAULTS["provider"]]
    jobs = args.jobs or os.cpu_count() or 1
    if len(labels) > 1:
        root = config.fixtures.root if config.fixtures is not None else bundled_fixtures_root()
        reports = compare_providers(corpus, config, root, labels, jobs=jobs)
        if args.format == "json":
            payload = json.dumps({k: r.to_dict() for k, r in reports.items()}, ensure_ascii=False, indent=2) + "\n"
        elif args.format == "csv":
            payload = "".join(f"# provider={k}\n" + emit_report(r, "csv") for k, r in reports.items())
        else:
            payload = emit_comparison(reports)
        _emit(payload, args.out)
        return 0
    report = evaluate(corpus, config, jobs=jobs)
    _emit(emit_report(report, args.format), args.out)
    return 1 if report.missing and args.strict else 0


def cmd_record(args: argparse.Namespace) -> int:
    path = _resolve(args, "provider_config")
    if not path:
        raise UsageError("record needs --provider-config")
    config = ProviderConfig.from_file(path)
    corpus = load_corpus(args.corpus)
    if args.category:
        corpus = [s for s in corpus if s.category in args.category]
    summary = record_fixtures(corpus, config, args.fixtures_out, lexicon=_lexicon(args))
    for sid, err in summary.failures.items():
        print(f"failed {sid}: {err}", file=sys.stderr)
    print(summary.line())
    return 1 if summary.failures else 0


def cmd_lexicon_dump(args: argparse.Namespace) -> int:
    _emit(_lexicon(args).to_json(), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="textstate", description="Map ambiguous text to a non-collapsing state.")
    parser.add_argument("--config", help="JSON file with default settings (mode, tau, beta, lang, fixtures, ...)")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def text_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("text", nargs="?", help="input text (or use --stdin)")
        p.add_argument("--stdin", action="store_true", help="read the input text from standard input")
        p.add_argument("--lang", choices=("en", "jp", "auto"))
        p.add_argument("--lexicon", help="lexicon JSON file (default: built-in)")

    def phi_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--mode", choices=("rule", "llm", "hybrid"))
        p.add_argument("--tau", type=float, help="merge similarity threshold in (0, 1)")
        p.add_argument("--beta", type=float, help="conflict weight boost (>= 0)")
        p.add_argument("--fixtures", help="fixture store directory, or 'bundled'")
        p.add_argument("--extraction", choices=("live", "replay"))
        p.add_argument("--provider-config", dest="provider_config", help="live provider JSON config")

    p = sub.add_parser("detect", help="print the conflict-marker feature vector")
    text_args(p)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("map", help="print the state for one text")
    text_args(p)
    phi_args(p)
    p.add_argument("--provider", help="fixture provider label (default: reference)")
    p.add_argument("--emit-embeddings", action="store_true", help="include embedding vectors")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("eval", help="evaluate a corpus and print a metrics report")
    phi_args(p)
    p.add_argument("--lang", choices=("en", "jp", "auto"))
    p.add_argument("--lexicon")
    p.add_argument("--corpus", help="JSONL corpus (default: bundled)")
    p.add_argument("--provider", action="append", help="fixture provider label; repeat to compare providers")
    p.add_argument("--format", choices=("text", "json", "csv"), default="text")
    p.add_argument("--out", help="write the report to this file instead of stdout")
    p.add_argument("--jobs", type=int, help="worker threads (default: logical cores)")
    p.add_argument("--strict", action="store_true", help="exit 1 when any sentence lacks a fixture")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("record", help="record live LLM responses as replay fixtures")
    p.add_argument("--corpus", help="JSONL corpus (default: bundled)")
    p.add_argument("--provider-config", dest="provider_config")
    p.add_argument("--fixtures-out", required=True)
    p.add_argument("--category", action="append", help="only record these categories")
    p.add_argument("--lexicon")
    p.set_defaults(func=cmd_record)

    p = sub.add_parser("lexicon-dump", help="print the marker lexicon as JSON")
    p.add_argument("--lexicon")
    p.add_argument("--out")
    p.set_defaults(func=cmd_lexicon_dump)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args._file_config = json.loads(Path(args.config).read_text(encoding="utf-8")) if args.config else {}
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (TextStateError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
