"""The composed text-to-state mapping and the NRR operator pipeline scaffold."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

from .embed_merge import DEFAULT_TAU, Embedder, HashingEmbedder, MergePolicy, merge
from .errors import FixtureNotFoundError, StageContractError
from .lexicon import MarkerLexicon, default_lexicon, detect_conflict_markers
from .llm_extract import ChatProvider, FixtureStore, ProviderConfig, llm_extract
from .rule_extract import rule_extract
from .state import DEFAULT_BETA, State, argmax_index, construct_state

log = logging.getLogger(__name__)

MODES = ("rule", "llm", "hybrid")


@dataclass(frozen=True)
class PhiConfig:
    mode: str = "hybrid"
    tau: float = DEFAULT_TAU
    beta: float = DEFAULT_BETA
    language: str = "auto"
    extraction_mode: str = "replay"
    fixtures: FixtureStore | None = None
    provider: ProviderConfig | ChatProvider | None = None
    lexicon: MarkerLexicon = field(default_factory=default_lexicon)
    embedder: Embedder = field(default_factory=HashingEmbedder)
    dedup_within: bool = True

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, not {self.mode!r}")
        if self.extraction_mode not in ("live", "replay"):
            raise ValueError(f"extraction_mode must be 'live' or 'replay', not {self.extraction_mode!r}")
        if self.language not in ("en", "jp", "auto"):
            raise ValueError(f"language must be 'en', 'jp' or 'auto', not {self.language!r}")
        if not math.isfinite(self.beta) or self.beta < 0:
            raise ValueError("beta must be finite and non-negative")
        MergePolicy(self.tau, self.dedup_within)

    @property
    def merge_policy(self) -> MergePolicy:
        return MergePolicy(self.tau, self.dedup_within)


def phi(text: str, config: PhiConfig | None = None, *, sentence_id: str | None = None, language: str | None = None) -> State:
    """Map ``text`` to a state: detect markers, extract, merge, construct.

    ``rule`` mode never consults the LLM path, ``llm`` mode never segments,
    ``hybrid`` merges rule output (kept in full) with LLM output. In hybrid
    replay mode a missing fixture falls back to rule-only extraction and the
    state carries a warning.
    """
    config = config or PhiConfig()
    fv = detect_conflict_markers(text, config.lexicon, language or config.language)

    rule_items = rule_extract(text, fv) if config.mode in ("rule", "hybrid") else []
    llm_items = []
    warnings: list[str] = []
    if config.mode in ("llm", "hybrid"):
        try:
            llm_items = llm_extract(
                text,
                fv,
                config.extraction_mode,
                provider=config.provider,
                fixtures=config.fixtures,
                sentence_id=sentence_id,
            )
        except FixtureNotFoundError as exc:
            if config.mode == "llm":
                raise
            log.info("%s; continuing rule-only", exc)
            warnings.append(f"llm fixture missing, rule-only extraction: {exc}")

    interps = merge(rule_items, llm_items, config.merge_policy, config.embedder)
    return construct_state(interps, fv, text, config.beta, config.embedder, warnings)


# ---------------------------------------------------------------- operators

OPERATOR_ORDER = ("sigma", "alpha", "rho", "iota", "delta", "tau_op", "kappa", "pi")
PIPELINE_ORDER = ("sigma", "rho", "delta", "kappa", "pi")


@dataclass(frozen=True)
class StageContext:
    prev_state: State | None = None
    dampening: float = 0.0


Transform = Callable[[State, StageContext], State]


def identity(state: State, ctx: StageContext) -> State:
    return state


def integrate_history(state: State, ctx: StageContext) -> State:
    """Default kappa: keep every entry of the previous state alongside the new ones."""
    if ctx.prev_state is None:
        return state
    return replace(
        state,
        entries=ctx.prev_state.entries + state.entries,
        warnings=ctx.prev_state.warnings + state.warnings,
    )


@dataclass(frozen=True)
class OperatorStage:
    name: str
    transform: Transform = identity

    def __post_init__(self) -> None:
        if self.name not in OPERATOR_ORDER:
            raise ValueError(f"unknown operator stage {self.name!r}")


def default_stages() -> list[OperatorStage]:
    return [OperatorStage(n, integrate_history if n == "kappa" else identity) for n in PIPELINE_ORDER]


def project(state: State) -> str:
    """Non-destructive projection: the heaviest entry's meaning."""
    return state.entries[argmax_index(state)].meaning


def _check_stage_output(stage: str, state: object) -> None:
    if not isinstance(state, State):
        raise StageContractError(stage, f"returned {type(state).__name__}, not State")
    if not state.entries:
        raise StageContractError(stage, "state has no entries")
    for e in state.entries:
        if not (e.weight > 0 and math.isfinite(e.weight)):
            raise StageContractError(stage, f"non-positive or non-finite weight {e.weight!r}")
        if not e.context:
            raise StageContractError(stage, "entry with empty context")
        if e.conflict is None:
            raise StageContractError(stage, "entry lost its conflict metadata")


def nrr_pipeline(
    text: str,
    prev_state: State | None = None,
    config: PhiConfig | None = None,
    stages: Sequence[OperatorStage] | None = None,
    *,
    dampening: float = 0.0,
    projection: Callable[[State], str] = project,
    sentence_id: str | None = None,
) -> tuple[State, str]:
    stages = default_stages() if stages is None else list(stages)
    positions = [OPERATOR_ORDER.index(s.name) for s in stages]
    if positions != sorted(set(positions)):
        raise ValueError("operator stages must be unique and follow the order " + " -> ".join(OPERATOR_ORDER))

    state = phi(text, config, sentence_id=sentence_id)
    ctx = StageContext(prev_state=prev_state, dampening=dampening)
    for stage in stages:
        state = stage.transform(state, ctx)
        _check_stage_output(stage.name, state)
    return state, projection(state)
