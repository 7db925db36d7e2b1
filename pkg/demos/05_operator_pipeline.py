"""Chain two utterances through the operator scaffold.

The default kappa stage carries earlier interpretations forward, and the
final projection picks one surface reading without shrinking the state.

Run: python3 demos/05_operator_pipeline.py
"""

import dataclasses

from textstate import OperatorStage, PhiConfig, nrr_pipeline, state_entropy

config = PhiConfig(mode="rule")

first, said = nrr_pipeline("I love them, but being with them hurts.", config=config)
print(f"turn 1: |S|={first.size} H={state_entropy(first):.3f} -> {said!r}")

second, said = nrr_pipeline("Maybe I should talk to them.", prev_state=first, config=config)
print(f"turn 2: |S|={second.size} H={state_entropy(second):.3f} -> {said!r}")
for e in second.entries:
    print(f"    w={e.weight:.2f} [{e.context}] {e.meaning}")


def favour_latest(state, ctx):
    """A toy delta stage: double the weight of the newest entry."""
    entries = list(state.entries)
    entries[-1] = dataclasses.replace(entries[-1], weight=entries[-1].weight * 2)
    return dataclasses.replace(state, entries=tuple(entries))


stages = [OperatorStage("sigma"), OperatorStage("delta", favour_latest), OperatorStage("pi")]
state, said = nrr_pipeline("I love them, but being with them hurts.", config=config, stages=stages)
print(f"\ncustom delta: weights={state.weights} -> {said!r}")
