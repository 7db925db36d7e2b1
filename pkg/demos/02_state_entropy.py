"""Weights, entropy and the forced-collapse baseline for a few hand-built states.

Run: python3 demos/02_state_entropy.py
"""

from textstate import FeatureVector, RawInterpretation, check_noncollapse, collapse, construct_state, epr, state_entropy

cases = {
    "balanced pair": [0.5, 0.5],
    "skewed pair": [0.7, 0.3],
    "three-way": [0.4, 0.35, 0.25],
}

for name, confidences in cases.items():
    interps = [RawInterpretation(f"reading {i + 1}", f"ctx-{i + 1}", c, "llm") for i, c in enumerate(confidences)]
    state = construct_state(interps, FeatureVector.empty(), name)
    print(f"{name:14s} weights={state.weights}  H={state_entropy(state):.3f} bits  "
          f"EPR={epr(state):.3f}  non-collapse={bool(check_noncollapse(state))}")
    print(f"{'':14s} collapsed baseline H={state_entropy(collapse(state)):.3f}")

# Scaling every weight by the same factor leaves the entropy unchanged.
state = construct_state([RawInterpretation("a", "x", 0.7, "llm"), RawInterpretation("b", "y", 0.3, "llm")],
                        FeatureVector.empty(), "scaling")
for factor in (1e-6, 1.0, 1e6):
    print(f"scale {factor:>8g}: H = {state_entropy(state.scaled(factor))!r}")
