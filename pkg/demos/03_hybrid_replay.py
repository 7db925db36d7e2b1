"""Map sentences through the rule, LLM and hybrid paths using recorded fixtures.

Nothing here touches the network: LLM output is replayed from the fixture
sets bundled with the package.

Run: python3 demos/03_hybrid_replay.py
"""

import json

from textstate import PhiConfig, bundled_fixtures, phi, state_entropy

chat = bundled_fixtures("chatgpt")
reference = bundled_fixtures("reference")

print("Two recorded enumerations:")
for sid, text in [("lex_en_01", "I saw her duck."), ("str_en_01", "I shot an elephant in my pajamas.")]:
    state = phi(text, PhiConfig(mode="llm", fixtures=chat), sentence_id=sid)
    print(f"  {text}  |S|={state.size}  H={state_entropy(state):.3f}")
    for e in state.entries:
        print(f"      w={e.weight:.2f} [{e.context}] {e.meaning}")

text = "I want to quit my job, but I also don't want to quit."
print("\nOne adversative sentence, three modes:")
for mode in ("rule", "llm", "hybrid"):
    try:
        state = phi(text, PhiConfig(mode=mode, fixtures=reference), sentence_id="adv_en_01")
    except LookupError as exc:
        print(f"  {mode:6s} -> no fixture recorded ({exc})")
        continue
    note = f"  warnings: {list(state.warnings)}" if state.warnings else ""
    print(f"  {mode:6s} -> |S|={state.size} H={state_entropy(state):.3f}{note}")

print("\nState JSON for the rule path:")
print(json.dumps(phi(text, PhiConfig(mode="rule")).to_dict(), indent=2))
