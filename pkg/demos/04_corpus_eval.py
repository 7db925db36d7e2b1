"""Evaluate the bundled 68-sentence corpus in rule-only and hybrid modes.

Run: python3 demos/04_corpus_eval.py
"""

from textstate import PhiConfig, bundled_fixtures, emit_report, evaluate, load_corpus

corpus = load_corpus()
print(f"{len(corpus)} sentences loaded\n")

print("== rule only ==")
print(emit_report(evaluate(corpus, PhiConfig(mode="rule"))))

print("== hybrid (reference fixtures) ==")
print(emit_report(evaluate(corpus, PhiConfig(fixtures=bundled_fixtures("reference")), jobs=4)))
