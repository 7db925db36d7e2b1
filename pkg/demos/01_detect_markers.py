"""Which conflict markers does the lexicon find, and where?

Run: python3 demos/01_detect_markers.py
"""

from textstate import detect_conflict_markers

samples = [
    ("I love them, but being with them hurts.", "en"),
    ("Maybe I should apply for that position.", "en"),
    ("Either we leave now or we miss the train.", "en"),
    ("Yametai kedo yametakunai", "jp"),
    ("辞めたいけど辞めたくない。", "auto"),
    ("The sky is blue.", "auto"),
]

for text, lang in samples:
    fv = detect_conflict_markers(text, language=lang)
    found = ", ".join(f"{h.entry.category.value}:{text[h.start:h.end]!r}" for h in fv.hits) or "none"
    print(f"[{fv.language}] {text}\n    markers: {found}\n    conflict: {fv.has_conflict}")
