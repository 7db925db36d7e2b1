import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from textstate.errors import EmptyInputError, LexiconParseError, LexiconValidationError
from textstate.lexicon import (
    CONTEXT_LABELS,
    FeatureVector,
    MarkerCategory,
    MarkerEntry,
    default_lexicon,
    detect_conflict_markers,
    detect_language,
    load_lexicon,
)

TABLE_MARKERS = {
    ("en", "adversative"): ["but", "however", "yet", "although"],
    ("en", "contrastive"): ["on the other hand", "whereas"],
    ("en", "concessive"): ["even though", "despite"],
    ("en", "hedging"): ["maybe", "perhaps", "might"],
    ("en", "epistemic"): ["I think", "I believe", "it seems"],
    ("en", "modal"): ["could", "would", "should"],
    ("jp", "adversative"): ["kedo", "demo", "shikashi", "daga"],
    ("jp", "contrastive"): ["ippou de", "hanmen"],
    ("jp", "concessive"): ["nimo kakawarazu"],
    ("jp", "hedging"): ["kamoshirenai", "tabun"],
    ("jp", "epistemic"): ["to omou", "ki ga suru"],
    ("jp", "modal"): ["beki", "hazu", "darou"],
}


def test_eight_categories_each_with_labels():
    assert len(MarkerCategory) == 8
    assert len(FeatureVector.empty().bits) == 8
    assert all(CONTEXT_LABELS[c] for c in MarkerCategory)
    assert CONTEXT_LABELS[MarkerCategory.ADVERSATIVE] == ("pre-adv", "post-adv")
    assert CONTEXT_LABELS[MarkerCategory.HEDGING] == ("hedge-scope",)


@pytest.mark.parametrize("key", sorted(TABLE_MARKERS))
def test_default_lexicon_covers_table(key):
    lexicon = default_lexicon()
    language, category = key
    for surface in TABLE_MARKERS[key]:
        assert (surface, language, category) in lexicon


def test_default_lexicon_structural_markers_and_no_jp_scope():
    lexicon = default_lexicon()
    assert ("both ... and", "en", "coordination") in lexicon
    assert ("either ... or", "en", "coordination") in lexicon
    assert ("all ... not", "en", "scope") in lexicon
    assert ("mo ... mo", "jp", "coordination") in lexicon
    assert not [e for e in lexicon.entries if e.language == "jp" and e.category is MarkerCategory.SCOPE]


def test_specific_examples():
    lexicon = load_lexicon()
    assert ("but", "en", "adversative") in lexicon
    assert ("kamoshirenai", "jp", "hedging") in lexicon


def test_english_entries_word_bounded():
    assert all(e.boundary == "word-bounded" for e in default_lexicon().for_language("en"))


def test_unknown_category_rejected():
    bad = json.dumps([{"surface": "but", "language": "en", "category": "adversive", "boundary": "word-bounded"}])
    with pytest.raises(LexiconValidationError, match="adversive"):
        load_lexicon(bad)


def test_malformed_file_reports_line():
    with pytest.raises(LexiconParseError) as info:
        load_lexicon('[\n  {"surface": "but",\n  oops\n]')
    assert info.value.line == 3


def test_duplicate_triple_rejected():
    entry = {"surface": "But", "language": "en", "category": "adversative"}
    with pytest.raises(LexiconValidationError, match="duplicate"):
        load_lexicon(json.dumps([entry, dict(entry, surface="but")]))


def test_surface_case_normalized_and_roundtrip():
    lexicon = load_lexicon(json.dumps([{"surface": "  On  The Other Hand ", "language": "en", "category": "contrastive"}]))
    assert lexicon.entries[0].surface == "on the other hand"
    again = load_lexicon(default_lexicon().to_json())
    assert again.entries == default_lexicon().entries


def test_empty_surface_rejected():
    with pytest.raises(LexiconValidationError):
        MarkerEntry("   ", "en", MarkerCategory.ADVERSATIVE)


def test_detect_adversative_span():
    text = "I want to quit my job, but I also don't want to quit."
    fv = detect_conflict_markers(text)
    assert fv[MarkerCategory.ADVERSATIVE]
    assert fv.categories() == [MarkerCategory.ADVERSATIVE]
    (hit,) = fv.hits
    assert text[hit.start:hit.end] == "but"


def test_detect_romanized_japanese():
    fv = detect_conflict_markers("Yametai kedo yametakunai", language="jp")
    assert fv[MarkerCategory.ADVERSATIVE]
    assert [h.entry.surface for h in fv.hits] == ["kedo"]


def test_detect_native_japanese_substring():
    text = "辞めたいけど辞めたくない。"
    fv = detect_conflict_markers(text)
    assert fv.language == "jp"
    (hit,) = fv.hits
    assert text[hit.start:hit.end] == "けど"


def test_no_markers():
    fv = detect_conflict_markers("The cat sat on the mat.")
    assert fv.bits == (False,) * 8
    assert fv.hits == ()
    assert not fv.has_conflict


def test_word_boundary_butter():
    assert not detect_conflict_markers("Pass the butter, please.").has_conflict
    assert not detect_conflict_markers("Maybelline sells mascara.").has_conflict


def test_case_insensitive_and_multiword():
    fv = detect_conflict_markers("On the other\nhand, BUT it rained.")
    assert fv[MarkerCategory.CONTRASTIVE] and fv[MarkerCategory.ADVERSATIVE]


def test_discontinuous_pattern():
    fv = detect_conflict_markers("You can have either tea or coffee.")
    assert fv[MarkerCategory.COORDINATION]
    (hit,) = fv.hits
    assert hit.span == (13, 26)


def test_nfkc_fullwidth_and_spans_in_original():
    text = "ＢＵＴ it works"
    fv = detect_conflict_markers(text, language="en")
    assert fv[MarkerCategory.ADVERSATIVE]
    assert fv.hits[0].span == (0, 3)


def test_auto_language():
    assert detect_language("今日は") == "jp"
    assert detect_language("hello") == "en"
    fv = detect_conflict_markers("Yametai kedo yametakunai")
    assert fv.language == "jp" and fv[MarkerCategory.ADVERSATIVE]
    # English hits take precedence over romanized Japanese on Latin text
    fv = detect_conflict_markers("The demo is good but slow")
    assert fv.language == "en" and [h.entry.surface for h in fv.hits] == ["but"]


def test_empty_input():
    with pytest.raises(EmptyInputError):
        detect_conflict_markers("   ")


def test_bad_language():
    with pytest.raises(ValueError):
        detect_conflict_markers("text", language="fr")


def test_l1_matches_hits():
    fv = detect_conflict_markers("Maybe I think so, but perhaps not.")
    assert fv.l1 == 3
    assert fv.has_conflict == bool(fv.hits)


WORDS = ["the", "cat", "but", "maybe", "I", "think", "could", "however", "butter", "mat", "yet", "hand", ","]
MARKERS = ["but", "maybe", "however", "could", "I think", "whereas", "despite", "perhaps"]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from(WORDS), min_size=1, max_size=20), st.sampled_from(MARKERS))
def test_monotone_and_deterministic(words, marker):
    text = " ".join(words)
    fv = detect_conflict_markers(text, language="en")
    assert detect_conflict_markers(text, language="en") == fv
    longer = detect_conflict_markers(text + " " + marker, language="en")
    assert all(b2 or not b1 for b1, b2 in zip(fv.bits, longer.bits))
    for hit in fv.hits:
        assert 0 <= hit.start < hit.end <= len(text)
        assert fv.bits[hit.category.index]
    starts = [h.start for h in fv.hits]
    assert starts == sorted(starts)
    assert (fv.l1 > 0) == bool(fv.hits)


@settings(max_examples=100, deadline=None)
@given(st.text(min_size=1, max_size=60).filter(lambda s: s.strip()))
def test_spans_within_bounds_on_arbitrary_unicode(text):
    fv = detect_conflict_markers(text)
    for hit in fv.hits:
        assert 0 <= hit.start < hit.end <= len(text)
    present = {h.category for h in fv.hits}
    assert set(fv.categories()) == present
