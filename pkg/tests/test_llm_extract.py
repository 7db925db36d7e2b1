import json
from types import SimpleNamespace

import httpx
import pytest

from textstate.errors import (
    EmptyInputError,
    FixtureError,
    FixtureNotFoundError,
    MalformedResponseError,
    TransportError,
)
from textstate.lexicon import FeatureVector, detect_conflict_markers
from textstate.llm_extract import (
    ChatProvider,
    Fixture,
    FixtureStore,
    ProviderConfig,
    build_prompt,
    llm_extract,
    parse_llm_response,
    record_fixtures,
    render_interpretations,
)
from textstate.rule_extract import RawInterpretation

EXPECTED_PROMPT = (
    'Given the text: "I might go"\n\n'
    "Note: This text contains potential ambiguity markers.\n\n"
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

DUCK = {
    "id": "lex_en_01",
    "interpretations": [
        {"meaning": "I observed her pet duck (the bird).", "context": "noun-reading", "confidence": 0.5},
        {"meaning": "I saw her lower her head quickly.", "context": "verb-reading", "confidence": 0.5},
    ],
}
ELEPHANT = {
    "id": "str_en_01",
    "interpretations": [
        {"meaning": "While wearing my pajamas, I shot an elephant.", "context": "PP attaches to subject", "confidence": 0.7},
        {"meaning": "I shot an elephant that was wearing my pajamas.", "context": "PP attaches to object", "confidence": 0.3},
    ],
}


def test_prompt_exact_with_note():
    text = "I might go"
    prompt = build_prompt(text, detect_conflict_markers(text, language="en"))
    assert prompt.conflict_note_included
    assert prompt.rendered == EXPECTED_PROMPT


def test_prompt_without_note():
    prompt = build_prompt("I saw her duck.", FeatureVector.empty())
    assert not prompt.conflict_note_included
    assert "Note:" not in prompt.rendered
    assert prompt.rendered == EXPECTED_PROMPT.replace("I might go", "I saw her duck.").replace(
        "Note: This text contains potential ambiguity markers.\n\n", ""
    )


def test_prompt_rejects_empty():
    with pytest.raises(EmptyInputError):
        build_prompt("  \n", FeatureVector.empty())


@pytest.mark.parametrize("doc, weights", [(DUCK, [0.5, 0.5]), (ELEPHANT, [0.7, 0.3])])
def test_parse_json_examples(doc, weights):
    parsed = parse_llm_response(json.dumps(doc))
    assert [p.confidence for p in parsed] == weights
    assert [p.meaning for p in parsed] == [i["meaning"] for i in doc["interpretations"]]
    assert all(p.source == "llm" for p in parsed)


def test_parse_fenced_json():
    raw = "Sure, here you go:\n```json\n" + json.dumps(DUCK) + "\n```\nHope that helps."
    assert len(parse_llm_response(raw)) == 2


def test_parse_line_format():
    raw = (
        "INTERP: The speaker wants to quit\nCONTEXT: surface desire\nCONFIDENCE: 0.6\n---\n"
        "INTERP: The speaker does not want\n  to quit\nCONTEXT: deeper attachment\nCONFIDENCE: 0.4\n---\n"
    )
    parsed = parse_llm_response(raw)
    assert [(p.meaning, p.context_label, p.confidence) for p in parsed] == [
        ("The speaker wants to quit", "surface desire", 0.6),
        ("The speaker does not want to quit", "deeper attachment", 0.4),
    ]


def test_parse_markdown_decorated_lines():
    raw = "1. **INTERP:** alpha\n**CONTEXT:** one\n**CONFIDENCE:** 0.9\n\n2. **INTERP:** beta\n**CONTEXT:** two\n"
    parsed = parse_llm_response(raw)
    assert [p.meaning for p in parsed] == ["alpha", "beta"]
    assert parsed[1].confidence == 0.5  # missing, defaults to 1/n


def test_missing_confidence_defaults_to_uniform():
    raw = "INTERP: a\nCONTEXT: x\n---\nINTERP: b\nCONTEXT: y\n---\nINTERP: c\n---\n"
    parsed = parse_llm_response(raw)
    assert [p.confidence for p in parsed] == [1 / 3] * 3
    assert parsed[2].context_label == "llm-unspecified"


def test_confidence_clamped():
    raw = json.dumps({"interpretations": [
        {"meaning": "a", "context": "x", "confidence": 1.7},
        {"meaning": "b", "context": "y", "confidence": -0.2},
        {"meaning": "c", "context": "z", "confidence": "about 0.25"},
    ]})
    assert [p.confidence for p in parse_llm_response(raw)] == [1.0, 0.0, 0.25]


@pytest.mark.parametrize("raw", ["", "I cannot help with that.", "{}", '{"interpretations": []}', "CONTEXT: orphan\n"])
def test_malformed(raw):
    with pytest.raises(MalformedResponseError) as info:
        parse_llm_response(raw)
    assert info.value.raw == raw


@pytest.mark.parametrize("fmt", ["lines", "json"])
def test_render_round_trip(fmt):
    items = [RawInterpretation("first reading", "ctx one", 0.1 + 0.2, "llm"),
             RawInterpretation("second reading", "ctx two", 1 / 3, "llm")]
    assert parse_llm_response(render_interpretations(items, fmt)) == items


def test_render_unknown_format():
    with pytest.raises(ValueError):
        render_interpretations([], "xml")


# ---------------------------------------------------------------- fixtures

def test_store_write_and_lookup(tmp_path):
    store = FixtureStore(tmp_path, "prov")
    fixture = Fixture.from_response("s1", "prov", json.dumps(DUCK), "I saw her duck.")
    path = store.write(fixture)
    assert path == tmp_path / "prov" / "s1.json"
    assert not list((tmp_path / "prov").glob("*.tmp"))
    doc = json.loads(path.read_text())
    assert set(doc) == {"sentence_id", "provider_label", "text", "raw_response", "parsed"}
    assert store.lookup("s1") == fixture
    assert store.lookup(text="I  saw her duck.") == fixture
    assert list(store) == [fixture]


def test_store_missing(tmp_path):
    store = FixtureStore(tmp_path, "prov")
    with pytest.raises(FixtureNotFoundError):
        store.lookup("nope", "no such text")
    with pytest.raises(FixtureNotFoundError):
        llm_extract("x", FeatureVector.empty(), "replay", fixtures=None)


def test_store_rejects_label_mismatch_and_bad_ids(tmp_path):
    store = FixtureStore(tmp_path, "prov")
    with pytest.raises(ValueError):
        store.write(Fixture.from_response("s1", "other", json.dumps(DUCK)))
    with pytest.raises(ValueError):
        store.path_for("../escape")


def test_tampered_fixture_rejected(tmp_path):
    store = FixtureStore(tmp_path, "prov")
    path = store.write(Fixture.from_response("s1", "prov", json.dumps(DUCK)))
    doc = json.loads(path.read_text())
    doc["parsed"][0]["confidence"] = 0.9
    path.write_text(json.dumps(doc))
    with pytest.raises(FixtureError):
        store.lookup("s1")


def test_bundled_fixtures_valid(reference_fixtures):
    fixtures = list(reference_fixtures)
    assert len(fixtures) == 28
    for f in fixtures:
        assert len(f.parsed) >= 2 and f.text


def test_replay_extract(reference_fixtures):
    items = llm_extract("anything", FeatureVector.empty(), "replay", fixtures=reference_fixtures, sentence_id="lex_en_01")
    assert len(items) >= 2


# ---------------------------------------------------------------- live transport

def chat_reply(content):
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": content}}]})


def test_live_mode_sends_prompt_and_auth(monkeypatch):
    monkeypatch.setenv("TS_TEST_KEY", "sekret-value")
    seen = {}

    def handler(request):
        seen["auth"] = request.headers.get("authorization")
        seen["body"] = json.loads(request.content)
        return chat_reply(json.dumps(ELEPHANT))

    config = ProviderConfig(endpoint="https://llm.test/v1/chat/completions", model_id="m-1", auth_env="TS_TEST_KEY")
    provider = ChatProvider(config, httpx.Client(transport=httpx.MockTransport(handler)))
    text = "I shot an elephant in my pajamas."
    items = llm_extract(text, FeatureVector.empty(), "live", provider=provider)
    assert [i.confidence for i in items] == [0.7, 0.3]
    assert seen["auth"] == "Bearer sekret-value"
    assert seen["body"]["model"] == "m-1"
    assert "temperature" not in seen["body"]
    assert seen["body"]["messages"][0]["content"] == build_prompt(text, FeatureVector.empty()).rendered


def test_live_retries_then_succeeds():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(503) if len(calls) < 3 else chat_reply(json.dumps(DUCK))

    config = ProviderConfig(endpoint="https://llm.test/c", model_id="m", backoff=0.0, max_retries=3)
    provider = ChatProvider(config, httpx.Client(transport=httpx.MockTransport(handler)))
    assert "duck" in provider.complete("p")
    assert len(calls) == 3


def test_live_gives_up_with_attempt_count():
    def handler(request):
        raise httpx.ConnectError("refused", request=request)

    config = ProviderConfig(endpoint="https://llm.test/c", model_id="m", backoff=0.0, max_retries=2)
    provider = ChatProvider(config, httpx.Client(transport=httpx.MockTransport(handler)))
    with pytest.raises(TransportError) as info:
        provider.complete("p")
    assert info.value.attempts == 3


def test_live_client_error_not_retried():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(401)

    config = ProviderConfig(endpoint="https://llm.test/c", model_id="m", backoff=0.0)
    with pytest.raises(TransportError):
        ChatProvider(config, httpx.Client(transport=httpx.MockTransport(handler))).complete("p")
    assert len(calls) == 1


def test_live_bad_payload():
    config = ProviderConfig(endpoint="https://llm.test/c", model_id="m")
    client = httpx.Client(transport=httpx.MockTransport(lambda r: httpx.Response(200, json={"nope": 1})))
    with pytest.raises(MalformedResponseError):
        ChatProvider(config, client).complete("p")


def test_provider_config_validation(tmp_path):
    with pytest.raises(ValueError):
        ProviderConfig.from_dict({"endpoint": "e", "model_id": "m", "api_key": "x"})
    with pytest.raises(ValueError):
        ProviderConfig(endpoint="e", model_id="m", timeout=0)
    path = tmp_path / "p.json"
    path.write_text(json.dumps({"endpoint": "e", "model_id": "m", "label": "gpt"}))
    assert ProviderConfig.from_file(path).label == "gpt"


def test_record_fixtures_partial_failure(tmp_path, monkeypatch):
    monkeypatch.setenv("TS_TEST_KEY", "sekret-value")

    def handler(request):
        content = json.loads(request.content)["messages"][0]["content"]
        if "bad" in content:
            return chat_reply("no structure at all")
        return chat_reply(json.dumps(DUCK))

    sentences = [SimpleNamespace(id=f"s{i}", text=t, language="en") for i, t in enumerate(["good one", "bad one", "good two"])]
    config = ProviderConfig(endpoint="https://llm.test/c", model_id="m", auth_env="TS_TEST_KEY", label="rec",
                            backoff=0.0, max_concurrency=2)
    client = httpx.Client(transport=httpx.MockTransport(handler))
    summary = record_fixtures(sentences, config, tmp_path, client=client)
    assert summary.written == 2 and list(summary.failures) == ["s1"]
    assert summary.line() == "recorded 2 fixture(s), 1 failure(s)"
    store = FixtureStore(tmp_path, "rec")
    assert store.lookup(text="good two").sentence_id == "s2"
    for path in tmp_path.rglob("*"):
        if path.is_file():
            assert "sekret-value" not in path.read_text()
