import json
import math
import os
import pathlib

import pytest

import psychat

ROOT = pathlib.Path(os.environ.get("PSYCHAT_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))
MOCK_CONFIG = ROOT / "assets" / "psychat.mock.json"
VOCAB = (ROOT / "assets" / "vocab.json").read_text(encoding="utf-8")


def test_segmentation_is_lossless():
    text = "我很累。真的吗？”好的…  最后一句"
    parts = psychat.segment_sentences(text)
    assert "".join(parts) == text
    assert parts[0] == "我很累。"
    assert len(parts) == 4


def test_render_history_uses_speaker_tokens():
    turns = [("client", "你好。"), ("counselor", "请说。")]
    assert psychat.render_history(turns) == "[client] 你好。\n[counselor] 请说。"
    assert psychat.render_history(turns, speaker_tokens=False) == "你好。\n请说。"


def test_metric_examples():
    assert psychat.bleu(["a", "b", "c"], ["a", "b", "d"], 1) == pytest.approx(2 / 3)
    assert psychat.bleu(["a"], ["a", "b", "c"], 1) == pytest.approx(math.exp(-2))
    assert psychat.rouge_l(["a", "b", "c"], ["a", "c"]) == pytest.approx(0.8)
    assert psychat.lcs_length(["a", "b", "c"], ["a", "c"]) == 2
    assert psychat.distinct([["a", "b"], ["a", "b"]], 2) == pytest.approx(0.5)
    assert psychat.meteor(["a", "x", "b"], ["a", "b"]) == pytest.approx(10 / 21)
    assert psychat.tokenize("我很好 OK") == ["我", "很", "好", "OK"]


def test_evaluate_report():
    report = psychat.evaluate([("我很好", "我很好"), ("下雨了", "下雪了")])
    assert report["pair_count"] == 2
    for key in ("meteor", "bleu1", "bleu2", "bleu3", "rouge_l", "distinct1", "distinct2"):
        assert 0.0 <= report[key] <= 1.0


def test_errors_raise_psychat_error():
    with pytest.raises(psychat.PsychatError):
        psychat.bleu([], ["a"], 1)
    with pytest.raises(psychat.PsychatError):
        psychat.Index.load(str(ROOT / "does-not-exist.idx"))


def test_corpus_and_sessions():
    text = (ROOT / "data" / "sample" / "train.jsonl").read_text(encoding="utf-8")
    dialogues = psychat.parse_corpus(text, VOCAB)
    assert len(dialogues) == 16
    first = dialogues[0]
    sessions = psychat.split_sessions(first, VOCAB)
    assert len(sessions) == len(first["utterances"]) // 2
    assert sessions[0]["golden_response"]["speaker"] == "counselor"


def test_index_load():
    idx = psychat.Index.load(str(ROOT / "data" / "sample" / "validation.idx"))
    assert idx.dim == 8
    assert idx.size > 0
    record, distance = idx.nearest_vector([0.0] * 8)
    assert 0 <= record < idx.size
    assert distance >= 0.0


def test_pipeline_respond_with_mocks():
    pipe = psychat.Pipeline(MOCK_CONFIG)
    out = pipe.respond([("client", "我最近睡不好。"), ("counselor", "多久了？"), ("client", "一个月了。很难受！")])
    assert len(out["candidates"]["candidates"]) == 10
    assert out["candidates"]["candidates"][0] == "echo:很难受！#1"
    assert out["response_text"] in out["candidates"]["candidates"]
    assert len(out["behaviors"]) == 2
    assert out["strategies"]
    assert "timings" not in out
    again = pipe.respond([("client", "我最近睡不好。"), ("counselor", "多久了？"), ("client", "一个月了。很难受！")])
    assert json.dumps(again, sort_keys=True) == json.dumps(out, sort_keys=True)
    with pytest.raises(psychat.PsychatError):
        pipe.respond([])
