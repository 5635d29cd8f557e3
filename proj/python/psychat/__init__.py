"""Python bindings for the psychat dialogue pipeline."""

import json as _json

from ._psychat import (  # noqa: F401
    Index,
    PsychatError,
    bleu,
    distinct,
    lcs_length,
    meteor,
    render_history,
    rouge_l,
    segment_sentences,
    tokenize,
)
from . import _psychat


def evaluate(pairs):
    """Corpus report for (candidate, reference) pairs."""
    return _json.loads(_psychat.evaluate_json(list(pairs)))


def parse_corpus(text, vocab_json):
    """Validated dialogues from corpus JSONL text."""
    out = _psychat.parse_corpus_json(text, vocab_json)
    return [_json.loads(line) for line in out.splitlines() if line.strip()]


def split_sessions(dialogue, vocab_json):
    """Sessions of one dialogue (dict or JSON line)."""
    line = dialogue if isinstance(dialogue, str) else _json.dumps(dialogue, ensure_ascii=False)
    return _json.loads(_psychat.split_sessions_json(line, vocab_json))


class Pipeline:
    """Loads a pipeline config and answers client turns."""

    def __init__(self, config):
        self._ctx = _psychat.Pipeline(str(config))

    def respond(self, history, timings=False):
        """history: list of (speaker, text) ending with a client turn."""
        return _json.loads(self._ctx.respond_json([tuple(t) for t in history], timings))
