"""Writes the small synthetic corpora under data/sample/.

Usage: python scripts/make_sample_corpus.py [out_dir]
"""

import json
import random
import sys
from pathlib import Path

CLIENT = [
    ("最近工作压力很大，每天都睡不好。", "problem_description"),
    ("我和室友总是因为小事吵架。", "problem_description"),
    ("考试快到了，我一直静不下心复习。", "problem_description"),
    ("我感觉特别焦虑，心里很乱。", "emotion_expression"),
    ("说实话我有点难过，也很委屈。", "emotion_expression"),
    ("我有时候会突然很想哭。", "emotion_expression"),
    ("我该怎么办呢？", "seeking_advice"),
    ("你觉得我应该跟他们谈谈吗？", "seeking_advice"),
    ("有没有什么方法能让我放松一点？", "seeking_advice"),
    ("也许是我对自己要求太高了。", "self_reflection"),
    ("我想可能是我太在意别人的看法。", "self_reflection"),
    ("嗯，你说得对。", "agreement"),
    ("是的，我也是这么想的。", "agreement"),
    ("谢谢你听我说这些。", "other_behavior"),
]

COUNSELOR = [
    ("能具体说说发生了什么吗？", "question"),
    ("这种情况持续多久了？", "question"),
    ("你当时是怎么想的？", "question"),
    ("听起来你最近一直在承受很大的压力。", "restatement"),
    ("你的意思是，你们之间的矛盾越来越多了。", "restatement"),
    ("我能感受到你的焦虑和无助。", "reflection_of_feelings"),
    ("这让你觉得很委屈，对吗？", "reflection_of_feelings"),
    ("我以前也有过类似的经历。", "self_disclosure"),
    ("你愿意说出来，已经很勇敢了。", "affirmation"),
    ("有这样的感受是很正常的。", "affirmation"),
    ("也许可以试着每天留出一点时间给自己。", "suggestion"),
    ("睡前做几次深呼吸可能会有帮助。", "suggestion"),
    ("长期睡眠不足会影响情绪和注意力。", "information"),
    ("我们可以慢慢来。", "other_strategy"),
]


def utterance(rng, bank, speaker, labeled):
    picks = rng.sample(bank, rng.randint(1, 3))
    return {
        "speaker": speaker,
        "sentences": [{"text": t, "label": l if labeled else None} for t, l in picks],
    }


def dialogue(rng, did, labeled):
    turns = rng.choice([2, 4, 4, 6, 6, 7])
    utts = [
        utterance(rng, CLIENT if i % 2 == 0 else COUNSELOR, "client" if i % 2 == 0 else "counselor", labeled)
        for i in range(turns)
    ]
    return {"id": did, "utterances": utts}


def write(path, rows):
    with open(path, "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


def main():
    out = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "sample")
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(20240601)
    write(out / "validation.jsonl", [dialogue(rng, f"val-{i:03d}", True) for i in range(24)])
    write(out / "train.jsonl", [dialogue(rng, f"train-{i:03d}", True) for i in range(16)])
    write(out / "test.jsonl", [dialogue(rng, f"test-{i:03d}", True) for i in range(16)])
    write(out / "unlabeled.jsonl", [dialogue(rng, f"synth-{i:03d}", False) for i in range(8)])
    history = [utterance(rng, CLIENT, "client", False)]
    (out / "history.txt").write_text(
        "client: " + "".join(s["text"] for s in history[0]["sentences"]) + "\n", encoding="utf-8"
    )


if __name__ == "__main__":
    main()
