#!/usr/bin/env python3
"""Regenerates data/sample_captions.jsonl and data/sample_images.emb (deterministic)."""
import json
import random
import sys
from pathlib import Path

SUBJECTS = ["a black cat", "two dogs", "a young woman", "an old man", "a red bus", "a small boat",
            "a group of children", "a brown horse", "a man in a suit", "a girl with a kite",
            "a white bird", "three cyclists", "a chef", "a street vendor", "a toddler",
            "a skateboarder", "a fisherman", "a yellow taxi", "a farmer", "a pair of swans"]
ACTIONS = ["sitting on", "walking along", "standing near", "resting beside", "waiting at",
           "playing in", "looking at", "crossing", "running through", "parked beside"]
PLACES = ["a wooden bench", "the beach", "a busy street", "a quiet park", "the river bank",
          "a snowy field", "an old bridge", "the kitchen counter", "a market stall", "a stone wall"]
ADJ = ["sunny", "crowded", "quiet", "foggy", "colorful", "narrow", "windy", "calm"]
SUBJ_SYN = {"a black cat": ["a dark kitten", "a black feline"], "two dogs": ["a pair of dogs", "two puppies"],
            "a young woman": ["a girl", "a young lady"], "an old man": ["an elderly man", "a senior gentleman"]}
ACT_SYN = {"sitting on": ["perched on", "seated on"], "walking along": ["strolling along", "moving down"],
           "standing near": ["positioned close to", "waiting by"], "resting beside": ["lying next to", "relaxing by"],
           "waiting at": ["pausing at", "lingering at"], "playing in": ["having fun in", "romping in"],
           "looking at": ["gazing at", "watching"], "crossing": ["going across", "traversing"],
           "running through": ["dashing through", "racing across"], "parked beside": ["stopped next to", "left beside"]}


def main(out_dir: Path) -> None:
    rng = random.Random(20240607)
    lines = []
    for i in range(20):
        subject = SUBJECTS[i]
        place = PLACES[i % len(PLACES)]
        for c in range(5):
            action = ACTIONS[(i + c) % len(ACTIONS)]
            adj = rng.choice(ADJ)
            text = f"{subject.capitalize()} {action} {place} on a {adj} day"
            subj_alts = SUBJ_SYN.get(subject, [subject, subject.replace("a ", "one ", 1)])
            act_alts = ACT_SYN[action]
            extra = ["in the afternoon", "under a clear sky", "in soft light", "with people around",
                     "seen from a distance", "in the early morning"]
            syn = []
            for s in range(4):
                syn.append(f"{subj_alts[s % 2]} {act_alts[(s // 2) % 2]} {place.replace('a ', 'some ', 1)} "
                           f"{rng.choice(extra)}, the scene looks {rng.choice(ADJ)}")
            if (i * 5 + c) % 10 == 9:  # a few captions carry fewer synonyms
                syn = syn[: (i + c) % 4]
            lines.append(json.dumps({"caption_id": f"s{i:02d}_{c}", "image_id": f"im{i:02d}",
                                     "text": text, "synonyms": syn}))
    (out_dir / "sample_captions.jsonl").write_text("\n".join(lines) + "\n")

    regions, d = 4, 16
    rows = []
    for i in range(20):
        base = [max(0.0, rng.gauss(0, 1)) for _ in range(d)]
        for _ in range(regions):
            rows.append([round(max(0.0, b + rng.gauss(0, 0.5)), 6) for b in base])
    body = "\n".join(" ".join(repr(v) for v in r) for r in rows)
    (out_dir / "sample_images.emb").write_text(f"{len(rows)} {d}\n{body}\n")


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data")
