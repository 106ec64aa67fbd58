"""Seeded synthetic 7-class corpus with planted keyword families.

Each class is marked by three disjoint keyword families; every generated
statement contains one keyword from each family plus shared noise words, so
a bag-of-words nearest-centroid classifier can verify separability before
the full pipeline is held to its accuracy bar.
"""

from __future__ import annotations

import json
import random
from collections import Counter

CLASS_FAMILIES: dict[str, list[list[str]]] = {
    "Normal": [
        ["calm", "steady", "settled", "fine"],
        ["balanced", "content", "composed", "okay"],
        ["relaxed", "grounded", "comfortable", "easygoing"],
    ],
    "Depression": [
        ["hopeless", "empty", "numb", "worthless"],
        ["drained", "heavy", "weary", "flat"],
        ["gloomy", "low", "joyless", "dark"],
    ],
    "Suicidal": [
        ["disappear", "goodbye", "final", "ending"],
        ["burden", "pointless", "trapped", "unbearable"],
        ["escape", "gone", "farewell", "lastday"],
    ],
    "Anxiety": [
        ["worried", "nervous", "uneasy", "afraid"],
        ["panic", "dread", "racing", "shaky"],
        ["restless", "tense", "jittery", "wired"],
    ],
    "Bipolar": [
        ["soaring", "crashing", "swinging", "spiraling"],
        ["manic", "unstoppable", "electric", "euphoric"],
        ["plummet", "extreme", "rollercoaster", "surge"],
    ],
    "Stress": [
        ["pressure", "deadline", "overloaded", "swamped"],
        ["strained", "stretched", "frazzled", "crushed"],
        ["overwhelmed", "burnout", "grinding", "piled"],
    ],
    "Personality disorder": [
        ["unstable", "shifting", "fractured", "splintered"],
        ["abandoned", "clinging", "erratic", "volatile"],
        ["impulsive", "stormy", "hollow", "chameleon"],
    ],
}

NOISE_WORDS = [
    "today", "practice", "session", "coach", "team", "game", "before",
    "after", "during", "training", "felt", "really", "very", "quite",
    "about", "morning", "evening", "week", "body", "mind", "again",
    "still", "always", "sometimes", "match", "race", "warmup", "recovery",
]

OPENERS = ["i feel", "i am", "lately i feel", "today i felt", "i have been"]


def make_corpus(size: int = 2000, seed: int = 20240501) -> list[tuple[str, str]]:
    """Generate (statement, label) pairs, classes interleaved round-robin.

    Two draws per keyword family plus a few extras keep the class signal
    strong against the shared noise words.
    """
    rng = random.Random(seed)
    names = list(CLASS_FAMILIES)
    corpus: list[tuple[str, str]] = []
    for i in range(size):
        label = names[i % len(names)]
        families = CLASS_FAMILIES[label]
        words = []
        for family in families:
            words.append(rng.choice(family))
            words.append(rng.choice(family))
        for _ in range(rng.randrange(1, 4)):
            words.append(rng.choice(rng.choice(families)))
        for _ in range(rng.randrange(3, 6)):
            words.append(rng.choice(NOISE_WORDS))
        rng.shuffle(words)
        statement = f"{rng.choice(OPENERS)} {' '.join(words)}."
        corpus.append((statement, label))
    return corpus


def corpus_to_jsonl(corpus: list[tuple[str, str]]) -> str:
    return "".join(
        json.dumps({"statement": text, "status": label}) + "\n"
        for text, label in corpus
    )


def nearest_centroid_accuracy(
    train: list[tuple[str, str]], test: list[tuple[str, str]]
) -> float:
    """Bag-of-words nearest-centroid oracle, independent of the pipeline."""
    vocab = sorted({w for text, _ in train for w in text.lower().split()})
    index = {w: i for i, w in enumerate(vocab)}

    def vectorize(text: str) -> list[float]:
        counts = Counter(w for w in text.lower().split() if w in index)
        vec = [0.0] * len(index)
        for word, count in counts.items():
            vec[index[word]] = float(count)
        return vec

    sums: dict[str, list[float]] = {}
    counts: dict[str, int] = {}
    for text, label in train:
        vec = vectorize(text)
        if label not in sums:
            sums[label] = [0.0] * len(index)
            counts[label] = 0
        sums[label] = [a + b for a, b in zip(sums[label], vec)]
        counts[label] += 1
    centroids = {
        label: [v / counts[label] for v in total] for label, total in sums.items()
    }

    def classify(text: str) -> str:
        vec = vectorize(text)
        best_label, best_dist = None, float("inf")
        for label in sorted(centroids):
            centroid = centroids[label]
            dist = sum((a - b) ** 2 for a, b in zip(vec, centroid))
            if dist < best_dist:
                best_label, best_dist = label, dist
        return best_label

    hits = sum(1 for text, label in test if classify(text) == label)
    return hits / len(test)
