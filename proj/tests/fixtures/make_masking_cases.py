#!/usr/bin/env python3
"""Regenerates masking_cases.jsonl from mini_embeddings.txt.

Mirrors the candidate rules of mask_most_similar: tokens are whitespace
chunks with edge punctuation stripped; a candidate must differ from the unk
token (case-insensitive), not be punctuation-only, not be a stopword, and be
in the vocabulary. Highest cosine wins, strict > keeps the earliest
occurrence. Vectors are float32, accumulation is float64, matching the C++.
"""

import json
import math
import string
import struct
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
UNK = "<unk>"

CASES = [
    ("I was thrilled about the tournament win.", "joy"),
    ("She was delighted and happy at the celebration.", "joy"),
    ("Gleeful and glad faces everywhere.", "joy"),
    ("My friend brought coffee this morning.", "joy"),
    ("The weather in the city turned cold.", "joy"),
    ("He was furious, shouting at everyone.", "anger"),
    ("Outraged crowds filled the city.", "anger"),
    ("The shouting next door would not stop.", "anger"),
    ("I was terrified of the darkness.", "fear"),
    ("Scared, she locked every window.", "fear"),
    ("The darkness of the forest scared him.", "fear"),
    ("The lonely darkness pressed in.", "fear"),
    ("Grieving relatives wept at the funeral.", "sadness"),
    ("He wept alone in the city.", "sadness"),
    ("A lonely letter arrived yesterday.", "sadness"),
    ("The celebration made him furious.", "anger"),
    ("Happy faces at the funeral looked wrong.", "sadness"),
    ("The <unk> was thrilled too.", "joy"),
    ("Quantum turbines hum softly.", "joy"),
    ("Thrilled, thrilled beyond words, she was thrilled.", "joy"),
]


def f32(x):
    return struct.unpack("f", struct.pack("f", float(x)))[0]


def load_vectors(path):
    vectors = {}
    with open(path) as fh:
        lines = fh.read().splitlines()
    start = 1 if len(lines[0].split()) == 2 else 0
    for line in lines[start:]:
        parts = line.split()
        if not parts:
            continue
        vectors[parts[0].lower()] = [f32(v) for v in parts[1:]]
    return vectors


def load_stopwords(path):
    words = set()
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                words.add(line.lower())
    return words


def tokenize_with_spans(text):
    spans, i, n = [], 0, len(text)
    while i < n:
        while i < n and text[i].isspace():
            i += 1
        if i >= n:
            break
        j = i
        while j < n and not text[j].isspace():
            j += 1
        b, e = i, j
        while b < e and text[b] in string.punctuation:
            b += 1
        while e > b and text[e - 1] in string.punctuation:
            e -= 1
        if e > b:
            spans.append((text[b:e], b, e))
        i = j
    return spans


def cosine(a, b):
    dot = num_a = num_b = 0.0
    for x, y in zip(a, b):
        dot += x * y
        num_a += x * x
        num_b += y * y
    if num_a == 0.0 or num_b == 0.0:
        return 0.0
    return dot / (math.sqrt(num_a) * math.sqrt(num_b))


def mask(text, class_name, vectors, stopwords):
    class_vec = vectors[class_name]
    best = None
    best_sim = 0.0
    for token, b, e in tokenize_with_spans(text):
        lower = token.lower()
        if lower == UNK:
            continue
        if all(c in string.punctuation for c in lower):
            continue
        if lower in stopwords:
            continue
        if lower not in vectors:
            continue
        sim = cosine(vectors[lower], class_vec)
        if best is None or sim > best_sim:
            best_sim = sim
            best = (token, b, e)
    if best is None:
        return {
            "text": text,
            "class_name": class_name,
            "masked": False,
            "token": "",
            "span_begin": 0,
            "span_end": 0,
            "similarity": 0.0,
            "masked_text": text,
        }
    token, b, e = best
    return {
        "text": text,
        "class_name": class_name,
        "masked": True,
        "token": token,
        "span_begin": b,
        "span_end": e,
        "similarity": best_sim,
        "masked_text": text[:b] + UNK + text[e:],
    }


def main():
    vectors = load_vectors(HERE / "mini_embeddings.txt")
    stopwords = load_stopwords(HERE / ".." / ".." / "data" / "stopwords.txt")
    out = HERE / "masking_cases.jsonl"
    with open(out, "w") as fh:
        for text, class_name in CASES:
            fh.write(json.dumps(mask(text, class_name, vectors, stopwords)))
            fh.write("\n")
    print(f"wrote {len(CASES)} cases to {out}", file=sys.stderr)


if __name__ == "__main__":
    main()
