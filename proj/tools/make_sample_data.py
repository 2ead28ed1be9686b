#!/usr/bin/env python3
# Copyright 2026 The tokalign Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerates the bundled sample corpus and the two sample vocabularies.

The corpus is synthetic pseudo-English (plus some non-ASCII words), one
document per line. Both vocabularies contain all 256 byte tokens, so greedy
tokenization never fails; they differ in which multi-byte pieces they add.
"""

import argparse
import collections
import json
import pathlib
import random

SYLLABLES = ["ka", "to", "re", "mi", "lan", "sor", "vel", "tha", "qui", "ne", "dor", "ing", "ex", "pla",
             "ur", "sta", "bri", "on", "ces", "al", "gro", "wen", "fy", "zu", "ter", "ma", "ion", "ble"]
EXTRA = ["café", "über", "naïve", "東京", "données", "søster", "привет", "λόγος"]


def bytes_to_unicode():
    bs = list(range(ord("!"), ord("~") + 1)) + list(range(ord("¡"), ord("¬") + 1)) + list(range(ord("®"), ord("ÿ") + 1))
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return {b: chr(c) for b, c in zip(bs, cs)}


def encode_key(token: bytes, table) -> str:
    return "".join(table[b] for b in token)


def make_words(rng, count):
    words = set()
    while len(words) < count:
        words.add("".join(rng.choice(SYLLABLES) for _ in range(rng.randint(1, 4))))
    words = sorted(words)
    rng.shuffle(words)
    return words + EXTRA


def zipf_pick(rng, items, cum):
    return items[min(len(items) - 1, __import__("bisect").bisect(cum, rng.random() * cum[-1]))]


def make_corpus(rng, words, target_bytes):
    cum, acc = [], 0.0
    for r in range(len(words)):
        acc += 1.0 / (r + 1)
        cum.append(acc)
    docs, size = [], 0
    while size < target_bytes:
        sentences = []
        for _ in range(rng.randint(2, 12)):
            n = rng.randint(4, 18)
            s = " ".join(zipf_pick(rng, words, cum) for _ in range(n))
            sentences.append(s[0].upper() + s[1:] + rng.choice([".", ".", ".", "?", "!"]))
        doc = " ".join(sentences)
        docs.append(doc)
        size += len(doc.encode("utf-8")) + 1
    return docs


def make_vocab(pieces, table):
    tokens = [bytes([b]) for b in range(256)]
    seen = set(tokens)
    for p in pieces:
        b = p.encode("utf-8")
        if b not in seen:
            seen.add(b)
            tokens.append(b)
    return {encode_key(t, table): i for i, t in enumerate(tokens)}


def write_vocab(path, vocab):
    items = sorted(vocab.items(), key=lambda kv: kv[1])
    lines = ",\n".join("  " + json.dumps(k, ensure_ascii=False) + ": " + str(v) for k, v in items)
    path.write_text("{\n" + lines + "\n}\n", encoding="utf-8")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "tests" / "data"))
    ap.add_argument("--seed", type=int, default=20240611)
    ap.add_argument("--bytes", type=int, default=1 << 20)
    args = ap.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(args.seed)

    words = make_words(rng, 3000)
    docs = make_corpus(rng, words, args.bytes)
    (out / "sample_corpus.txt").write_text("\n".join(docs) + "\n", encoding="utf-8")

    counts = collections.Counter(w.strip(".?!").lower() for d in docs for w in d.split(" "))
    frequent = [w for w, _ in counts.most_common()]
    table = bytes_to_unicode()
    # Source-like vocabulary: space-prefixed words. Target-like: bare words and syllables.
    write_vocab(out / "sample_vocab.json", make_vocab([" " + w for w in frequent[:1500]] + frequent[:200], table))
    write_vocab(out / "sample_vocab_alt.json", make_vocab(SYLLABLES + frequent[:1000] + [". ", ", "], table))


if __name__ == "__main__":
    main()
