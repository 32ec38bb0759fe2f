"""Freeze reference similarity values for 100 random string pairs.

Requires `jellyfish`. Run from this directory:
    python3 gen_similarity_oracle.py > similarity_oracle.tsv
"""
import difflib
import random

import jellyfish

rng = random.Random(20240611)
alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZ_ABEINORST"
words = ["NUMBER", "NO", "ID", "DATE", "BIRTH", "PHONE", "CARD", "NAME", "EMAIL", "ADDRESS", "ACCOUNT", "TAX"]


def rand_str():
    if rng.random() < 0.5:
        return "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 20)))
    return "_".join(rng.choice(words) for _ in range(rng.randint(1, 3)))


print("# a\tb\tjaro_winkler\tratcliff_obershelp")
for _ in range(100):
    a, b = rand_str(), rand_str()
    jw = jellyfish.jaro_winkler_similarity(a, b)
    ro = difflib.SequenceMatcher(None, a, b).ratio()
    print(f"{a}\t{b}\t{jw!r}\t{ro!r}")
