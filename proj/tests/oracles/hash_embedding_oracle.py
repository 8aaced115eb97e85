#!/usr/bin/env python3
"""Independent reimplementation of the stable hash and the local hashing
embedder. Prints the values frozen into tests/unit/test_embedding.cpp and
tests/unit/test_text.cpp."""
import math
import string
import struct

MASK = (1 << 64) - 1
FNV_OFFSET = 0xcbf29ce484222325
FNV_PRIME = 0x100000001b3


def splitmix_finalize(h):
    h = (h + 0x9e3779b97f4a7c15) & MASK
    h = ((h ^ (h >> 30)) * 0xbf58476d1ce4e5b9) & MASK
    h = ((h ^ (h >> 27)) * 0x94d049bb133111eb) & MASK
    return h ^ (h >> 31)


def stable_hash(data: bytes, seed=0):
    h = FNV_OFFSET ^ seed
    for b in data:
        h ^= b
        h = (h * FNV_PRIME) & MASK
    return splitmix_finalize(h)


ASCII_PUNCT = set(string.punctuation)


def features(text):
    raw = [w.encode().lower().decode() if w.isascii() else
           "".join(c.lower() if c.isascii() else c for c in w) for w in text.split()]
    out = []
    for w in raw:
        s = w.strip(string.punctuation)
        if s:
            out.append(s)
    return out if out else raw


def embed(text, dims=256):
    acc = [0.0] * dims
    for f in features(text):
        b = f.encode()
        slot = stable_hash(b, 0x736c6f74) % dims
        sign = -1.0 if stable_hash(b, 0x7369676e) >> 63 else 1.0
        acc[slot] += sign
    n = math.sqrt(sum(v * v for v in acc))
    return [struct.unpack("f", struct.pack("f", v / n))[0] for v in acc]


def main():
    for s in [b"", b"a", b"retina", b"glaucoma suspect"]:
        print(f'{{"{s.decode()}", 0, 0x{stable_hash(s):016x}ULL}},')
    print(f'{{"retina", 7, 0x{stable_hash(b"retina", 7):016x}ULL}},')
    # Plain FNV-1a of "a" is a published test vector.
    h = FNV_OFFSET
    h = ((h ^ ord("a")) * FNV_PRIME) & MASK
    print(f"fnv1a('a') = 0x{h:016x}")
    text = "Anti-VEGF injections, e.g. ranibizumab, restore vision (sometimes)."
    print("features:", features(text))
    v = embed(text)
    nz = [(i, x) for i, x in enumerate(v) if x != 0.0]
    print(f"nonzero {len(nz)}")
    for i, x in nz:
        print(f"{{{i}, {x!r}f}},")
    print("punct-only features:", features("-- ... !!"))
    a = embed("intraocular pressure after LASIK")
    b = embed("LASIK raises intraocular pressure")
    dot = sum(x * y for x, y in zip(a, b))
    na = math.sqrt(sum(x * x for x in a))
    nb = math.sqrt(sum(x * x for x in b))
    print(f"cosine pair {dot / (na * nb)!r}")


if __name__ == "__main__":
    main()
