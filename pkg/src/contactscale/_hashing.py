"""Counter-based stream derivation shared by both kernel backends.

Every Poisson lane owns an independent stream keyed by
``(seed, replica, lane_key)``.  Its ``k``-th uniform is
``mix64(stream + (k + 1) * GOLDEN)`` -- a splitmix64 sequence -- so the
whole lane is a pure function of the key and windows can grow without
disturbing lanes that already exist.

The compiled kernel reimplements these exact operations; the pure-Python
versions here are the reference.
"""

import math

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_SEED_SALT = 0x6A09E667F3BCC909
_SITE_SALT = 0x243F6A8885A308D3
_LANE_MULT = 0xD1B54A32D192ED03
_TWO_M52 = 2.0**-52


def mix64(z: int) -> int:
    z &= MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return z ^ (z >> 31)


def zigzag(c: int) -> int:
    return (c << 1) if c >= 0 else ((-c << 1) - 1)


def site_key(coords) -> int:
    h = _SITE_SALT
    for c in coords:
        h = mix64(h ^ ((zigzag(int(c)) + GOLDEN) & MASK))
    return h


def lane_key(skey: int, j: int) -> int:
    return mix64(skey ^ (((j + 1) * _LANE_MULT) & MASK))


def replica_key(seed: int, replica: int) -> int:
    s = mix64((seed & MASK) ^ _SEED_SALT)
    return mix64((s + (replica + 1) * GOLDEN) & MASK)


def stream_key(seed: int, replica: int, lkey: int) -> int:
    return mix64(replica_key(seed, replica) ^ lkey)


def uniform(stream: int, k: int) -> float:
    """``k``-th uniform of a stream, strictly inside (0, 1)."""
    x = mix64((stream + (k + 1) * GOLDEN) & MASK)
    return ((x >> 12) + 0.5) * _TWO_M52


def spacing(stream: int, k: int, rate: float) -> float:
    return -math.log(uniform(stream, k)) / rate
