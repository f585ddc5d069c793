"""Counter-based uniform streams keyed by ``(seed, trial_index)``.

Every trial owns an independent Philox4x64-10 stream: the 128-bit key is
``(seed, 0)`` and the 256-bit counter is ``(block, trial_index, 0, 0)``.
Because a draw is a pure function of its coordinates, batches can be split
across workers in any order and still reproduce the same numbers.

The scalar path (:class:`TrialStream`) delegates to :class:`numpy.random.Philox`.
The batch path (:func:`first_uniforms`) evaluates the same bijection over whole
arrays of trial indices, which numpy does not expose.
"""

from __future__ import annotations

import numpy as np

__all__ = ["TrialStream", "first_uniforms", "philox4x64", "U64_MAX"]

U64_MAX = (1 << 64) - 1

_M0 = np.uint64(0xD2E7470EE14C6C93)
_M1 = np.uint64(0xCA5A826395121157)
_W0 = np.uint64(0x9E3779B97F4A7C15)
_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_ROUNDS = 10


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= U64_MAX:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def _mulhilo(a: np.uint64, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # 64x64 -> 128 bit product from 32-bit limbs; numpy wraps uint64 silently.
    a_lo, a_hi = a & _LO32, a >> _S32
    b_lo, b_hi = b & _LO32, b >> _S32
    ll = a_lo * b_lo
    lh = a_lo * b_hi
    hl = a_hi * b_lo
    hh = a_hi * b_hi
    mid = (ll >> _S32) + (lh & _LO32) + (hl & _LO32)
    hi = hh + (lh >> _S32) + (hl >> _S32) + (mid >> _S32)
    return hi, a * b


def philox4x64(counter, key) -> tuple[np.ndarray, ...]:
    """Apply the 10-round Philox4x64 bijection elementwise.

    ``counter`` is a sequence of four uint64 arrays (or scalars) and ``key``
    a pair of uint64 scalars. Returns the four output words.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) for c in counter)
    k0, k1 = np.uint64(key[0]), np.uint64(key[1])
    with np.errstate(over="ignore"):
        for r in range(_ROUNDS):
            if r:
                k0 = k0 + _W0
                k1 = k1 + _W1
            hi0, lo0 = _mulhilo(_M0, c0)
            hi1, lo1 = _mulhilo(_M1, c2)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


def _to_unit(words: np.ndarray) -> np.ndarray:
    # Same 53-bit mapping numpy.random.Generator.random() uses.
    return (words >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def first_uniforms(seed: int, trial_indices) -> np.ndarray:
    """First uniform draw of each trial stream, vectorized over trial indices.

    Bit-identical to ``TrialStream(seed, i).uniform()`` for every ``i``.
    """
    seed = _check_seed(seed)
    idx = np.asarray(trial_indices, dtype=np.uint64)
    zeros = np.zeros_like(idx)
    # numpy's Philox bumps the counter before producing a block.
    word0, _, _, _ = philox4x64((zeros + np.uint64(1), idx, zeros, zeros), (seed, 0))
    return _to_unit(word0)


class TrialStream:
    """Uniform stream for one trial; tracks how many draws were consumed."""

    def __init__(self, seed: int, trial_index: int):
        if trial_index < 0:
            raise ValueError("trial_index must be non-negative")
        self.seed = _check_seed(seed)
        self.trial_index = int(trial_index)
        bitgen = np.random.Philox(
            counter=np.array([0, self.trial_index, 0, 0], dtype=np.uint64),
            key=np.array([self.seed, 0], dtype=np.uint64),
        )
        self._gen = np.random.Generator(bitgen)
        self.position = 0

    def uniform(self) -> float:
        self.position += 1
        return float(self._gen.random())

    def __repr__(self):
        return f"TrialStream(seed={self.seed}, trial_index={self.trial_index}, position={self.position})"
