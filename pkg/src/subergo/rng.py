"""
Counter-based random streams.

Every random number is a pure function of ``(seed, tag, trajectory, counter)``
computed with Philox4x32-10.  The 64-bit seed is the Philox key; the 128-bit
counter block is laid out as

    word 0, 1 : draw counter (64 bit)
    word 2    : trajectory index (32 bit)
    word 3    : stream tag (32 bit), separating e.g. pilot runs from main runs

so trajectory ``i`` of a batch sees exactly the numbers it would see when
simulated alone, whatever the batch size, chunking or thread count.
"""

import numpy as np

RNG_ID = "philox4x32-10/key=seed/ctr=(draw,traj,tag)"

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)

# stream tags in use across the package
TAG_MAIN = 0
TAG_PILOT = 1
TAG_JUMPS = 2
TAG_AUX = 3


def philox4x32(counter, key, rounds=10):
    """Philox4x32 block function.

    counter: uint32-valued array of shape (..., 4); key: pair of uint32.
    Returns a uint32 array of the same shape as ``counter``.
    """
    ctr = np.asarray(counter, dtype=np.uint64)
    c0, c1, c2, c3 = (ctr[..., j].copy() for j in range(4))
    k0 = int(key[0]) & 0xFFFFFFFF
    k1 = int(key[1]) & 0xFFFFFFFF
    for r in range(rounds):
        if r:
            k0 = (k0 + _W0) & 0xFFFFFFFF
            k1 = (k1 + _W1) & 0xFFFFFFFF
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0, lo0 = p0 >> _SHIFT32, p0 & _MASK32
        hi1, lo1 = p1 >> _SHIFT32, p1 & _MASK32
        c0 = hi1 ^ c1 ^ np.uint64(k0)
        c1 = lo1
        c2 = hi0 ^ c3 ^ np.uint64(k1)
        c3 = lo0
    return np.stack([c0, c1, c2, c3], axis=-1).astype(np.uint32)


def _key(seed):
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be in [0, 2**64), got {seed}")
    return seed & 0xFFFFFFFF, seed >> 32


def uniforms(seed, trajectories, counters, tag=TAG_MAIN):
    """Uniform doubles in (0, 1) for every (trajectory, counter) pair.

    ``trajectories`` and ``counters`` broadcast against each other; each
    counter yields two 53-bit doubles, so the result has one extra trailing
    axis of length 2.
    """
    traj = np.asarray(trajectories, dtype=np.uint64)
    cnt = np.asarray(counters, dtype=np.uint64)
    traj, cnt = np.broadcast_arrays(traj, cnt)
    block = np.empty(traj.shape + (4,), dtype=np.uint64)
    block[..., 0] = cnt & _MASK32
    block[..., 1] = cnt >> _SHIFT32
    block[..., 2] = traj & _MASK32
    block[..., 3] = np.uint64(tag)
    out = philox4x32(block, _key(seed)).astype(np.uint64)
    a = (out[..., 0::2] >> np.uint64(5)).astype(np.float64)
    b = (out[..., 1::2] >> np.uint64(6)).astype(np.float64)
    u = (a * 67108864.0 + b + 0.5) / 9007199254740992.0
    return u


def normals(seed, trajectories, counters, tag=TAG_MAIN):
    """Two standard normals per (trajectory, counter) via Box-Muller."""
    u = uniforms(seed, trajectories, counters, tag)
    rad = np.sqrt(-2.0 * np.log(u[..., 0]))
    ang = 2.0 * np.pi * u[..., 1]
    return np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=-1)


class Stream:
    """Sequential view of one trajectory's counter stream.

    Draws are buffered in blocks so per-event simulation loops do not pay a
    Philox call per number.
    """

    def __init__(self, seed, trajectory=0, tag=TAG_MAIN, block=32):
        self.seed = int(seed)
        self.trajectory = int(trajectory)
        self.tag = int(tag)
        self.block = int(block)
        self._next_counter = 0
        self._buf = np.empty(0)
        self._pos = 0

    @classmethod
    def batch(cls, seed, trajectories, tag=TAG_MAIN, block=16):
        """One stream per trajectory with the first block drawn in a single call."""
        traj = np.asarray(trajectories, dtype=np.uint64)
        cnt = np.arange(block, dtype=np.uint64)
        first = uniforms(seed, traj[:, None], cnt[None, :], tag).reshape(traj.size, -1)
        streams = []
        for i, row in zip(traj, first):
            s = cls(seed, int(i), tag, block)
            s._buf = row
            s._next_counter = block
            streams.append(s)
        return streams

    def _refill(self):
        cnt = np.arange(self._next_counter, self._next_counter + self.block, dtype=np.uint64)
        self._buf = uniforms(self.seed, self.trajectory, cnt, self.tag).ravel()
        self._next_counter += self.block
        self._pos = 0

    def uniform(self):
        if self._pos >= self._buf.size:
            self._refill()
        u = self._buf[self._pos]
        self._pos += 1
        return float(u)

    def exponential(self, rate):
        return -np.log(self.uniform()) / rate
