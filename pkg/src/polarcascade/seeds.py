"""Derived seeds: every random stream comes from one base seed and a role name."""

import zlib

import numpy as np


def derive_seed(base: int, role: str, index: int = 0) -> int:
    """Deterministic 63-bit seed for stream ``role`` (and ``index``) under ``base``.

    Computed as the first word of ``SeedSequence([base, crc32(role), index])``.
    """
    ss = np.random.SeedSequence([int(base) & 0xFFFFFFFFFFFFFFFF,
                                 zlib.crc32(role.encode()), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))
