"""Counter-based random streams keyed by (master seed, frame, arm, purpose).

Every stochastic draw in the package goes through a Philox generator whose
128-bit key is a fixed function of the run's master seed and of what the
stream is for.  Frames are therefore reproducible and mutually independent
regardless of batching, worker count or evaluation order.
"""

from __future__ import annotations

import numpy as np

ARM_SIGNAL = 0
ARM_IDLER = 1
ARM_SHARED = 2

PURPOSE_VACUUM = 0
PURPOSE_PAIRS = 1
PURPOSE_DETECT = 2
PURPOSE_BACKGROUND = 3
PURPOSE_SPECKLE = 4

_MASK64 = (1 << 64) - 1


def keyed_generator(
    master_seed: int, frame_index: int = 0, arm: int = ARM_SHARED, purpose: int = 0
) -> np.random.Generator:
    """Philox stream for one (seed, frame, arm, purpose) tuple."""
    if frame_index < 0:
        raise ValueError("frame_index must be non-negative")
    key = (
        master_seed & _MASK64,
        ((frame_index & 0xFFFFFFFF) << 16) | ((arm & 0xFF) << 8) | (purpose & 0xFF),
    )
    return np.random.Generator(np.random.Philox(key=key))
