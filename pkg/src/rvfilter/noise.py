"""Correlated impulsive noise.

Each pixel is left alone with probability ``1 - phi``.  Otherwise exactly one
of these happens: channel 1, 2 or 3 alone is replaced (probabilities
``phi1*phi``, ``phi2*phi``, ``phi3*phi``) or all three channels are replaced
(``(1 - phi1 - phi2 - phi3) * phi``).  Replacement values are uniform on
0..255.

Draw order, which fixes the output for a given seed:

1. one 64-bit PCG64 word per pixel in raster order selects the branch,
   using its top 53 bits as a uniform in [0, 1);
2. then one word per replaced channel, in raster order and channel order
   within a pixel; its top 8 bits are the new value.

Only raw generator words are used, so the stream does not depend on how a
numpy release implements its distribution methods.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .imagecore import as_image

CLEAN, CH1, CH2, CH3, ALL = range(5)
LABELS = ("clean", "ch1", "ch2", "ch3", "all")
PRNG_ID = "PCG64 raw 64-bit words (top 53 bits -> uniform, top 8 bits -> impulse value)"

# label -> which channels get replaced
_CHANNELS = np.array(
    [
        [False, False, False],
        [True, False, False],
        [False, True, False],
        [False, False, True],
        [True, True, True],
    ]
)
# label colors for saving a mask as an RGB image
_MASK_COLORS = np.array(
    [[0, 0, 0], [255, 0, 0], [0, 255, 0], [0, 0, 255], [255, 255, 255]], dtype=np.uint8
)


@dataclass(frozen=True)
class NoiseConfig:
    phi: float
    phi1: float = 0.25
    phi2: float = 0.25
    phi3: float = 0.25
    seed: int = 0

    def __post_init__(self):
        for name in ("phi", "phi1", "phi2", "phi3"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"--{name} must lie in [0, 1], got {value}")
        if self.phi1 + self.phi2 + self.phi3 > 1.0 + 1e-12:
            raise ConfigError(
                f"--phi1 + --phi2 + --phi3 must not exceed 1, got {self.phi1 + self.phi2 + self.phi3:g}"
            )
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError(f"--seed must be a 64-bit unsigned integer, got {self.seed}")

    def branch_probabilities(self) -> np.ndarray:
        """Probabilities of clean, ch1, ch2, ch3 and all-channel corruption."""
        rest = max(0.0, 1.0 - (self.phi1 + self.phi2 + self.phi3))
        return np.array(
            [1.0 - self.phi, self.phi1 * self.phi, self.phi2 * self.phi, self.phi3 * self.phi, rest * self.phi]
        )


def derive_seed(base: int, image_index: int, level: float) -> int:
    """Per-(image, noise level) seed; independent of the other corpus images."""
    ss = np.random.SeedSequence([int(base), int(image_index), int(round(level * 1_000_000))])
    return int(ss.generate_state(1, np.uint64)[0])


def corrupt(img: np.ndarray, cfg: NoiseConfig) -> tuple[np.ndarray, np.ndarray]:
    """Return the noisy image and a per-pixel label array (values of ``LABELS``)."""
    img = as_image(img)
    m, n, _ = img.shape
    gen = np.random.PCG64(int(cfg.seed))
    words = gen.random_raw(m * n)
    u = (words >> np.uint64(11)).astype(np.float64) * 2.0**-53
    cum = np.cumsum(cfg.branch_probabilities())[:4]
    # side='right' skips zero-width branches
    labels = np.searchsorted(cum, u, side="right").astype(np.uint8)

    replace = _CHANNELS[labels]
    noisy = img.reshape(-1, 3).copy()
    count = int(replace.sum())
    if count:
        values = (gen.random_raw(count) >> np.uint64(56)).astype(np.uint8)
        noisy[replace] = values
    return noisy.reshape(m, n, 3), labels.reshape(m, n)


def mask_to_image(labels: np.ndarray) -> np.ndarray:
    """Visualize labels: replaced channels are set to 255."""
    return _MASK_COLORS[labels]
