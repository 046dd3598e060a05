"""Impairment model between the simulated eNodeB and the decoders.

Occupied CCEs carry unit-amplitude antipodal symbols (bit 0 -> +1) plus
white Gaussian noise of variance sigma^2 = 10^(-snr_db/10). Empty CCEs are
pure noise, or with some probability a neighbor-sector interferer: random
bits at relative power rho (descrambled foreign PDCCH looks like random
chips, so interference carries no decodable structure).

snr_db = inf gives the noiseless channel: transmitted signs exactly,
all-zero empty CCEs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .grid import PdcchSubframe


@dataclass(frozen=True)
class ChannelConfig:
    snr_db: float = 12.0
    per_ue_snr: bool = False
    interference_prob: float = 0.0
    interference_rho: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.interference_prob <= 1.0:
            raise ValueError("interference_prob must lie in [0, 1]")
        if self.interference_rho < 0.0:
            raise ValueError("interference_rho must be non-negative")

    @property
    def noiseless(self) -> bool:
        return math.isinf(self.snr_db)

    @property
    def noise_var(self) -> float:
        return 0.0 if self.noiseless else 10.0 ** (-self.snr_db / 10.0)


# monitor-side signal quality presets; values are calibrated so that the
# noiseless -> poor sweep spans the regimes where re-encoding validation
# degrades (see the channel calibration notes in the README)
PRESETS = {
    "noiseless": ChannelConfig(snr_db=math.inf),
    "good": ChannelConfig(snr_db=12.0),
    "fair": ChannelConfig(snr_db=8.0),
    "poor": ChannelConfig(snr_db=5.0),
}


def apply_channel(sf: PdcchSubframe, cfg: ChannelConfig,
                  rng: np.random.Generator | None = None) -> PdcchSubframe:
    """Return a received copy of the subframe.

    ``rng`` carries noise state across a stream of subframes; omit it to
    draw from a generator freshly seeded with cfg.seed (deterministic for
    a single subframe).
    """
    if sf.occupied is None:
        raise ValueError("channel input needs simulator-side occupancy flags")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    n_cce, width = sf.cces.shape
    occupied = sf.occupied.astype(bool)

    if cfg.noiseless:
        out = np.where(occupied[:, None], sf.cces, 0.0)
        return replace(sf, cces=out)

    sigma = np.sqrt(cfg.noise_var)
    noise = rng.normal(0.0, 1.0, (n_cce, width))
    if cfg.per_ue_snr and sf.cce_snr_db is not None:
        # noise level per CCE follows the addressed UE's own link quality
        per_cce_var = np.where(
            np.isnan(sf.cce_snr_db), cfg.noise_var,
            10.0 ** (-sf.cce_snr_db / 10.0))
        noise *= np.sqrt(per_cce_var)[:, None]
    else:
        noise *= sigma

    out = np.where(occupied[:, None], sf.cces, 0.0) + noise
    if cfg.interference_prob > 0.0:
        empty_idx = np.flatnonzero(~occupied)
        hit = empty_idx[rng.random(empty_idx.size) < cfg.interference_prob]
        if hit.size:
            chips = 1.0 - 2.0 * rng.integers(0, 2, (hit.size, width))
            out[hit] += np.sqrt(cfg.interference_rho) * chips
    return replace(sf, cces=out)
