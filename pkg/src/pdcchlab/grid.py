"""CCE-level model of one PDCCH region and the blind-decoding search spaces.

A subframe's control region is a row-per-CCE grid of 72 soft values. The
UE-specific search space is derived from the RNTI and subframe number by
the standard multiplicative hash (Y recursion with multiplier 39827 modulo
65537); the common search space is a fixed six-location layout in the
first 16 CCEs. Everything here is pure and thread-safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np

CCE_BITS = 72

HASH_MULTIPLIER = 39827
HASH_MODULUS = 65537

UE_CANDIDATES = {1: 6, 2: 6, 4: 2, 8: 2}       # 16 locations total
COMMON_CANDIDATES = {4: 4, 8: 2}               # 6 locations total

# canonical common-space layout: 4 candidates at L=4 and 2 at L=8,
# packed into the first 16 CCEs
COMMON_LAYOUT = ((0, 4), (4, 4), (8, 4), (12, 4), (0, 8), (8, 8))


@dataclass(frozen=True, order=True)
class CandidateLocation:
    """One blind-decoding attempt: aligned start CCE plus aggregation level."""

    start_cce: int
    level: int

    def __post_init__(self):
        if self.level not in (1, 2, 4, 8):
            raise ValueError(f"invalid aggregation level {self.level}")
        if self.start_cce < 0 or self.start_cce % self.level:
            raise ValueError(
                f"start CCE {self.start_cce} not aligned to level {self.level}")

    @property
    def end_cce(self) -> int:
        return self.start_cce + self.level

    def fits(self, n_cce: int) -> bool:
        return self.end_cce <= n_cce

    def overlaps(self, other: "CandidateLocation") -> bool:
        return self.start_cce < other.end_cce and other.start_cce < self.end_cce

    def halves(self) -> tuple["CandidateLocation", "CandidateLocation"]:
        if self.level == 1:
            raise ValueError("a level-1 location has no halves")
        half = self.level // 2
        return (
            CandidateLocation(self.start_cce, half),
            CandidateLocation(self.start_cce + half, half),
        )


@dataclass
class PdcchSubframe:
    """Soft contents of one subframe's control region.

    ``cces`` has one row of 72 soft values per CCE. The simulator side also
    carries ground-truth occupancy flags and, optionally, the transmitted
    hard bits and per-CCE owner SNR; the decoder side sees soft values only.
    """

    ms: int
    n_cce: int
    cces: np.ndarray
    occupied: np.ndarray | None = None
    cce_snr_db: np.ndarray | None = None

    def __post_init__(self):
        if self.n_cce < 1:
            raise ValueError("subframe needs at least one CCE")
        if self.cces.shape != (self.n_cce, CCE_BITS):
            raise ValueError(
                f"cces must have shape ({self.n_cce}, {CCE_BITS}), "
                f"got {self.cces.shape}")

    @property
    def subframe(self) -> int:
        """Subframe number 0..9 within the radio frame."""
        return self.ms % 10

    def soft_block(self, loc: CandidateLocation) -> np.ndarray:
        if not loc.fits(self.n_cce):
            raise ValueError(f"{loc} does not fit in {self.n_cce} CCEs")
        return self.cces[loc.start_cce:loc.end_cce].ravel()

    def cce_powers(self) -> np.ndarray:
        """Mean squared soft value per CCE (1.0 for a clean occupied CCE)."""
        return np.mean(np.square(self.cces), axis=1)


@dataclass(frozen=True)
class SearchSpaceConfig:
    hash_multiplier: int = HASH_MULTIPLIER
    hash_modulus: int = HASH_MODULUS
    ue_candidates: Mapping[int, int] = None
    common_candidates: Mapping[int, int] = None

    def __post_init__(self):
        if self.ue_candidates is None:
            object.__setattr__(self, "ue_candidates", dict(UE_CANDIDATES))
        if self.common_candidates is None:
            object.__setattr__(self, "common_candidates", dict(COMMON_CANDIDATES))
        if sum(self.ue_candidates.values()) != 16:
            raise ValueError("UE-specific space must total 16 candidates")
        if sum(self.common_candidates.values()) != 6:
            raise ValueError("common space must total 6 candidates")


DEFAULT_SEARCH_SPACE = SearchSpaceConfig()


def _hash_seed(rnti: int, subframe: int, cfg: SearchSpaceConfig) -> int:
    """Iterate Y_k = (A * Y_{k-1}) mod D down to the requested subframe,
    with Y_{-1} equal to the RNTI."""
    y = rnti
    for _ in range(subframe + 1):
        y = (cfg.hash_multiplier * y) % cfg.hash_modulus
    return y


def ue_search_space(rnti: int, subframe: int, n_cce: int,
                    cfg: SearchSpaceConfig | None = None,
                    ) -> tuple[CandidateLocation, ...]:
    """The (up to) 16 UE-specific candidate locations for one subframe.

    Returned sorted by descending level then start; duplicates from small
    control regions collapse.
    """
    if cfg is None:
        return _ue_search_space_cached(rnti, subframe, n_cce)
    return _ue_search_space_impl(rnti, subframe, n_cce, cfg)


@lru_cache(maxsize=65536)
def _ue_search_space_cached(rnti: int, subframe: int, n_cce: int):
    return _ue_search_space_impl(rnti, subframe, n_cce, DEFAULT_SEARCH_SPACE)


def _ue_search_space_impl(rnti, subframe, n_cce, cfg):
    if rnti == 0:
        raise ValueError("RNTI 0 is reserved and has no search space")
    if n_cce < 1:
        raise ValueError("n_cce must be positive")
    if not 0 <= subframe <= 9:
        raise ValueError("subframe must be 0..9")
    y = _hash_seed(rnti, subframe, cfg)
    locs = set()
    for level, count in cfg.ue_candidates.items():
        quotient = n_cce // level
        if quotient == 0:
            continue
        for m in range(count):
            locs.add(CandidateLocation(level * ((y + m) % quotient), level))
    return tuple(sorted(locs, key=lambda l: (-l.level, l.start_cce)))


@lru_cache(maxsize=64)
def common_search_space(n_cce: int) -> tuple[CandidateLocation, ...]:
    """The fixed common locations, truncated to what fits in n_cce."""
    return tuple(CandidateLocation(s, l) for s, l in COMMON_LAYOUT
                 if s + l <= n_cce)


def coherence_check(rnti: int, loc: CandidateLocation, subframe: int,
                    n_cce: int,
                    cfg: SearchSpaceConfig = DEFAULT_SEARCH_SPACE) -> bool:
    """True iff the location lies in the RNTI's UE-specific space or in the
    common space. Uses the closed form of the hash instead of materializing
    the candidate set; any 16-bit value (including reserved ones) can be
    queried.
    """
    if not loc.fits(n_cce):
        raise ValueError(f"{loc} does not fit in {n_cce} CCEs")
    if (loc.start_cce, loc.level) in COMMON_LAYOUT:
        return True
    count = cfg.ue_candidates.get(loc.level, 0)
    quotient = n_cce // loc.level
    if count == 0 or quotient == 0:
        return False
    y = _hash_seed(rnti, subframe, cfg)
    m = (loc.start_cce // loc.level - y) % quotient
    return m < count


@lru_cache(maxsize=64)
def enumerate_candidates(n_cce: int) -> tuple[CandidateLocation, ...]:
    """Every aligned location, descending level then ascending start."""
    if n_cce < 1:
        raise ValueError("n_cce must be positive")
    out = []
    for level in (8, 4, 2, 1):
        out.extend(CandidateLocation(s, level)
                   for s in range(0, n_cce - level + 1, level))
    return tuple(out)


def cce_power(sf: PdcchSubframe, loc: CandidateLocation) -> np.ndarray:
    """Mean power of each CCE covered by the location (reference 1.0)."""
    if not loc.fits(sf.n_cce):
        raise ValueError(f"{loc} does not fit in {sf.n_cce} CCEs")
    block = sf.cces[loc.start_cce:loc.end_cce]
    return np.mean(np.square(block), axis=1)
