"""Blind-decoding engines: three competing DCI validation pipelines.

falcon   recursive depth-first search over the candidate tree with
         shortcut acceptance (a half-location re-decode confirming the
         parent's RNTI validates it instantly), a sliding histogram that
         promotes uncertain RNTIs seen five times within 200 ms, RAR
         tracking, search-space coherence and the power gate. Never
         re-encodes.
owl      breadth-first over all candidates in descending aggregation
         order; unknown RNTIs are validated by re-encoding the candidate
         and requiring a 97% match against the received hard decisions;
         RAR tracking, coherence and power gate as above.
lteye    owl with RAR tracking disabled.

All pipelines share the candidate machinery and are stream-sequential:
one decoder state must be fed subframes in millisecond order.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import codec
from .codec import CRC_BITS, CodecConfig, DEFAULT_CODEC
from .dci import (
    DciFormat,
    RntiClass,
    classify_rnti,
    parse_grant_payload,
    parse_rar_payload,
    riv_decode,
)
from .grid import (
    CandidateLocation,
    PdcchSubframe,
    cce_power,
    coherence_check,
    enumerate_candidates,
)

PIPELINES = ("falcon", "owl", "lteye")

ORIGIN_RAR = "rar"
ORIGIN_HISTOGRAM = "histogram"
ORIGIN_SHORTCUT = "shortcut"
ORIGIN_REENCODE = "reencode"
ORIGIN_CLASS = "class"  # SI/paging/RA values are valid a priori


@dataclass(frozen=True)
class DecoderConfig:
    pipeline: str = "falcon"
    n_rb: int = 50
    n_cce: int = 44
    payload_len: int = 28
    power_gate_threshold: float = 0.5
    reencode_match_threshold: float = 0.97
    histogram_window_ms: int = 200
    histogram_threshold: int = 5
    active_expiry_ms: int = 10000
    formats: tuple[str, ...] = ("ul_grant", "dl_grant")
    codec: CodecConfig = field(default_factory=CodecConfig)

    def __post_init__(self):
        if self.pipeline not in PIPELINES:
            raise ValueError(f"pipeline must be one of {PIPELINES}")
        if not 0.0 < self.power_gate_threshold <= 1.0:
            raise ValueError("power_gate_threshold must lie in (0, 1]")
        if not 0.0 < self.reencode_match_threshold <= 1.0:
            raise ValueError("reencode_match_threshold must lie in (0, 1]")
        if self.histogram_threshold < 1 or self.histogram_window_ms < 1:
            raise ValueError("histogram parameters must be positive")


@dataclass
class DciCandidate:
    loc: CandidateLocation
    rnti: int
    payload: np.ndarray
    fmt: str
    metric: float
    halved: bool = False
    origin: str | None = None  # set on acceptance


class RntiHistogram:
    """Sliding multiset of uncertain-RNTI sightings.

    One occurrence per (location, subframe); the window covers the last
    ``window_ms`` milliseconds inclusive, evictions are exact.
    """

    def __init__(self, window_ms: int = 200, threshold: int = 5):
        self.window_ms = window_ms
        self.threshold = threshold
        self._times: dict[int, deque[int]] = {}
        self._last_sweep = -1

    def _evict(self, dq: deque, now: int) -> None:
        horizon = now - self.window_ms + 1
        while dq and dq[0] < horizon:
            dq.popleft()

    def add(self, rnti: int, now: int) -> int:
        """Record a sighting; returns the in-window count including it."""
        dq = self._times.setdefault(rnti, deque())
        self._evict(dq, now)
        dq.append(now)
        return len(dq)

    def count(self, rnti: int, now: int) -> int:
        dq = self._times.get(rnti)
        if dq is None:
            return 0
        self._evict(dq, now)
        if not dq:
            del self._times[rnti]
            return 0
        return len(dq)

    def sweep(self, now: int) -> None:
        """Drop stale entries wholesale (bounds memory on noisy streams)."""
        if now - self._last_sweep < self.window_ms:
            return
        self._last_sweep = now
        for rnti in [r for r, dq in self._times.items()
                     if not dq or dq[-1] < now - self.window_ms + 1]:
            del self._times[rnti]


@dataclass
class _ActiveEntry:
    last_seen: int
    origin: str


class ActiveRntiSet:
    """Known-valid RNTIs with inactivity expiry.

    System-information, paging and random-access RNTIs are fixed by the
    standard and count as active without ever being inserted.
    """

    def __init__(self, expiry_ms: int = 10000):
        self.expiry_ms = expiry_ms
        self._entries: dict[int, _ActiveEntry] = {}

    def contains(self, rnti: int, now: int) -> bool:
        if classify_rnti(rnti) in (RntiClass.SI, RntiClass.PAGING, RntiClass.RA):
            return True
        entry = self._entries.get(rnti)
        if entry is None:
            return False
        if now - entry.last_seen > self.expiry_ms:
            del self._entries[rnti]
            return False
        return True

    def origin_of(self, rnti: int) -> str:
        entry = self._entries.get(rnti)
        return entry.origin if entry is not None else ORIGIN_CLASS

    def add(self, rnti: int, now: int, origin: str) -> None:
        entry = self._entries.get(rnti)
        if entry is None:
            self._entries[rnti] = _ActiveEntry(last_seen=now, origin=origin)
        else:
            entry.last_seen = max(entry.last_seen, now)

    def touch(self, rnti: int, now: int) -> None:
        entry = self._entries.get(rnti)
        if entry is not None:
            entry.last_seen = max(entry.last_seen, now)

    def snapshot(self) -> dict[int, str]:
        return {r: e.origin for r, e in self._entries.items()}


@dataclass
class RntiState:
    """Decoder-side knowledge carried across subframes."""

    active: ActiveRntiSet
    histogram: RntiHistogram
    malformed_rars: int = 0


def make_rnti_state(cfg: DecoderConfig) -> RntiState:
    return RntiState(
        active=ActiveRntiSet(expiry_ms=cfg.active_expiry_ms),
        histogram=RntiHistogram(window_ms=cfg.histogram_window_ms,
                                threshold=cfg.histogram_threshold),
    )


@dataclass(frozen=True)
class DecodedDci:
    """One accepted control message, as written to the decoded trace."""

    ms: int
    direction: str
    rnti: int
    rnti_origin: str
    loc_start: int
    loc_level: int
    rb_start: int
    rb_len: int
    pipeline: str


# ---------------------------------------------------------------------------
# candidate machinery


def power_gate(sf: PdcchSubframe, loc: CandidateLocation,
               cfg: DecoderConfig) -> bool:
    """True iff every covered CCE reaches the configured power fraction."""
    return bool((cce_power(sf, loc) >= cfg.power_gate_threshold).all())


def try_decode(sf: PdcchSubframe, loc: CandidateLocation, fmt: str,
               cfg: DecoderConfig, halved: bool = False) -> DciCandidate:
    """Decode one candidate location (always yields a candidate; whether it
    is believable is decided downstream).

    The format argument picks the assumed payload size; the decoded
    leading flag bit decides the actual format of the candidate.
    """
    del fmt  # all simulated formats share cfg.payload_len
    soft = sf.soft_block(loc)
    combined = codec.rate_recover(soft, 3 * (cfg.payload_len + CRC_BITS))
    info, metric = codec.viterbi_decode_with_metric(combined, cfg.payload_len)
    payload = info[:cfg.payload_len]
    rnti = codec.scramble_crc(codec.crc16(payload),
                              codec.bits_to_crc(info[cfg.payload_len:]))
    if classify_rnti(rnti) is RntiClass.RA:
        fmt_value = "rar"
    else:
        fmt_value = DciFormat.DL_GRANT.value if payload[0] \
            else DciFormat.UL_GRANT.value
    return DciCandidate(loc=loc, rnti=rnti, payload=payload, fmt=fmt_value,
                        metric=float(metric), halved=halved)


def validate_reencode(cand: DciCandidate, sf: PdcchSubframe,
                      cfg: DecoderConfig) -> bool:
    """Re-encode the candidate and compare with the received hard bits."""
    tx = codec.encode_dci(cand.payload, cand.rnti, cand.loc.level, cfg.codec)
    hard = (sf.soft_block(cand.loc) < 0).astype(np.uint8)
    match = float(np.mean(tx == hard))
    return match >= cfg.reencode_match_threshold


def rar_track(accepted: list[DciCandidate], active: ActiveRntiSet,
              ms: int) -> tuple[ActiveRntiSet, int]:
    """Pull newly assigned C-RNTIs out of accepted random-access responses.

    Returns the updated set and the number of malformed RAR payloads
    (extracted value outside the C-RNTI class), which are ignored.
    """
    malformed = 0
    for cand in accepted:
        if classify_rnti(cand.rnti) is not RntiClass.RA:
            continue
        crnti = parse_rar_payload(cand.payload)
        if classify_rnti(crnti) is RntiClass.C:
            active.add(crnti, ms, ORIGIN_RAR)
        else:
            malformed += 1
    return active, malformed


@lru_cache(maxsize=64)
def _forest_roots(n_cce: int) -> tuple[CandidateLocation, ...]:
    """Tree roots of the depth-first traversal: greedy largest aligned
    locations covering the control region left to right."""
    roots = []
    covered = 0
    for level in (8, 4, 2, 1):
        while covered % level == 0 and covered + level <= n_cce:
            roots.append(CandidateLocation(covered, level))
            covered += level
    return tuple(roots)


@lru_cache(maxsize=None)
def _loc_mask(start: int, level: int) -> int:
    return ((1 << level) - 1) << start


def _passed_mask(sf: PdcchSubframe, threshold: float) -> int:
    mask = 0
    for idx in np.flatnonzero(sf.cce_powers() >= threshold):
        mask |= 1 << int(idx)
    return mask


# ---------------------------------------------------------------------------
# falcon: recursive depth-first with shortcut


def falcon_decode_subframe(sf: PdcchSubframe, state: RntiState,
                           cfg: DecoderConfig,
                           ) -> tuple[list[DciCandidate], RntiState]:
    """One subframe of the depth-first pipeline.

    Locations overlapping an accepted DCI are skipped. A location with
    insufficient power in some CCE is not decoded but its halves are still
    inspected; subtrees with no powered CCE at all are pruned. A decoded
    candidate is accepted on the spot if it is coherent and its RNTI is
    active. Otherwise the two halves are examined (left first); a half
    decoding to the parent's own uncertain RNTI accepts the parent
    immediately and activates the RNTI. Coherent-but-rejected candidates
    from subtrees that produced no acceptance feed the histogram, and an
    RNTI reaching the occurrence threshold within the window is promoted,
    accepting its pending candidates of this subframe.
    """
    ms = sf.ms
    subframe = sf.subframe
    gate = _passed_mask(sf, cfg.power_gate_threshold)
    accepted: list[DciCandidate] = []
    accepted_mask = 0
    pending: list[DciCandidate] = []

    def accept(cand: DciCandidate, origin: str) -> bool:
        nonlocal accepted_mask
        mask = _loc_mask(cand.loc.start_cce, cand.loc.level)
        if accepted_mask & mask:
            return False
        cand.origin = origin
        accepted.append(cand)
        accepted_mask |= mask
        return True

    def visit(loc: CandidateLocation,
              parent_uncertain: DciCandidate | None) -> bool:
        """Inspect one location; True means the parent's uncertain
        candidate was just accepted through the shortcut."""
        mask = _loc_mask(loc.start_cce, loc.level)
        if accepted_mask & mask:
            return False
        if not gate & mask:
            return False  # nothing powered anywhere under this location
        uncertain = None
        if (gate & mask) == mask:
            decoded = try_decode(sf, loc, cfg.formats[0], cfg,
                                 halved=parent_uncertain is not None)
            if (parent_uncertain is not None
                    and decoded.rnti == parent_uncertain.rnti):
                # the shortened re-decode confirms the parent: accept it
                # immediately and activate the RNTI
                pmask = _loc_mask(parent_uncertain.loc.start_cce,
                                  parent_uncertain.loc.level)
                if not accepted_mask & pmask:
                    state.active.add(decoded.rnti, ms, ORIGIN_SHORTCUT)
                    accept(parent_uncertain, ORIGIN_SHORTCUT)
                    return True
            if coherence_check(decoded.rnti, loc, subframe, sf.n_cce):
                if state.active.contains(decoded.rnti, ms):
                    if accept(decoded, state.active.origin_of(decoded.rnti)):
                        state.active.touch(decoded.rnti, ms)
                        return False
                else:
                    uncertain = decoded
        before = len(accepted)
        if loc.level > 1:
            for half in loc.halves():
                if visit(half, uncertain):
                    return False  # this location is now accepted
        if uncertain is not None and len(accepted) == before:
            pending.append(uncertain)
        return False

    for root in _forest_roots(sf.n_cce):
        visit(root, None)

    # histogram phase: a fifth in-window sighting promotes the RNTI and
    # accepts its pending candidates of this subframe
    promoted: set[int] = set()
    for cand in pending:
        if cand.rnti in promoted:
            continue
        if state.histogram.add(cand.rnti, ms) >= cfg.histogram_threshold:
            state.active.add(cand.rnti, ms, ORIGIN_HISTOGRAM)
            promoted.add(cand.rnti)
    if promoted:
        for cand in pending:
            if cand.rnti in promoted and accept(cand, ORIGIN_HISTOGRAM):
                state.active.touch(cand.rnti, ms)
    state.histogram.sweep(ms)

    state.active, bad = rar_track(accepted, state.active, ms)
    state.malformed_rars += bad
    return accepted, state


# ---------------------------------------------------------------------------
# owl / lteye: breadth-first with re-encoding fallback


def owl_decode_subframe(sf: PdcchSubframe, state: RntiState,
                        cfg: DecoderConfig,
                        ) -> tuple[list[DciCandidate], RntiState]:
    """Breadth-first pipeline: all power-gated, non-overlapping locations
    in descending aggregation order; a coherent candidate is accepted if
    its RNTI is active or the re-encoding check clears the match
    threshold. lteye is owl without RAR tracking."""
    ms = sf.ms
    subframe = sf.subframe
    gate = _passed_mask(sf, cfg.power_gate_threshold)
    accepted: list[DciCandidate] = []
    accepted_mask = 0
    for loc in enumerate_candidates(sf.n_cce):
        mask = _loc_mask(loc.start_cce, loc.level)
        if accepted_mask & mask:
            continue
        if (gate & mask) != mask:
            continue
        cand = try_decode(sf, loc, cfg.formats[0], cfg)
        if not coherence_check(cand.rnti, loc, subframe, sf.n_cce):
            continue
        if state.active.contains(cand.rnti, ms):
            cand.origin = state.active.origin_of(cand.rnti)
            state.active.touch(cand.rnti, ms)
        elif validate_reencode(cand, sf, cfg):
            cand.origin = ORIGIN_REENCODE
        else:
            continue
        accepted.append(cand)
        accepted_mask |= mask
    if cfg.pipeline == "owl":
        state.active, bad = rar_track(accepted, state.active, ms)
        state.malformed_rars += bad
    return accepted, state


def decode_subframe(sf: PdcchSubframe, state: RntiState, cfg: DecoderConfig,
                    ) -> tuple[list[DciCandidate], RntiState]:
    if cfg.pipeline == "falcon":
        return falcon_decode_subframe(sf, state, cfg)
    return owl_decode_subframe(sf, state, cfg)


# ---------------------------------------------------------------------------
# stream driver


def _to_decoded(cand: DciCandidate, ms: int, cfg: DecoderConfig) -> DecodedDci:
    cls = classify_rnti(cand.rnti)
    if cls is RntiClass.RA:
        direction, rb_start, rb_len = "DL", 0, 0
    else:
        fmt, riv = parse_grant_payload(cand.payload)
        direction = "DL" if fmt is DciFormat.DL_GRANT else "UL"
        rb_start, rb_len, _ = riv_decode(riv, cfg.n_rb)
    return DecodedDci(
        ms=ms, direction=direction, rnti=cand.rnti,
        rnti_origin=cand.origin or "", loc_start=cand.loc.start_cce,
        loc_level=cand.loc.level, rb_start=rb_start, rb_len=rb_len,
        pipeline=cfg.pipeline)


def decode_stream(subframes, cfg: DecoderConfig,
                  state: RntiState | None = None) -> list[DecodedDci]:
    """Run the configured pipeline over a millisecond-ordered stream."""
    if state is None:
        state = make_rnti_state(cfg)
    out: list[DecodedDci] = []
    for sf in subframes:
        accepted, state = decode_subframe(sf, state, cfg)
        out.extend(_to_decoded(c, sf.ms, cfg) for c in accepted)
    return out
