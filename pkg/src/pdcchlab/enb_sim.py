"""Ground-truth generator: a simulated cell scheduler.

UEs arrive as a Poisson process, get sequential C-RNTIs announced through
random-access-response DCIs in the common search space, and are then
scheduled per subframe with per-direction activity probabilities. Each
grant occupies contiguous resource blocks (collision-free by construction
within a direction and target subframe; uplink grants take effect four
subframes later) and its DCI lands on a free candidate of the UE's own
search space at an aggregation level matching the UE's link quality.

The output is a stream of encoded subframes plus ground-truth records
that drive every downstream metric.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import codec
from .dci import (
    C_RNTI_FIRST,
    C_RNTI_LAST,
    RA_RNTI_FIRST,
    RA_RNTI_LAST,
    DciFormat,
    build_grant_payload,
    build_rar_payload,
    riv_encode,
)
from .grid import CandidateLocation, PdcchSubframe, common_search_space, ue_search_space
from .scenario import Scenario


class RntiSpaceExhausted(Exception):
    """No free C-RNTI remains."""


@dataclass
class UeSession:
    rnti: int
    snr_db: float
    dl_activity: float
    ul_activity: float
    joined_at: int
    last_active: int


@dataclass
class GroundTruthRecord:
    ms: int
    direction: str              # "DL" | "UL"
    rnti: int
    rb_start: int
    rb_len: int
    loc: CandidateLocation
    fmt: str                    # "dl_grant" | "ul_grant" | "rar"
    payload: np.ndarray


@dataclass
class SchedulerState:
    scenario: Scenario
    rng: np.random.Generator
    next_rnti: int = C_RNTI_FIRST
    sessions: dict[int, UeSession] = field(default_factory=dict)
    pending_rars: deque = field(default_factory=deque)
    ul_reserved: dict[int, np.ndarray] = field(default_factory=dict)
    rar_counter: int = 0


def make_state(scenario: Scenario) -> SchedulerState:
    state = SchedulerState(scenario=scenario,
                           rng=np.random.default_rng(scenario.seed))
    for _ in range(scenario.initial_sessions):
        rnti = assign_rnti(state)
        state.sessions[rnti] = _new_session(state, rnti, ms=0)
    return state


def _new_session(state: SchedulerState, rnti: int, ms: int) -> UeSession:
    sc = state.scenario
    return UeSession(
        rnti=rnti,
        snr_db=sc.snr_db.sample(state.rng),
        dl_activity=float(np.clip(sc.dl_activity.sample(state.rng), 0.0, 1.0)),
        ul_activity=float(np.clip(sc.ul_activity.sample(state.rng), 0.0, 1.0)),
        joined_at=ms,
        last_active=ms,
    )


def assign_rnti(state: SchedulerState) -> int:
    """Next sequential C-RNTI, skipping ones still in use, wrapping at the
    top of the range."""
    span = C_RNTI_LAST - C_RNTI_FIRST + 1
    candidate = state.next_rnti
    for _ in range(span):
        if candidate not in state.sessions:
            state.next_rnti = C_RNTI_FIRST + (candidate - C_RNTI_FIRST + 1) % span
            return candidate
        candidate = C_RNTI_FIRST + (candidate - C_RNTI_FIRST + 1) % span
    raise RntiSpaceExhausted("all C-RNTIs are assigned")


def pick_aggregation_level(snr_db: float) -> int:
    """Monotone non-increasing mapping from link quality to redundancy."""
    if snr_db >= 10.0:
        return 1
    if snr_db >= 4.0:
        return 2
    if snr_db >= -2.0:
        return 4
    return 8


def generate_rar(state: SchedulerState, new_rnti: int, ms: int,
                 cce_used: np.ndarray) -> GroundTruthRecord | None:
    """Place a random-access response announcing ``new_rnti``.

    The DCI is addressed to an RA-RNTI and sits in the common search
    space; its payload carries the assigned C-RNTI in the first 16 bits.
    Returns None when every common location is taken this subframe (the
    caller defers to the next one).
    """
    sc = state.scenario
    for loc in common_search_space(sc.n_cce):
        if not cce_used[loc.start_cce:loc.end_cce].any():
            ra_rnti = RA_RNTI_FIRST + state.rar_counter % \
                (RA_RNTI_LAST - RA_RNTI_FIRST + 1)
            state.rar_counter += 1
            payload = build_rar_payload(new_rnti, sc.payload_len)
            return GroundTruthRecord(
                ms=ms, direction="DL", rnti=ra_rnti, rb_start=0, rb_len=0,
                loc=loc, fmt="rar", payload=payload)
    return None


def _first_fit(used: np.ndarray, length: int) -> int | None:
    """Leftmost start index of a free run, or None."""
    run = 0
    for i in range(used.size):
        run = 0 if used[i] else run + 1
        if run == length:
            return i - length + 1
    return None


def _place_dci(state: SchedulerState, rnti: int, level: int, subframe: int,
               cce_used: np.ndarray) -> CandidateLocation | None:
    """A free UE-specific candidate at the wanted level, else the next
    larger level; None if everything is taken."""
    sc = state.scenario
    candidates = ue_search_space(rnti, subframe, sc.n_cce)
    want = level
    while want <= 8:
        for loc in sorted((l for l in candidates if l.level == want),
                          key=lambda l: l.start_cce):
            if not cce_used[loc.start_cce:loc.end_cce].any():
                return loc
        want *= 2
    return None


def step_subframe(state: SchedulerState, ms: int,
                  ) -> tuple[PdcchSubframe, list[GroundTruthRecord]]:
    """Advance the cell by one millisecond.

    Arrivals join (RNTI assignment plus RAR), idle sessions expire, every
    active session rolls its per-direction activity dice, and each granted
    allocation gets encoded into free CCEs of the subframe. Grants that
    find no free search-space location or no free RBs are dropped, never
    emitted malformed.
    """
    sc = state.scenario
    rng = state.rng

    # (a) arrivals
    for _ in range(rng.poisson(sc.arrival_rate / 1000.0)):
        try:
            rnti = assign_rnti(state)
        except RntiSpaceExhausted:
            break
        state.sessions[rnti] = _new_session(state, rnti, ms)
        state.pending_rars.append(rnti)

    # (b) inactivity expiry
    for rnti in [r for r, s in state.sessions.items()
                 if ms - s.last_active > sc.inactivity_timeout_ms]:
        del state.sessions[rnti]

    cce_used = np.zeros(sc.n_cce, dtype=bool)
    bits = np.zeros((sc.n_cce, 72), dtype=np.uint8)
    cce_snr = np.full(sc.n_cce, np.nan)
    dl_used = np.zeros(sc.n_rb, dtype=bool)
    ul_used = state.ul_reserved.setdefault(ms + 4, np.zeros(sc.n_rb, dtype=bool))
    for target in [t for t in state.ul_reserved if t < ms + 4]:
        del state.ul_reserved[target]
    records: list[GroundTruthRecord] = []

    def commit(record: GroundTruthRecord, snr_db: float | None) -> None:
        tx = codec.encode_dci(record.payload, record.rnti, record.loc.level)
        block = tx.reshape(record.loc.level, 72)
        bits[record.loc.start_cce:record.loc.end_cce] = block
        cce_used[record.loc.start_cce:record.loc.end_cce] = True
        if snr_db is not None:
            cce_snr[record.loc.start_cce:record.loc.end_cce] = snr_db
        records.append(record)

    # RARs first: the common space is the scarce shared resource
    deferred = deque()
    while state.pending_rars:
        crnti = state.pending_rars.popleft()
        record = generate_rar(state, crnti, ms, cce_used)
        if record is None:
            deferred.append(crnti)
        else:
            commit(record, None)
    state.pending_rars = deferred

    # (c)-(f) per-session scheduling, deterministic RNTI order
    for rnti in sorted(state.sessions):
        session = state.sessions[rnti]
        for direction, active_p, rb_used in (
                ("DL", session.dl_activity, dl_used),
                ("UL", session.ul_activity, ul_used)):
            if rng.random() >= active_p:
                continue
            rb_len = int(rng.integers(sc.grant_rb_min, sc.grant_rb_max + 1))
            level = pick_aggregation_level(session.snr_db)
            loc = _place_dci(state, rnti, level, ms % 10, cce_used)
            if loc is None:
                continue
            rb_start = _first_fit(rb_used, rb_len)
            if rb_start is None:
                continue
            fmt = DciFormat.DL_GRANT if direction == "DL" else DciFormat.UL_GRANT
            payload = build_grant_payload(
                fmt, riv_encode(rb_start, rb_len, sc.n_rb), sc.payload_len)
            rb_used[rb_start:rb_start + rb_len] = True
            session.last_active = ms
            commit(GroundTruthRecord(
                ms=ms, direction=direction, rnti=rnti, rb_start=rb_start,
                rb_len=rb_len, loc=loc, fmt=fmt.value, payload=payload),
                session.snr_db)

    sf = PdcchSubframe(
        ms=ms, n_cce=sc.n_cce,
        cces=1.0 - 2.0 * bits.astype(np.float64),
        occupied=cce_used,
        cce_snr_db=cce_snr)
    return sf, records


class CellSimulator:
    """Drives the scheduler over a scenario's full duration."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.state = make_state(scenario)

    def run(self):
        """Yield (subframe, records) per millisecond."""
        for ms in range(self.scenario.duration_ms):
            yield step_subframe(self.state, ms)
