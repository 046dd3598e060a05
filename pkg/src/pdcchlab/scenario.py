"""Scenario configuration: cell geometry, traffic model, channel settings.

A scenario is a YAML (or JSON) mapping; unknown keys are rejected so typos
fail loudly. Presets model the three monitored-cell signal tiers plus an
ideal noiseless cell and can be overlaid on any config.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .channel import PRESETS as CHANNEL_PRESETS
from .channel import ChannelConfig


@dataclass(frozen=True)
class Dist:
    """A scalar sampling distribution: fixed, uniform or normal."""

    kind: str = "fixed"
    value: float = 0.0
    lo: float = 0.0
    hi: float = 0.0
    mean: float = 0.0
    std: float = 0.0

    def sample(self, rng: np.random.Generator) -> float:
        if self.kind == "fixed":
            return self.value
        if self.kind == "uniform":
            return float(rng.uniform(self.lo, self.hi))
        if self.kind == "normal":
            return float(rng.normal(self.mean, self.std))
        raise ValueError(f"unknown distribution kind {self.kind!r}")

    @staticmethod
    def fixed(value: float) -> "Dist":
        return Dist(kind="fixed", value=value)

    @staticmethod
    def uniform(lo: float, hi: float) -> "Dist":
        return Dist(kind="uniform", lo=lo, hi=hi)

    @staticmethod
    def normal(mean: float, std: float) -> "Dist":
        return Dist(kind="normal", mean=mean, std=std)


@dataclass(frozen=True)
class Scenario:
    duration_ms: int = 5000
    seed: int = 0
    n_rb: int = 50
    n_cce: int = 44
    arrival_rate: float = 2.0            # new UEs per second
    initial_sessions: int = 15
    inactivity_timeout_ms: int = 10000
    # per-session draws: UE-side link quality drives the aggregation
    # level; activities are per-subframe scheduling probabilities
    snr_db: Dist = field(default_factory=lambda: Dist.normal(12.0, 5.0))
    dl_activity: Dist = field(default_factory=lambda: Dist.uniform(0.10, 0.60))
    ul_activity: Dist = field(default_factory=lambda: Dist.uniform(0.05, 0.30))
    grant_rb_min: int = 2
    grant_rb_max: int = 10
    payload_len: int = 28
    channel: ChannelConfig = field(default_factory=ChannelConfig)

    def __post_init__(self):
        if self.duration_ms < 1:
            raise ValueError("duration_ms must be positive")
        if self.n_rb < 1 or self.n_rb > 64:
            raise ValueError("n_rb must lie in 1..64 (12-bit RIV field)")
        if self.n_cce < 1:
            raise ValueError("n_cce must be positive")
        if not 1 <= self.grant_rb_min <= self.grant_rb_max <= self.n_rb:
            raise ValueError("grant RB bounds must satisfy 1 <= min <= max <= n_rb")
        if self.arrival_rate < 0:
            raise ValueError("arrival_rate must be non-negative")
        if self.initial_sessions < 0:
            raise ValueError("initial_sessions must be non-negative")


def scenario_preset(name: str, **overrides) -> Scenario:
    """A ready-made scenario for one signal-quality tier.

    The noiseless preset starts with an empty cell so that every RNTI
    enters through an observable RAR exchange.
    """
    if name not in CHANNEL_PRESETS:
        raise ValueError(f"unknown preset {name!r}; "
                         f"choose from {sorted(CHANNEL_PRESETS)}")
    base = Scenario(channel=CHANNEL_PRESETS[name])
    if name == "noiseless":
        base = replace(base, initial_sessions=0)
    return replace(base, **overrides) if overrides else base


def _dist_to_plain(d: Dist) -> dict:
    if d.kind == "fixed":
        return {"kind": "fixed", "value": d.value}
    if d.kind == "uniform":
        return {"kind": "uniform", "lo": d.lo, "hi": d.hi}
    return {"kind": "normal", "mean": d.mean, "std": d.std}


def _dist_from_plain(raw) -> Dist:
    if isinstance(raw, (int, float)):
        return Dist.fixed(float(raw))
    kind = raw.get("kind")
    known = {"fixed": {"value"}, "uniform": {"lo", "hi"},
             "normal": {"mean", "std"}}
    if kind not in known:
        raise ValueError(f"unknown distribution kind {kind!r}")
    extra = set(raw) - known[kind] - {"kind"}
    if extra:
        raise ValueError(f"unexpected distribution keys {sorted(extra)}")
    return Dist(kind=kind, **{k: float(v) for k, v in raw.items() if k != "kind"})


def scenario_to_dict(sc: Scenario) -> dict:
    out = asdict(sc)
    for key in ("snr_db", "dl_activity", "ul_activity"):
        out[key] = _dist_to_plain(getattr(sc, key))
    ch = out["channel"]
    if math.isinf(ch["snr_db"]):
        ch["snr_db"] = "inf"
    return out


def scenario_from_dict(raw: dict) -> Scenario:
    raw = dict(raw)
    known = set(Scenario.__dataclass_fields__)
    extra = set(raw) - known
    if extra:
        raise ValueError(f"unknown scenario keys {sorted(extra)}")
    for key in ("snr_db", "dl_activity", "ul_activity"):
        if key in raw:
            raw[key] = _dist_from_plain(raw[key])
    if "channel" in raw:
        ch = dict(raw["channel"])
        extra = set(ch) - set(ChannelConfig.__dataclass_fields__)
        if extra:
            raise ValueError(f"unknown channel keys {sorted(extra)}")
        snr = ch.get("snr_db")
        if isinstance(snr, str):
            ch["snr_db"] = math.inf if snr in ("inf", ".inf", "noiseless") \
                else float(snr)
        raw["channel"] = ChannelConfig(**ch)
    return Scenario(**raw)


def load_scenario(path: str | Path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        raw = yaml.safe_load(fh)
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ValueError(f"scenario file {path} must hold a mapping")
    return scenario_from_dict(raw)


def save_scenario(sc: Scenario, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(scenario_to_dict(sc), fh, sort_keys=True)
