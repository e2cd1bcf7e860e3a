"""Run configuration: dataclasses mirrored 1:1 by the JSON config format."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field, fields
from typing import Any


class ConfigError(ValueError):
    pass


@dataclass
class RadioConfig:
    range_m: float = 200.0
    bitrate_bps: float = 6_000_000.0
    loss: float = 0.0
    # fixed per-frame channel overhead; 300 B + 0.1 ms at 6 Mbps gives the
    # ~2000 frames/s ceiling of the load model
    frame_overhead_ms: float = 0.1
    backlog_ms: float = 2000.0


@dataclass
class MobilityConfig:
    kind: str = "static_grid"  # static_grid | random_waypoint | trace
    spacing_m: float = 35.0
    speed_min: float = 5.0
    speed_max: float = 15.0
    trace_path: str = ""


@dataclass
class AdversaryConfig:
    n_flooders: int = 0
    gamma_dos_hz: float = 250.0
    flood_mix: str = "beacons"  # beacons | denms | mixed
    n_malicious_pairs: int = 0
    attack_warmup_ms: float = 3000.0
    flooder_grid: tuple[int, int] = (2, 1)

    def __post_init__(self):
        if isinstance(self.flooder_grid, list):
            self.flooder_grid = tuple(self.flooder_grid)


@dataclass
class DenmConfig:
    enabled: bool = False
    mean_interval_ms: float = 30000.0
    lifetime_ms: float = 2000.0
    body_len: int = 32


@dataclass
class SimConfig:
    """Full description of one simulation run."""

    seed: int = 0
    duration_ms: float = 60000.0
    scheme: str = "FACILITATED"  # FACILITATED | BASELINE_FCFS | BASELINE_LCFS
    n_benign: int = 25
    region_w_m: float = 700.0
    region_h_m: float = 700.0
    join_stagger_ms: float = 0.0

    alpha: int = 3
    k: int = 3
    gamma_hz: float = 10.0
    gamma_max_hz: float = 10.0
    tau_ms: float = 4.0
    tau_light_ms: float = 0.04
    t_blife_ms: float = 1000.0
    pr_check: float = 0.2
    ratio_d: float = 0.5
    ratio_nd: float = 0.5
    beta1: int = 1
    beta2: int = 3

    cross_check: bool = True
    evidence: bool = True

    max_chain_gap_slots: int = 100
    replay_window_ms: float = 300.0
    frame_size: int = 300
    verifier_cap: int = 8
    facilitator_ttl_ms: float = 3000.0
    facilitator_cache_cap: int = 1024
    event_tx_offset_ms: float = 20.0

    radio: RadioConfig = field(default_factory=RadioConfig)
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    adversary: AdversaryConfig = field(default_factory=AdversaryConfig)
    denm: DenmConfig = field(default_factory=DenmConfig)

    record_deliveries: bool = False

    @property
    def slot_len_ms(self) -> float:
        return 1000.0 / self.gamma_max_hz

    def validate(self) -> list[str]:
        """Return a list of constraint violations (empty when valid)."""
        errs = []
        if self.duration_ms < 0:
            errs.append("duration_ms must be >= 0")
        if self.scheme not in ("FACILITATED", "BASELINE_FCFS", "BASELINE_LCFS"):
            errs.append(f"unknown scheme {self.scheme!r}")
        if self.n_benign < 0:
            errs.append("n_benign must be >= 0")
        for name in ("gamma_hz", "gamma_max_hz", "tau_ms", "tau_light_ms",
                     "t_blife_ms", "frame_size"):
            if getattr(self, name) <= 0:
                errs.append(f"{name} must be > 0")
        if self.gamma_hz > self.gamma_max_hz:
            errs.append("gamma_hz must not exceed gamma_max_hz")
        if not 0 <= self.pr_check <= 1:
            errs.append("pr_check must be in [0, 1]")
        if abs(self.ratio_d + self.ratio_nd - 1.0) > 1e-9:
            errs.append("ratio_d + ratio_nd must equal 1")
        if self.alpha < 0 or self.k < 0:
            errs.append("alpha and k must be >= 0")
        if self.beta1 < 1 or self.beta2 < 1:
            errs.append("beta1 and beta2 must be >= 1")
        if self.radio.range_m <= 0 or self.radio.bitrate_bps <= 0:
            errs.append("radio range and bitrate must be > 0")
        if not 0 <= self.radio.loss < 1:
            errs.append("radio loss must be in [0, 1)")
        if self.mobility.kind not in ("static_grid", "random_waypoint", "trace"):
            errs.append(f"unknown mobility kind {self.mobility.kind!r}")
        if self.adversary.flood_mix not in ("beacons", "denms", "mixed"):
            errs.append(f"unknown flood_mix {self.adversary.flood_mix!r}")
        if self.adversary.n_flooders < 0 or self.adversary.n_malicious_pairs < 0:
            errs.append("adversary counts must be >= 0")
        cap = self.radio.bitrate_bps  # flooders cannot exceed the channel
        if self.adversary.gamma_dos_hz * self.frame_size * 8 > cap * 4:
            errs.append("gamma_dos_hz far beyond channel capacity")
        return errs

    def require_valid(self) -> "SimConfig":
        errs = self.validate()
        if errs:
            raise ConfigError("; ".join(errs))
        return self


_NESTED = {"radio": RadioConfig, "mobility": MobilityConfig,
           "adversary": AdversaryConfig, "denm": DenmConfig}


def config_to_dict(cfg: SimConfig) -> dict[str, Any]:
    return dataclasses.asdict(cfg)


def config_from_dict(data: dict[str, Any]) -> SimConfig:
    kwargs: dict[str, Any] = {}
    known = {f.name for f in fields(SimConfig)}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown config field {key!r}")
        if key in _NESTED and isinstance(value, dict):
            sub_known = {f.name for f in fields(_NESTED[key])}
            bad = set(value) - sub_known
            if bad:
                raise ConfigError(f"unknown config field {key}.{bad.pop()}")
            kwargs[key] = _NESTED[key](**value)
        else:
            kwargs[key] = value
    return SimConfig(**kwargs)


def load_config(path: str) -> SimConfig:
    with open(path) as fh:
        return config_from_dict(json.load(fh))


def save_config(cfg: SimConfig, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=True)
        fh.write("\n")


def apply_override(cfg: SimConfig, dotted: str, raw: str) -> SimConfig:
    """Set a (possibly nested) config field from a CLI ``path=value`` string."""
    target: Any = cfg
    parts = dotted.split(".")
    for part in parts[:-1]:
        if not hasattr(target, part):
            raise ConfigError(f"unknown config field {dotted!r}")
        target = getattr(target, part)
    leaf = parts[-1]
    if not dataclasses.is_dataclass(target) or not hasattr(target, leaf):
        raise ConfigError(f"unknown config field {dotted!r}")
    current = getattr(target, leaf)
    setattr(target, leaf, _coerce(raw, current, dotted))
    return cfg


def _coerce(raw: str, current: Any, dotted: str) -> Any:
    if isinstance(current, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{dotted}: expected boolean, got {raw!r}")
    if isinstance(current, int):
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{dotted}: expected int, got {raw!r}") from exc
    if isinstance(current, float):
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{dotted}: expected float, got {raw!r}") from exc
    if isinstance(current, tuple):
        return tuple(int(x) for x in raw.split("x"))
    return raw
