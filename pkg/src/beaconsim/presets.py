"""Named desk-scale scenarios.

Every preset is a pure function of (name, seed): two invocations with the
same arguments produce identical configs and therefore identical runs.
"""

from __future__ import annotations

from dataclasses import replace

from .params import AdversaryConfig, DenmConfig, SimConfig


def _desk_base(seed: int) -> SimConfig:
    cfg = SimConfig(seed=seed)
    cfg.n_benign = 25
    cfg.duration_ms = 60000.0
    cfg.join_stagger_ms = 30000.0
    return cfg


def benign(seed: int) -> SimConfig:
    return _desk_base(seed)


def benign_loaded(seed: int) -> SimConfig:
    cfg = _desk_base(seed)
    cfg.n_benign = 30  # per-receiver arrivals exceed the 1/tau service rate
    return cfg


def dos_beacons(seed: int) -> SimConfig:
    cfg = _desk_base(seed)
    cfg.adversary = AdversaryConfig(n_flooders=2, gamma_dos_hz=250.0,
                                    flood_mix="beacons")
    return cfg


def dos_denms_only(seed: int) -> SimConfig:
    cfg = _desk_base(seed)
    cfg.adversary = AdversaryConfig(n_flooders=2, gamma_dos_hz=250.0,
                                    flood_mix="denms")
    cfg.denm = DenmConfig(enabled=True)
    return cfg


def dos_mixed(seed: int) -> SimConfig:
    cfg = _desk_base(seed)
    cfg.adversary = AdversaryConfig(n_flooders=2, gamma_dos_hz=250.0,
                                    flood_mix="mixed")
    cfg.denm = DenmConfig(enabled=True)
    return cfg


def _collusion_base(seed: int) -> SimConfig:
    # the background flood keeps victim CPUs saturated and several
    # colluding pairs keep attestations frequent; with idle CPUs bogus
    # beacons get signature-checked (and rejected) before any cooperative
    # attestation can land, and no false acceptance ever happens
    cfg = SimConfig(seed=seed)
    cfg.n_benign = 16
    cfg.duration_ms = 60000.0
    cfg.join_stagger_ms = 2000.0
    cfg.adversary = AdversaryConfig(n_flooders=2, gamma_dos_hz=250.0,
                                    flood_mix="beacons",
                                    n_malicious_pairs=3,
                                    attack_warmup_ms=5000.0)
    return cfg


def collusion_none(seed: int) -> SimConfig:
    cfg = _collusion_base(seed)
    cfg.pr_check = 0.0
    cfg.cross_check = False
    cfg.evidence = False
    return cfg


def collusion_prob(seed: int) -> SimConfig:
    cfg = _collusion_base(seed)
    cfg.pr_check = 0.2
    cfg.cross_check = False
    cfg.evidence = False
    return cfg


def collusion_full(seed: int) -> SimConfig:
    cfg = _collusion_base(seed)
    cfg.pr_check = 0.2
    cfg.cross_check = True
    cfg.evidence = True
    return cfg


def smoke(seed: int) -> SimConfig:
    cfg = SimConfig(seed=seed)
    cfg.n_benign = 5
    cfg.duration_ms = 5000.0
    cfg.join_stagger_ms = 1000.0
    cfg.adversary = AdversaryConfig(n_flooders=1, gamma_dos_hz=50.0,
                                    flood_mix="beacons")
    return cfg


PRESETS = {
    "benign": (benign, "25 nodes, no attackers"),
    "benign-loaded": (benign_loaded, "30 nodes, arrivals beyond CPU capacity"),
    "dos-beacons": (dos_beacons, "2 flooders, 250 Hz bogus beacons each"),
    "dos-denms-only": (dos_denms_only, "2 flooders, 250 Hz bogus DENMs each"),
    "dos-mixed": (dos_mixed, "2 flooders, beacons+DENMs at 125 Hz each"),
    "collusion-none": (collusion_none, "malicious pair, no protection"),
    "collusion-prob": (collusion_prob, "malicious pair, probabilistic checks"),
    "collusion-full": (collusion_full,
                       "malicious pair, checks + cross-check + evidence"),
    "smoke": (smoke, "tiny run for quick checks"),
}


def make(name: str, seed: int) -> SimConfig:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}")
    return PRESETS[name][0](seed)
