"""Run metrics: sample collection, aggregation and CSV/JSON serialization.

Raw samples are append-only during the run; every summary statistic is
recomputable from the raw CSVs.  CDFs are emitted on a fixed 10 ms grid.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from statistics import mean, median

CDF_GRID_MS = 10.0


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


def percentile(samples: list[float], p: float) -> float:
    """Nearest-rank percentile; p in [0, 100]."""
    if not samples:
        return float("nan")
    s = sorted(samples)
    if p >= 100:
        return s[-1]
    idx = max(0, min(len(s) - 1, int(len(s) * p / 100.0)))
    return s[idx]


def cdf_grid(samples: list[float], grid_ms: float = CDF_GRID_MS) -> list[tuple[float, float]]:
    if not samples:
        return []
    s = sorted(samples)
    top = s[-1]
    grid = []
    g = 0.0
    i = 0
    n = len(s)
    while g < top + grid_ms:
        while i < n and s[i] <= g:
            i += 1
        grid.append((g, i / n))
        g += grid_ms
    return grid


@dataclass
class NodeCounters:
    received_benign: int = 0
    received_bogus: int = 0
    validated: int = 0
    expired: int = 0
    rejected_benign: int = 0
    queued_end: int = 0
    by_type: dict = field(default_factory=lambda: {
        "sig": 0, "self": 0, "coop": 0, "mac_assisted": 0})
    events_received_valid: int = 0
    events_accepted: int = 0
    events_received_total: int = 0
    time_d: float = 0.0
    time_nd: float = 0.0
    time_d_bb: float = 0.0
    time_nd_bb: float = 0.0
    verify_calls: int = 0
    hash_ops: int = 0
    consumed_ms: float = 0.0
    arrival_rate_hz: float = 0.0


@dataclass
class MetricsReport:
    """All samples and counters from one run, plus the config that produced it."""

    config: dict
    duration_ms: float = 0.0
    waiting: list = field(default_factory=list)      # (node, pcid, arrival, accept, wait, type)
    discovery: list = field(default_factory=list)    # (node, pcid, first_rx, discovered, delay)
    events: list = field(default_factory=list)       # (node, event_id, kind, outcome, created, decided, wait)
    affected: list = field(default_factory=list)     # (victim, validator_pcid, net, detected_ms)
    revocations: list = field(default_factory=list)  # (node, pcid, list, t, reason)
    nodes: dict = field(default_factory=dict)        # node -> NodeCounters
    channel: dict = field(default_factory=lambda: {
        "transmitted": 0, "delivered": 0, "range_filtered": 0,
        "loss_dropped": 0, "channel_dropped": 0})
    forged_accepts: int = 0
    bogus_event_verifies: int = 0
    bogus_frames_received: int = 0
    provenance_total: int = 0
    provenance_violations: int = 0
    deliveries: list = field(default_factory=list)   # optional debug delivery log

    # --- aggregation -----------------------------------------------------

    def node(self, name: str) -> NodeCounters:
        if name not in self.nodes:
            self.nodes[name] = NodeCounters()
        return self.nodes[name]

    def benign_waiting(self) -> list[float]:
        return [w[4] for w in self.waiting]

    def expiration_ratio(self, loaded_only: bool = False,
                         threshold_hz: float = 0.0) -> float:
        recv = exp = 0
        for c in self.nodes.values():
            if loaded_only and c.arrival_rate_hz <= threshold_hz:
                continue
            recv += c.received_benign
            exp += c.expired
        return exp / recv if recv else 0.0

    def type_ratios(self) -> dict:
        totals = {"sig": 0, "self": 0, "coop": 0, "mac_assisted": 0}
        for c in self.nodes.values():
            for k, v in c.by_type.items():
                totals[k] += v
        total = sum(totals.values())
        if total == 0:
            return {k: 0.0 for k in totals}
        return {k: v / total for k, v in totals.items()}

    def discovery_delays(self) -> list[float]:
        return [d[4] for d in self.discovery if d[4] is not None]

    def discovery_fraction_within(self, window_ms: float) -> float:
        total = len(self.discovery)
        if total == 0:
            return 0.0
        hit = sum(1 for d in self.discovery
                  if d[4] is not None and d[4] <= window_ms)
        return hit / total

    def event_acceptance_ratio(self) -> float:
        valid = sum(c.events_received_valid for c in self.nodes.values())
        acc = sum(c.events_accepted for c in self.nodes.values())
        return acc / valid if valid else 0.0

    def event_waits(self) -> list[float]:
        return [e[6] for e in self.events if e[3] == "accepted"]

    def affected_counts(self) -> list[int]:
        return [a[2] for a in self.affected]

    def summary(self) -> dict:
        waits = self.benign_waiting()
        ewaits = self.event_waits()
        disc = self.discovery_delays()
        out = {
            "duration_ms": self.duration_ms,
            "scheme": self.config.get("scheme"),
            "seed": self.config.get("seed"),
            "mean_waiting_ms": mean(waits) if waits else None,
            "p50_waiting_ms": percentile(waits, 50) if waits else None,
            "p95_waiting_ms": percentile(waits, 95) if waits else None,
            "expiration_ratio": self.expiration_ratio(),
            "expiration_ratio_loaded": self.expiration_ratio(
                loaded_only=True,
                threshold_hz=1000.0 / self.config.get("tau_ms", 4.0)),
            "type_ratios": self.type_ratios(),
            "discovery_frac_500ms": self.discovery_fraction_within(500.0),
            "discovery_pairs": len(self.discovery),
            "mean_discovery_ms": mean(disc) if disc else None,
            "event_acceptance_ratio": self.event_acceptance_ratio(),
            "mean_event_waiting_ms": mean(ewaits) if ewaits else None,
            "affected_median": median(self.affected_counts())
            if self.affected else None,
            "revocations": len(self.revocations),
            "channel": dict(self.channel),
            "forged_accepts": self.forged_accepts,
            "bogus_event_verifies": self.bogus_event_verifies,
            "bogus_frames_received": self.bogus_frames_received,
            "provenance_total": self.provenance_total,
            "provenance_violations": self.provenance_violations,
            "accounting": self.accounting(),
        }
        return out

    def accounting(self) -> dict:
        """Benign-beacon conservation: received = validated+expired+rejected+queued."""
        recv = sum(c.received_benign for c in self.nodes.values())
        val = sum(c.validated for c in self.nodes.values())
        exp = sum(c.expired for c in self.nodes.values())
        rej = sum(c.rejected_benign for c in self.nodes.values())
        qd = sum(c.queued_end for c in self.nodes.values())
        return {"received_benign": recv, "validated": val, "expired": exp,
                "rejected": rej, "queued_end": qd,
                "balanced": recv == val + exp + rej + qd}


# --- CSV writing -----------------------------------------------------------

def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_report(report: MetricsReport, out_dir: str) -> None:
    os.makedirs(out_dir, exist_ok=True)
    _write_csv(os.path.join(out_dir, "beacon_waiting.csv"),
               ["node", "sender_pcid", "arrival_ms", "accepted_ms",
                "wait_ms", "validation_type"], report.waiting)
    _write_csv(os.path.join(out_dir, "discovery.csv"),
               ["node", "sender_pcid", "first_rx_ms", "discovered_ms",
                "delay_ms"],
               [(n, p, f, d if d is not None else "",
                 w if w is not None else "")
                for n, p, f, d, w in report.discovery])
    _write_csv(os.path.join(out_dir, "events.csv"),
               ["node", "event_id", "kind", "outcome", "created_ms",
                "decided_ms", "wait_ms"], report.events)
    _write_csv(os.path.join(out_dir, "affected.csv"),
               ["victim", "validator_pcid", "affected_net", "detected_ms"],
               [(v, p, n, d if d is not None else "")
                for v, p, n, d in report.affected])
    _write_csv(os.path.join(out_dir, "revocations.csv"),
               ["node", "pcid", "list", "t_ms", "reason"],
               report.revocations)
    _write_csv(os.path.join(out_dir, "node_counters.csv"),
               ["node", "received_benign", "received_bogus", "validated",
                "expired", "rejected_benign", "queued_end", "sig", "self",
                "coop", "mac_assisted", "events_received_valid",
                "events_accepted", "events_received_total", "time_d_ms",
                "time_nd_ms", "time_d_bb_ms", "time_nd_bb_ms",
                "verify_calls", "hash_ops", "consumed_ms",
                "arrival_rate_hz"],
               [(name, c.received_benign, c.received_bogus, c.validated,
                 c.expired, c.rejected_benign, c.queued_end,
                 c.by_type["sig"], c.by_type["self"], c.by_type["coop"],
                 c.by_type["mac_assisted"], c.events_received_valid,
                 c.events_accepted, c.events_received_total, c.time_d,
                 c.time_nd, c.time_d_bb, c.time_nd_bb, c.verify_calls,
                 c.hash_ops, c.consumed_ms, c.arrival_rate_hz)
                for name, c in sorted(report.nodes.items())])
    _write_csv(os.path.join(out_dir, "channel.csv"),
               ["transmitted", "delivered", "range_filtered", "loss_dropped",
                "channel_dropped"],
               [(report.channel["transmitted"], report.channel["delivered"],
                 report.channel["range_filtered"],
                 report.channel["loss_dropped"],
                 report.channel["channel_dropped"])])
    _write_csv(os.path.join(out_dir, "discovery_cdf.csv"),
               ["grid_ms", "fraction"], cdf_grid(report.discovery_delays()))
    _write_csv(os.path.join(out_dir, "waiting_cdf.csv"),
               ["grid_ms", "fraction"], cdf_grid(report.benign_waiting()))
    summary = {"config": report.config, "summary": report.summary()}
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, tuple):
        return list(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")
