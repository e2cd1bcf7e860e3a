"""Deterministic discrete-event simulation core.

One run is single-threaded and fully determined by (config, seed): every
random draw comes from streams derived from the master seed, and the event
loop breaks time ties by insertion order.  The radio is an abstract shared
broadcast channel: serialized airtime plus per-receiver range and loss
filtering.  Each node owns a single-verification-at-a-time CPU whose cost
accounting comes straight from its crypto ledger.
"""

from __future__ import annotations

import hashlib
import heapq
import math
import random
from dataclasses import dataclass, field

from . import adversary, crypto, mobility, sender as sender_mod, wire
from .crypto import BackendMode, CpuLedger, SignatureBackend
from .events import EventHooks, EventState, RxEvent
from .metrics import MetricsReport, NodeCounters
from .params import SimConfig
from .receiver import (BeaconState, Receiver, ReceiverHooks, RxBeacon)
from .sender import SenderState
from .wire import EventKind, EventMessage, IssuerTag, Message, Status


def derive_seed(master: int, tag: str) -> int:
    h = hashlib.sha256(f"{master}:{tag}".encode()).digest()
    return int.from_bytes(h[:8], "little")


def derived_rng(master: int, tag: str) -> random.Random:
    return random.Random(derive_seed(master, tag))


class EventLoop:
    def __init__(self):
        self._heap: list = []
        self._seq = 0

    def schedule(self, t: float, fn, *args) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (t, self._seq, fn, args))

    def run_until(self, t_end: float) -> None:
        heap = self._heap
        while heap and heap[0][0] <= t_end:
            t, _, fn, args = heapq.heappop(heap)
            fn(t, *args)


class Channel:
    """Shared broadcast medium: serialized airtime, range cut, random loss."""

    def __init__(self, cfg: SimConfig, loop: EventLoop, rng: random.Random,
                 stats: dict):
        self.cfg = cfg
        self.loop = loop
        self.rng = rng
        self.stats = stats
        self.busy_until = 0.0
        self.range_sq = cfg.radio.range_m ** 2
        self.nodes: list[Node] = []
        self.static_neighbors: dict[str, list] | None = None

    def airtime_ms(self, nbytes: int) -> float:
        return (nbytes * 8.0 / self.cfg.radio.bitrate_bps) * 1000.0 \
            + self.cfg.radio.frame_overhead_ms

    def freeze_topology(self) -> None:
        """Precompute neighbor lists; valid only for static placements."""
        self.static_neighbors = {}
        for sender in self.nodes:
            receivers, filtered = self._in_range(sender, 0.0)
            self.static_neighbors[sender.name] = (receivers, filtered)

    def _in_range(self, sender: "Node", now: float):
        sx, sy = sender.position(now)
        receivers = []
        filtered = 0
        for node in self.nodes:
            if node is sender:
                continue
            nx, ny = node.position(now)
            if (nx - sx) ** 2 + (ny - sy) ** 2 <= self.range_sq:
                receivers.append(node)
            else:
                filtered += 1
        return receivers, filtered

    def transmit(self, now: float, sender: "Node", payload, nbytes: int) -> None:
        self.stats["transmitted"] += 1
        start = max(self.busy_until, now)
        if start - now > self.cfg.radio.backlog_ms:
            self.stats["channel_dropped"] += 1
            return
        self.busy_until = start + self.airtime_ms(nbytes)
        if self.static_neighbors is not None:
            receivers, filtered = self.static_neighbors[sender.name]
        else:
            receivers, filtered = self._in_range(sender, now)
        self.stats["range_filtered"] += filtered
        self.loop.schedule(self.busy_until, self._deliver, payload, receivers)

    def _deliver(self, now: float, payload, receivers: list) -> None:
        loss = self.cfg.radio.loss
        for node in receivers:
            if loss > 0.0 and self.rng.random() < loss:
                self.stats["loss_dropped"] += 1
                continue
            self.stats["delivered"] += 1
            node.on_frame(payload, now)


@dataclass
class AcceptRecord:
    kind: str
    parent_key: tuple | None
    t: float
    authentic: bool
    retracted: bool = False


class Node:
    """One simulated station: sender + receiver + event pipeline + CPU."""

    def __init__(self, sim: "Simulation", name: str, kind: str,
                 pos_fn, join_ms: float):
        self.sim = sim
        self.name = name
        self.kind = kind
        self.pos_fn = pos_fn
        self.join_ms = join_ms
        cfg = sim.cfg
        self.rng = derived_rng(cfg.seed, f"node:{name}")
        self.ledger = CpuLedger(cfg.tau_ms, cfg.tau_light_ms)
        self.cpu_available = 0.0
        self.worker_busy = False
        self.wake_scheduled = False
        self.sender: SenderState | None = None
        self.partner_pcid: int | None = None
        self.receiver: Receiver | None = None
        self.events: EventState | None = None
        self.flooder: adversary.Flooder | None = None
        self.first_valid_rx: dict[int, float] = {}
        self.discovered_at: dict[int, float] = {}
        self.accepts: dict[tuple, AcceptRecord] = {}
        self.rejected_keys: set[tuple] = set()
        self.affected: dict[int, int] = {}
        self.detected: dict[int, float] = {}
        self.valid_event_ids: set[int] = set()
        self.counters = NodeCounters()
        self.delivery_log: list = []
        self.beaconing = True
        self.record_deliveries = cfg.record_deliveries
        self.report = sim.report

    # --- geometry ---------------------------------------------------------

    def position(self, now: float) -> tuple[float, float]:
        return self.pos_fn(now)

    # --- frame reception ----------------------------------------------------

    def on_frame(self, payload, now: float) -> None:
        if self.receiver is None:
            return
        if self.record_deliveries:
            self.delivery_log.append((now, payload))
        ledger = self.ledger
        before_ops = ledger.hash_ops
        if payload.__class__ is Message:
            if payload.authentic:
                self.counters.received_benign += 1
                pcid = payload.body.pc.pcid
                if pcid not in self.first_valid_rx:
                    self.first_valid_rx[pcid] = now
            else:
                self.counters.received_bogus += 1
                self.report.bogus_frames_received += 1
                if (self.partner_pcid is not None
                        and payload.body.pc.pcid == self.partner_pcid
                        and self.sender is not None):
                    # colluding validator: falsely attest the partner's beacon
                    sender_mod.note_verified(self.sender, payload.pcid,
                                             payload.bid, payload.digest(),
                                             True, payload.body.t)
            self.receiver.receive(payload, now)
        else:
            self.counters.events_received_total += 1
            if not payload.authentic:
                self.report.bogus_frames_received += 1
            elif payload.event_id not in self.valid_event_ids:
                self.valid_event_ids.add(payload.event_id)
                self.counters.events_received_valid += 1
            if self.events is not None:
                self.events.receive(payload, now)
        extra_ops = ledger.hash_ops - before_ops
        if extra_ops:
            extra = extra_ops * ledger.tau_light_ms
            self.cpu_available = max(self.cpu_available, now) + extra
        self.try_start(now)

    # --- CPU worker -----------------------------------------------------------

    def try_start(self, now: float) -> None:
        if self.worker_busy or self.receiver is None:
            return
        if self.cpu_available > now:
            if not self.wake_scheduled:
                self.wake_scheduled = True
                self.sim.loop.schedule(self.cpu_available, self._wake)
            return
        cfg = self.sim.cfg
        if self.events is not None and self.events.queue:
            rx_ev = self.events.next_event(now)
            if rx_ev is not None:
                self.worker_busy = True
                self.cpu_available = now + cfg.tau_ms
                self.sim.loop.schedule(now + cfg.tau_ms, self._finish_event,
                                       rx_ev)
                return
        rx = self.receiver.select_for_verification(now)
        if rx is None:
            return
        self.worker_busy = True
        self.cpu_available = now + cfg.tau_ms
        self.sim.loop.schedule(now + cfg.tau_ms, self._finish_beacon, rx)

    def _wake(self, now: float) -> None:
        self.wake_scheduled = False
        self.try_start(now)

    def _finish_beacon(self, now: float, rx: RxBeacon) -> None:
        ledger = self.ledger
        ops0, ver0 = ledger.hash_ops, ledger.verify_calls
        self.receiver.complete_verification(rx, now)
        extra = ((ledger.hash_ops - ops0) * ledger.tau_light_ms
                 + (ledger.verify_calls - ver0 - 1) * ledger.tau_verify_ms)
        self.worker_busy = False
        self.cpu_available = now + max(0.0, extra)
        self.try_start(now)

    def _finish_event(self, now: float, rx_ev: RxEvent) -> None:
        ledger = self.ledger
        ops0, ver0 = ledger.hash_ops, ledger.verify_calls
        self.events.complete_verification(rx_ev, now)
        extra = ((ledger.hash_ops - ops0) * ledger.tau_light_ms
                 + (ledger.verify_calls - ver0 - 1) * ledger.tau_verify_ms)
        self.worker_busy = False
        self.cpu_available = now + max(0.0, extra)
        self.try_start(now)


class Simulation:
    def __init__(self, cfg: SimConfig):
        cfg.require_valid()
        self.cfg = cfg
        self.loop = EventLoop()
        self.report = MetricsReport(config=_cfg_dict(cfg),
                                    duration_ms=cfg.duration_ms)
        self.backend = SignatureBackend(
            BackendMode.SIMULATED, derived_rng(cfg.seed, "backend"))
        self.channel = Channel(cfg, self.loop,
                               derived_rng(cfg.seed, "channel"),
                               self.report.channel)
        self.directory: dict[int, wire.Pseudonym] = {}
        self.nodes: list[Node] = []
        self.benign: list[Node] = []
        self.validators: list[Node] = []
        self.scn_rng = derived_rng(cfg.seed, "scenario")
        self._evidence_sent: dict[str, set[int]] = {}
        self._build()

    # --- construction -------------------------------------------------------

    def _issue_pc(self, name: str) -> tuple[wire.Pseudonym, bytes, crypto.KeyChain]:
        pair = self.backend.keygen()
        pcid = wire.pcid_from_key(pair.public)
        lifetime = self.cfg.duration_ms + 10 * self.cfg.slot_len_ms
        pc = wire.Pseudonym(pcid, pair.public, 0.0, lifetime,
                            IssuerTag.AUTHENTIC)
        length = int(math.ceil(lifetime / self.cfg.slot_len_ms)) + 2
        chain = crypto.generate_chain(
            derive_seed(self.cfg.seed, f"chain:{name}").to_bytes(8, "little"),
            pcid, length, 0.0, self.cfg.slot_len_ms)
        self.directory[pcid] = pc
        return pc, pair.private, chain

    def _build(self) -> None:
        cfg = self.cfg
        positions = self._positions()
        joins = self._joins()
        for i in range(cfg.n_benign):
            name = f"b{i:02d}"
            node = Node(self, name, "benign", positions[name], joins[name])
            self._attach_protocol(node)
            self.nodes.append(node)
            self.benign.append(node)
        for i in range(cfg.adversary.n_flooders):
            name = f"fl{i}"
            node = Node(self, name, "flooder", positions[name], 0.0)
            node.flooder = adversary.Flooder(
                derived_rng(cfg.seed, f"flood:{name}"), cfg.slot_len_ms)
            self.nodes.append(node)
        for i in range(cfg.adversary.n_malicious_pairs):
            s_name, v_name = f"ms{i}", f"mv{i}"
            s_node = Node(self, s_name, "mal_sender", positions[s_name],
                          joins[s_name])
            self._attach_protocol(s_node)
            v_node = Node(self, v_name, "mal_validator", positions[v_name],
                          joins[v_name])
            self._attach_protocol(v_node, validator=True)
            v_node.partner_pcid = s_node.sender.pc.pcid
            self.nodes.append(s_node)
            self.nodes.append(v_node)
            self.validators.append(v_node)
        self.channel.nodes = self.nodes
        if cfg.mobility.kind == "static_grid":
            self.channel.freeze_topology()
        if cfg.duration_ms <= 0:
            return
        for node in self.nodes:
            self._schedule_node(node)
        sweep_step = 100.0
        t = sweep_step
        while t <= cfg.duration_ms:
            self.loop.schedule(t, self._sweep)
            t += sweep_step

    def _positions(self) -> dict[str, mobility.PositionFn]:
        cfg = self.cfg
        out: dict[str, mobility.PositionFn] = {}
        names = [f"b{i:02d}" for i in range(cfg.n_benign)]
        adv_names = [f"fl{i}" for i in range(cfg.adversary.n_flooders)]
        for i in range(cfg.adversary.n_malicious_pairs):
            adv_names += [f"ms{i}", f"mv{i}"]
        if cfg.mobility.kind == "static_grid":
            grid = mobility.grid_positions(cfg.n_benign, cfg.mobility.spacing_m)
            for name, fn in zip(names, grid):
                out[name] = fn
            side = max(1, math.ceil(math.sqrt(cfg.n_benign)))
            cx = (side - 1) * cfg.mobility.spacing_m / 2
            for j, name in enumerate(adv_names):
                dx = (j % 4) * 7.0 - 10.0
                dy = (j // 4) * 7.0 - 10.0
                out[name] = mobility.static_position(cx + dx, cx + dy)
        elif cfg.mobility.kind == "random_waypoint":
            rng = derived_rng(cfg.seed, "mobility")
            region = (cfg.region_w_m, cfg.region_h_m)
            for name in names + adv_names:
                out[name] = mobility.random_waypoint(
                    rng, cfg.duration_ms, region,
                    cfg.mobility.speed_min, cfg.mobility.speed_max)
        else:
            trace = mobility.load_trace(cfg.mobility.trace_path)
            for name in names + adv_names:
                if name not in trace:
                    raise mobility.MobilityError(f"trace missing node {name}")
                out[name] = trace[name]
        return out

    def _joins(self) -> dict[str, float]:
        cfg = self.cfg
        rng = derived_rng(cfg.seed, "joins")
        out = {}
        for i in range(cfg.n_benign):
            out[f"b{i:02d}"] = rng.uniform(0.0, cfg.join_stagger_ms) \
                if cfg.join_stagger_ms > 0 else 0.0
        for i in range(cfg.adversary.n_malicious_pairs):
            out[f"ms{i}"] = rng.uniform(0.0, 1000.0)
            out[f"mv{i}"] = rng.uniform(0.0, 1000.0)
        return out

    def _attach_protocol(self, node: Node, validator: bool = False) -> None:
        cfg = self.cfg
        pc, priv, chain = self._issue_pc(node.name)
        node.sender = SenderState(
            pc, chain, priv, self.backend, cfg.alpha, cfg.k,
            attach_facilitators=cfg.scheme == "FACILITATED")
        hooks = ReceiverHooks(
            note_verified=self._make_note_hook(node, validator),
            cache_event_facilitator=lambda dg, src, now, n=node:
                n.events.cache_facilitator(dg, src, now),
            on_accept=lambda b, now, n=node: self._on_accept(n, b, now),
            on_retract=lambda b, now, n=node: self._on_retract(n, b, now),
            on_revoke=lambda pcid, now, reason, ev, lst, n=node:
                self._on_revoke(n, pcid, now, reason, ev, lst),
            on_expire=lambda b, now, n=node: self._on_expire(n, b, now),
            on_reject=lambda b, now, n=node: self._on_reject(n, b, now),
            on_discover=lambda pcid, now, n=node:
                n.discovered_at.setdefault(pcid, now),
        )
        node.receiver = Receiver(cfg, self.backend, node.ledger, node.rng,
                                 hooks)
        ev_hooks = EventHooks(
            on_accept=lambda rx, now, n=node: self._on_event_accept(n, rx, now),
            on_reject=lambda rx, now, n=node: self._on_event_decided(
                n, rx, now, "rejected"),
            on_expired=lambda rx, now, n=node: self._on_event_decided(
                n, rx, now, "expired"),
            revoke=lambda pcid, now, reason, ev, n=node:
                n.receiver.revoke(pcid, now, reason, ev),
            is_revoked=lambda pcid, n=node: pcid in n.receiver.prl,
        )
        node.events = EventState(cfg, self.backend, node.ledger, ev_hooks,
                                 self.directory)

    def _make_note_hook(self, node: Node, validator: bool):
        def hook(pcid, bid, digest, validity, t):
            if node.sender is None:
                return
            if validator:
                # a colluding validator dedicates its attestation slots to
                # the partner and never badmouths it; the false positives
                # are injected at reception instead
                return
            sender_mod.note_verified(node.sender, pcid, bid, digest,
                                     validity, t)
        return hook

    # --- node schedules ---------------------------------------------------------

    def _schedule_node(self, node: Node) -> None:
        cfg = self.cfg
        if node.kind == "flooder":
            period = 1000.0 / cfg.adversary.gamma_dos_hz
            start = node.rng.uniform(0, period)
            self.loop.schedule(start, self._flood_tick, node, 0)
            return
        period = 1000.0 / cfg.gamma_hz
        first = node.join_ms + node.rng.uniform(0, period)
        if first < cfg.slot_len_ms:
            first += cfg.slot_len_ms
        self.loop.schedule(first, self._beacon_tick, node)
        if cfg.denm.enabled and node.kind == "benign":
            gap = node.rng.expovariate(1.0 / cfg.denm.mean_interval_ms)
            self.loop.schedule(node.join_ms + gap, self._denm_tick, node)

    def _beacon_tick(self, now: float, node: Node) -> None:
        cfg = self.cfg
        if now > cfg.duration_ms or not node.beaconing:
            return
        x, y = node.position(now)
        status = Status(x, y, 0.0, 0.0)
        attacking = (node.kind == "mal_sender"
                     and now >= cfg.adversary.attack_warmup_ms)
        try:
            if attacking:
                msg = adversary.bogus_chained_beacon(node.sender, now,
                                                     node.rng, status)
                plans = []
            else:
                msg, plans = sender_mod.next_beacon(node.sender, now, status)
        except sender_mod.ChainExhausted:
            node.beaconing = False
            return
        except ValueError:
            # same-slot tick (scheduler jitter); skip and realign
            self.loop.schedule(now + 1000.0 / cfg.gamma_hz,
                               self._beacon_tick, node)
            return
        self.channel.transmit(now, node, msg,
                              max(wire.structural_len(msg), cfg.frame_size))
        for plan, is_facilitator in plans:
            if not is_facilitator:
                for t_copy in plan.copy_times(now):
                    self.loop.schedule(t_copy, self._event_tx, node, plan.event)
        self.loop.schedule(now + 1000.0 / cfg.gamma_hz, self._beacon_tick, node)

    def _event_tx(self, now: float, node: Node, ev: EventMessage) -> None:
        if now > ev.created_at + ev.lifetime_ms or now > self.cfg.duration_ms:
            return
        self.channel.transmit(now, node, ev,
                              max(wire.event_structural_len(ev),
                                  self.cfg.frame_size))

    def _denm_tick(self, now: float, node: Node) -> None:
        cfg = self.cfg
        if now > cfg.duration_ms:
            return
        ev = self._make_event(node, EventKind.DENM,
                              node.rng.randbytes(cfg.denm.body_len), now,
                              cfg.denm.lifetime_ms)
        if cfg.scheme == "FACILITATED":
            sender_mod.schedule_event(node.sender, ev, now, cfg.beta1,
                                      cfg.beta2, cfg.event_tx_offset_ms)
        else:
            for i in range(cfg.beta2):
                self.loop.schedule(now + i * 100.0, self._event_tx, node, ev)
        gap = node.rng.expovariate(1.0 / cfg.denm.mean_interval_ms)
        self.loop.schedule(now + gap, self._denm_tick, node)

    def _make_event(self, node: Node, kind: EventKind, body: bytes,
                    now: float, lifetime_ms: float) -> EventMessage:
        ev = EventMessage(derive_seed(self.cfg.seed,
                                      f"ev:{node.name}:{now}") >> 1,
                          kind, now, lifetime_ms, body, node.sender.pc)
        ev.signature = self.backend.sign(node.sender.private_key,
                                         ev.signed_bytes())
        return ev

    def _flood_tick(self, now: float, node: Node, seq: int) -> None:
        cfg = self.cfg
        if now > cfg.duration_ms:
            return
        mix = cfg.adversary.flood_mix
        send_denm = mix == "denms" or (mix == "mixed" and seq % 2 == 1)
        if send_denm:
            ev = node.flooder.bogus_denm(now, cfg.denm.lifetime_ms,
                                         cfg.denm.body_len)
            self.channel.transmit(now, node, ev,
                                  max(wire.event_structural_len(ev),
                                      cfg.frame_size))
        else:
            msg = node.flooder.bogus_beacon(now, node.position(now))
            self.channel.transmit(now, node, msg,
                                  max(wire.structural_len(msg),
                                      cfg.frame_size))
        # jittered spacing: keeps the mean rate while avoiding phase lock
        # with the 1/tau verification cadence of the victims
        gap = (1000.0 / cfg.adversary.gamma_dos_hz) * node.rng.uniform(0.5, 1.5)
        self.loop.schedule(now + gap, self._flood_tick, node, seq + 1)

    def _sweep(self, now: float) -> None:
        for node in self.nodes:
            if node.receiver is not None:
                node.receiver.expire_sweep(now)

    # --- hooks ------------------------------------------------------------------

    def _on_accept(self, node: Node, b: RxBeacon, now: float) -> None:
        key = (b.pcid, b.bid)
        node.accepts[key] = AcceptRecord(b.accepted_kind, b.parent_key, now,
                                         b.msg.authentic)
        if b.msg.body.pc.issuer_tag is not IssuerTag.AUTHENTIC:
            self.report.forged_accepts += 1
        if b.msg.authentic:
            if key in node.rejected_keys:
                node.rejected_keys.discard(key)
                node.counters.rejected_benign -= 1
            node.counters.validated += 1
            tkey = "mac_assisted" if b.mac_assisted and b.accepted_kind == "sig" \
                else b.accepted_kind
            node.counters.by_type[tkey] += 1
            self.report.waiting.append(
                (node.name, b.pcid, b.arrival, now, now - b.arrival,
                 b.accepted_kind))
            if self.cfg.scheme != "FACILITATED" \
                    and b.pcid not in node.discovered_at:
                node.discovered_at[b.pcid] = now
        else:
            validator = b.parent_key[0] if b.parent_key else None
            if validator is not None:
                node.affected[validator] = node.affected.get(validator, 0) + 1

    def _on_retract(self, node: Node, b: RxBeacon, now: float) -> None:
        key = (b.pcid, b.bid)
        rec = node.accepts.get(key)
        if rec is not None:
            rec.retracted = True
        if b.msg.authentic:
            node.counters.validated -= 1
        elif b.parent_key:
            validator = b.parent_key[0]
            if validator in node.affected:
                node.affected[validator] -= 1

    def _on_reject(self, node: Node, b: RxBeacon, now: float) -> None:
        if b.msg.authentic:
            key = (b.pcid, b.bid)
            if key not in node.rejected_keys:
                node.rejected_keys.add(key)
                node.counters.rejected_benign += 1

    def _on_expire(self, node: Node, b: RxBeacon, now: float) -> None:
        if b.msg.authentic:
            node.counters.expired += 1

    def _on_revoke(self, node: Node, pcid: int, now: float, reason: str,
                   evidence, lst: str) -> None:
        self.report.revocations.append((node.name, pcid, lst, now, reason))
        if lst != "prl":
            return
        node.detected.setdefault(pcid, now)
        if (self.cfg.evidence and self.cfg.scheme == "FACILITATED"
                and node.kind == "benign" and evidence is not None
                and node.sender is not None):
            sent = self._evidence_sent.setdefault(node.name, set())
            if pcid in sent:
                return
            sent.add(pcid)
            bogus, carrier = evidence
            body = wire.encode_evidence_body(bogus, carrier,
                                             self.cfg.frame_size)
            ev = self._make_event(node, EventKind.EVIDENCE, body, now,
                                  lifetime_ms=4000.0)
            try:
                sender_mod.schedule_event(node.sender, ev, now,
                                          self.cfg.beta1, self.cfg.beta2,
                                          self.cfg.event_tx_offset_ms)
            except ValueError:
                pass

    def _on_event_accept(self, node: Node, rx: RxEvent, now: float) -> None:
        ev = rx.ev
        if ev.authentic:
            node.counters.events_accepted += 1
            self.report.events.append(
                (node.name, ev.event_id, ev.kind.value, "accepted",
                 ev.created_at, now, now - ev.created_at))

    def _on_event_decided(self, node: Node, rx: RxEvent, now: float,
                          outcome: str) -> None:
        ev = rx.ev
        if ev.authentic:
            self.report.events.append(
                (node.name, ev.event_id, ev.kind.value, outcome,
                 ev.created_at, now, now - ev.created_at))

    # --- run --------------------------------------------------------------------

    def run(self) -> MetricsReport:
        cfg = self.cfg
        self.loop.run_until(cfg.duration_ms)
        self._finalize()
        return self.report

    def _finalize(self) -> None:
        cfg = self.cfg
        report = self.report
        authentic_pcids = {n.sender.pc.pcid for n in self.nodes
                           if n.sender is not None}
        for node in self.nodes:
            if node.receiver is None:
                continue
            c = node.counters
            c.time_d = node.ledger.time_d
            c.time_nd = node.ledger.time_nd
            c.time_d_bb = node.ledger.time_d_bb
            c.time_nd_bb = node.ledger.time_nd_bb
            c.verify_calls = node.ledger.verify_calls
            c.hash_ops = node.ledger.hash_ops
            c.consumed_ms = node.ledger.consumed_ms
            if cfg.duration_ms > 0:
                c.arrival_rate_hz = ((c.received_benign + c.received_bogus)
                                     * 1000.0 / cfg.duration_ms)
            for b in node.receiver.queued_pending():
                if b.msg.authentic:
                    c.queued_end += 1
            report.nodes[node.name] = c
            # discovery samples
            for pcid, t0 in sorted(node.first_valid_rx.items()):
                if node.sender is not None and pcid == node.sender.pc.pcid:
                    continue
                if pcid not in authentic_pcids:
                    continue
                t_disc = node.discovered_at.get(pcid)
                delay = t_disc - t0 if t_disc is not None else None
                report.discovery.append(
                    (node.name, pcid, t0,
                     t_disc if t_disc is not None else None, delay))
            report.bogus_event_verifies += node.events.bogus_verified \
                if node.events is not None else 0
        # affected pairs: every (benign victim, malicious validator) combo
        for victim in self.benign:
            for val in self.validators:
                vpcid = val.sender.pc.pcid
                count = victim.affected.get(vpcid, 0)
                detected = victim.detected.get(vpcid)
                report.affected.append((victim.name, vpcid, count, detected))
        self._audit_provenance()
        if cfg.record_deliveries:
            for node in self.nodes:
                for t, payload in node.delivery_log:
                    report.deliveries.append((node.name, t, payload))

    def _audit_provenance(self) -> None:
        """Every accepted beacon must trace back to an own signature verification."""
        for node in self.nodes:
            if node.receiver is None:
                continue
            for key, rec in node.accepts.items():
                if rec.retracted:
                    continue
                self.report.provenance_total += 1
                seen = set()
                cur_key, cur = key, rec
                ok = False
                while True:
                    if cur.kind == "sig":
                        ok = not cur.retracted
                        break
                    if cur.parent_key is None or cur.parent_key in seen:
                        break
                    seen.add(cur.parent_key)
                    nxt = node.accepts.get(cur.parent_key)
                    if nxt is None or nxt.retracted:
                        break
                    cur_key, cur = cur.parent_key, nxt
                if not ok:
                    self.report.provenance_violations += 1


def _cfg_dict(cfg: SimConfig) -> dict:
    from .params import config_to_dict

    return config_to_dict(cfg)


def run(cfg: SimConfig) -> MetricsReport:
    """Execute one simulation run; byte-identical outputs for identical configs."""
    return Simulation(cfg).run()
