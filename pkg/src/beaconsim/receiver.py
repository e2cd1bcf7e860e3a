"""Honest-node receive path.

Implements DoS-resilient beacon reception (pseudonym/chain filtering),
semi-randomized LCFS selection with explicit CPU-time ratios for
discovered vs. non-discovered senders, MAC validation, self-chained and
cooperative verification, verifier cross-checking with local revocation,
and lifetime-based expiry.

Acceptance is strictly non-repudiable: a beacon is only ever accepted via
its own signature, a SELF link from a signature-verified beacon of the
same sender, or a COOP attestation carried by a signature-verified
neighbour beacon (subject to probabilistic re-checking).  MAC validity is
used purely for filtering and cross-checking.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from . import crypto, wire
from .crypto import CpuLedger, SignatureBackend
from .wire import FacilitatorKind, IssuerTag, Message


class VerifierKind(Enum):
    SIG = "sig"
    SELF = "self"
    COOP = "coop"
    MAC = "mac"


DEFINITIVE = (VerifierKind.SIG, VerifierKind.SELF)


class CheckFlag(Enum):
    DISCOVERY = "discovery"
    PROBCHECK = "probcheck"
    CONFLICT = "conflict"


class BeaconState(Enum):
    PENDING = "pending"
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    EXPIRED = "expired"


@dataclass(slots=True)
class Verifier:
    kind: VerifierKind
    validity: bool
    source_pcid: int | None = None
    source_bid: int | None = None
    source_msg: Message | None = None


@dataclass(slots=True)
class RxBeacon:
    """Receiver-local view of one beacon: arrival metadata and verdict state."""

    msg: Message
    arrival: float
    t: float
    slot: int
    pcid: int
    bid: int
    expire_at: float
    verifiers: list[Verifier] = field(default_factory=list)
    state: BeaconState = BeaconState.PENDING
    in_recv: bool = False
    in_check: bool = False
    in_flight: bool = False
    check_flag: CheckFlag | None = None
    accepted_kind: str | None = None
    mac_assisted: bool = False
    mac_checked: bool = False
    provisional: bool = False
    definitive: bool = False
    parent_key: tuple[int, int] | None = None
    pool_tag: str = ""
    coop_kind_hint: str = ""
    rec: "NeighborRec | None" = None

    def digest(self) -> bytes:
        return self.msg.digest()


@dataclass(slots=True)
class NeighborRec:
    pc: wire.Pseudonym
    discovered: bool = False
    latest_slot: int = -1
    key_slot: int = -1
    latest_key: bytes | None = None
    latest_t: float = 0.0
    newest: RxBeacon | None = None
    by_bid: dict[int, RxBeacon] = field(default_factory=dict)
    seen_keys: set[bytes] = field(default_factory=set)


class DropReason(Enum):
    PRL = "prl"
    REPLAY_KEY = "replay_key"
    CHAIN = "chain"
    SLOT_DUP = "slot_dup"
    STALE = "stale"
    DUP_BID = "dup_bid"


@dataclass
class ReceiverHooks:
    """Engine-side callbacks; all optional so the receiver is testable alone."""

    note_verified: Callable | None = None
    cache_event_facilitator: Callable | None = None
    on_accept: Callable | None = None
    on_retract: Callable | None = None
    on_revoke: Callable | None = None
    on_expire: Callable | None = None
    on_drop: Callable | None = None
    on_reject: Callable | None = None
    on_discover: Callable | None = None


class Receiver:
    """Per-node receive-side protocol state machine."""

    def __init__(self, cfg, backend: SignatureBackend, ledger: CpuLedger,
                 rng, hooks: ReceiverHooks | None = None):
        self.cfg = cfg
        self.backend = backend
        self.ledger = ledger
        self.rng = rng
        self.hooks = hooks or ReceiverHooks()
        self.scheme = cfg.scheme
        self.slot_len = cfg.slot_len_ms
        self.t_blife = cfg.t_blife_ms
        self.replay_window = cfg.replay_window_ms
        self.max_gap = cfg.max_chain_gap_slots
        self.recs: dict[int, NeighborRec] = {}
        self.discovered: set[int] = set()
        self.prl: set[int] = set()
        self.krl: set[int] = set()
        self.queue_recv: deque[RxBeacon] = deque()
        self.queue_check: deque[RxBeacon] = deque()
        self.expiry: deque[RxBeacon] = deque()
        self.pool_d: list[RxBeacon] = []
        self.pool_nd: list[RxBeacon] = []
        self._pool_start_d = 0
        self._pool_start_nd = 0
        self.last_both_backlogged = False

    # ----- reception ------------------------------------------------------

    def receive(self, msg: Message, now: float) -> RxBeacon | DropReason:
        pcid = msg.body.pc.pcid
        if pcid in self.prl:
            self._drop(msg, now, DropReason.PRL)
            return DropReason.PRL
        t = msg.body.t
        rx = RxBeacon(msg, now, t, int(t // self.slot_len), pcid,
                      msg.body.bid, now + self.t_blife)

        if self.scheme != "FACILITATED":
            self._enqueue_recv(rx)
            return rx

        if not (now - self.replay_window <= t <= now + self.slot_len):
            self._drop(msg, now, DropReason.STALE)
            return DropReason.STALE

        rec = self.recs.get(pcid)
        if rec is not None and rec.discovered:
            return self._receive_discovered(rx, rec, now)
        return self._receive_undiscovered(rx, rec, now)

    def _receive_discovered(self, rx: RxBeacon, rec: NeighborRec,
                            now: float) -> RxBeacon | DropReason:
        gap = rx.slot - rec.latest_slot
        if gap <= 0:
            # at most one beacon per (pseudonym, slot); replays and
            # same-slot masquerades die here at zero signature cost
            reason = DropReason.SLOT_DUP if gap == 0 else DropReason.REPLAY_KEY
            self._drop(rx.msg, now, reason)
            return reason
        if rec.latest_key is None or not crypto.chain_check(
                rx.msg.body.disclosed_key, rec.latest_key, gap,
                self.max_gap, self.ledger):
            if gap > self.max_gap:
                # stale contact: treat the sender as new again
                self._demote(rec)
                return self._receive_undiscovered(rx, rec, now)
            self._drop(rx.msg, now, DropReason.CHAIN)
            return DropReason.CHAIN
        prev = rec.newest
        rec.latest_slot = rx.slot
        rec.key_slot = rx.slot - 1
        rec.latest_key = rx.msg.body.disclosed_key
        rec.latest_t = rx.t
        rec.newest = rx
        rec.by_bid[rx.bid] = rx
        rx.rec = rec
        self._enqueue_recv(rx, discovered=True)
        if prev is not None:
            self.validate_mac(prev, now)
        return rx

    def _receive_undiscovered(self, rx: RxBeacon, rec: NeighborRec | None,
                              now: float) -> RxBeacon | DropReason:
        if rec is None:
            rec = NeighborRec(rx.msg.body.pc)
            self.recs[rx.pcid] = rec
        key = rx.msg.body.disclosed_key
        if key in rec.seen_keys:
            self._drop(rx.msg, now, DropReason.REPLAY_KEY)
            return DropReason.REPLAY_KEY
        if rx.bid in rec.by_bid:
            self._drop(rx.msg, now, DropReason.DUP_BID)
            return DropReason.DUP_BID
        rec.seen_keys.add(key)
        rec.by_bid[rx.bid] = rx
        rx.rec = rec
        self._enqueue_recv(rx)
        return rx

    def _demote(self, rec: NeighborRec) -> None:
        rec.discovered = False
        self.discovered.discard(rec.pc.pcid)
        rec.latest_slot = -1
        rec.key_slot = -1
        rec.latest_key = None
        rec.newest = None

    def _enqueue_recv(self, rx: RxBeacon, discovered: bool = False) -> None:
        rx.in_recv = True
        self.queue_recv.append(rx)
        self.expiry.append(rx)
        if self.scheme == "FACILITATED":
            if discovered:
                rx.pool_tag = "d"
                self.pool_d.append(rx)
            else:
                rx.pool_tag = "nd"
                self.pool_nd.append(rx)

    def _drop(self, msg: Message, now: float, reason: DropReason) -> None:
        if self.hooks.on_drop:
            self.hooks.on_drop(msg, now, reason)

    # ----- selection ------------------------------------------------------

    def _advance_front(self, pool: list[RxBeacon], tag: str, start: int,
                       cut: float) -> int:
        pending = BeaconState.PENDING
        n = len(pool)
        while start < n:
            b = pool[start]
            if (b.t > cut and b.in_recv and b.state is pending
                    and b.pool_tag == tag):
                break
            start += 1
        if start > 4096:
            del pool[:start]
            start = 0
        return start

    def _pick_fresh(self, pool: list[RxBeacon], tag: str, start: int,
                    cut: float) -> RxBeacon | None:
        """Uniform draw among live fresh beacons of one class.

        Entries are roughly timestamp-ordered, so after the front pointer
        everything is fresh and misses are dead entries: rejection sampling
        stays uniform.  A short linear fallback handles sparse windows.
        """
        n = len(pool)
        if start >= n:
            return None
        pending = BeaconState.PENDING
        rand = self.rng.random
        span = n - start
        for _ in range(8):
            b = pool[start + int(rand() * span)]
            if (b.t > cut and b.in_recv and b.state is pending
                    and b.pool_tag == tag):
                return b
        cands = [b for b in pool[start:]
                 if b.t > cut and b.in_recv and b.state is pending
                 and b.pool_tag == tag]
        if not cands:
            return None
        return cands[int(rand() * len(cands))]

    def select_for_verification(self, now: float) -> RxBeacon | None:
        """Pick the next beacon to signature-verify, or None when idle."""
        if self.scheme != "FACILITATED":
            return self._select_baseline(now)

        while self.queue_check:
            head = self.queue_check[0]
            if (not head.in_check or head.definitive
                    or head.state is BeaconState.EXPIRED):
                self.queue_check.popleft()
                continue
            if (head.check_flag is CheckFlag.DISCOVERY
                    and head.state is BeaconState.PENDING
                    and head.pcid in self.discovered
                    and any(v.kind is VerifierKind.COOP and v.validity
                            for v in head.verifiers)):
                if self.rng.random() < 1.0 - self.cfg.pr_check:
                    self.queue_check.popleft()
                    head.in_check = False
                    best = next(v for v in head.verifiers
                                if v.kind is VerifierKind.COOP and v.validity)
                    self._accept(head, "coop",
                                 (best.source_pcid, best.source_bid), now,
                                 provisional=True)
                    continue
            self.queue_check.popleft()
            head.in_check = False
            head.in_flight = True
            return head

        cut = now - self.slot_len
        self._pool_start_d = self._advance_front(self.pool_d, "d",
                                                 self._pool_start_d, cut)
        self._pool_start_nd = self._advance_front(self.pool_nd, "nd",
                                                  self._pool_start_nd, cut)
        cand_d = self._pick_fresh(self.pool_d, "d", self._pool_start_d, cut)
        cand_nd = self._pick_fresh(self.pool_nd, "nd", self._pool_start_nd,
                                   cut)
        self.last_both_backlogged = cand_d is not None and cand_nd is not None
        ledger = self.ledger
        total = ledger.time_d + ledger.time_nd
        want_d = total == 0 or ledger.time_d / total <= self.cfg.ratio_d
        chosen = (cand_d or cand_nd) if want_d else (cand_nd or cand_d)
        if chosen is None:
            chosen = self._lcfs_head(now)
        if chosen is not None:
            chosen.in_recv = False
            chosen.in_flight = True
        return chosen

    def _expire_now(self, b: RxBeacon, now: float) -> None:
        b.state = BeaconState.EXPIRED
        b.in_recv = False
        b.in_check = False
        if self.hooks.on_expire:
            self.hooks.on_expire(b, now)

    def _lcfs_head(self, now: float) -> RxBeacon | None:
        while self.queue_recv:
            b = self.queue_recv[-1]
            if b.in_recv and b.state is BeaconState.PENDING:
                if b.expire_at <= now:
                    self._expire_now(b, now)
                    self.queue_recv.pop()
                    continue
                return b
            self.queue_recv.pop()
        return None

    def _select_baseline(self, now: float) -> RxBeacon | None:
        q = self.queue_recv
        newest_first = self.scheme == "BASELINE_LCFS"
        while q:
            b = q[-1] if newest_first else q[0]
            if b.in_recv and b.state is BeaconState.PENDING:
                if b.expire_at <= now:
                    self._expire_now(b, now)
                else:
                    b.in_recv = False
                    b.in_flight = True
                    return b
            if newest_first:
                q.pop()
            else:
                q.popleft()
        return None

    # ----- signature verification outcome ---------------------------------

    def complete_verification(self, rx: RxBeacon, now: float) -> bool:
        """Apply the outcome of the signature verification of ``rx``."""
        rx.in_flight = False
        validity = self.backend.verify(rx.msg.body.pc.public_key,
                                       rx.msg.body_bytes(), rx.msg.signature,
                                       self.ledger)
        if self.scheme != "FACILITATED":
            if validity:
                self._accept(rx, "sig", None, now)
            else:
                self._reject(rx, now, definitive=True)
            return validity

        was_discovered = rx.pcid in self.discovered
        self.ledger.charge_class(was_discovered, self.last_both_backlogged)
        allow_revoke = self.cfg.cross_check or rx.check_flag is not None

        if validity:
            if rx.provisional and rx.state is BeaconState.ACCEPTED:
                # probabilistic check confirmed a cooperative acceptance
                pass
            elif rx.state is BeaconState.PENDING or rx.state is BeaconState.REJECTED:
                self._accept(rx, "sig", None, now,
                             mac_assisted=rx.coop_kind_hint == "mac")
            self._install_definitive(
                rx, Verifier(VerifierKind.SIG, True), now, allow_revoke)
            rx.provisional = False
            if self.hooks.note_verified:
                self.hooks.note_verified(rx.pcid, rx.bid, rx.digest(), True,
                                         rx.t)
            self.ledger.charge_hash(1)  # digest for the cooperative note
            if not was_discovered:
                self._discover(rx, now)
            self.apply_self(rx, now)
            self.apply_coop(rx, VerifierKind.SIG, now)
        else:
            if rx.provisional and rx.state is BeaconState.ACCEPTED:
                self._retract(rx, now)
            self._install_definitive(
                rx, Verifier(VerifierKind.SIG, False), now, allow_revoke)
            self._reject(rx, now, definitive=True)
            if was_discovered:
                if self.hooks.note_verified:
                    self.hooks.note_verified(rx.pcid, rx.bid, rx.digest(),
                                             False, rx.t)
                self.ledger.charge_hash(1)
        return validity

    def _discover(self, rx: RxBeacon, now: float) -> None:
        rec = self.recs.get(rx.pcid)
        if rec is None:
            rec = NeighborRec(rx.msg.body.pc)
            self.recs[rx.pcid] = rec
        rec.discovered = True
        self.discovered.add(rx.pcid)
        if self.hooks.on_discover:
            self.hooks.on_discover(rx.pcid, now)
        rec.latest_slot = rx.slot
        rec.key_slot = rx.slot - 1
        rec.latest_key = rx.msg.body.disclosed_key
        rec.latest_t = rx.t
        rec.newest = rx
        others = sorted((b for b in rec.by_bid.values()
                         if b is not rx and b.state is not BeaconState.EXPIRED),
                        key=lambda b: -b.slot)
        for b in others:
            if b.slot > rx.slot:
                gap = b.slot - rx.slot
                if crypto.chain_check(b.msg.body.disclosed_key,
                                      rx.msg.body.disclosed_key, gap,
                                      self.cfg.max_chain_gap_slots,
                                      self.ledger):
                    if b.slot > rec.latest_slot:
                        rec.latest_slot = b.slot
                        rec.key_slot = b.slot - 1
                        rec.latest_key = b.msg.body.disclosed_key
                        rec.latest_t = b.t
                        rec.newest = b
                else:
                    self._evict(b, now, DropReason.CHAIN)
            elif b.slot == rx.slot:
                self._evict(b, now, DropReason.SLOT_DUP)
        for b in others:
            if b.state is BeaconState.PENDING and b.slot < rec.key_slot + 1:
                self.validate_mac(b, now)
        # promote surviving queued beacons into the discovered class
        for b in rec.by_bid.values():
            if b.in_recv and b.pool_tag == "nd":
                b.pool_tag = "d"
                self.pool_d.append(b)

    def _evict(self, b: RxBeacon, now: float, reason: DropReason) -> None:
        if b.state is BeaconState.PENDING:
            b.state = BeaconState.REJECTED
            b.in_recv = False
            b.in_check = False
            self._drop(b.msg, now, reason)

    # ----- MAC validation ---------------------------------------------------

    def validate_mac(self, b: RxBeacon, now: float) -> None:
        """Check a cached beacon's MAC once a later key disclosure covers it."""
        if b.mac_checked or b.state is BeaconState.EXPIRED:
            return
        rec = self.recs.get(b.pcid)
        if rec is None or not rec.discovered or rec.latest_key is None:
            return
        steps = rec.key_slot - b.slot
        if steps < 0:
            return
        key = rec.latest_key
        for _ in range(steps):
            key = crypto.chain_hash(key)
        validity = crypto.compute_mac(crypto.mac_key(key),
                                      b.msg.body_bytes()) == b.msg.mac
        self.ledger.charge_hash(steps + 2)
        b.mac_checked = True
        v = Verifier(VerifierKind.MAC, validity, b.pcid, b.bid, b.msg)
        if validity:
            if b.pcid not in self.krl:
                self.apply_coop(b, VerifierKind.MAC, now)
            self._add_verifier(b, v, now)
        else:
            self._add_verifier(b, v, now)

    # ----- self-chained verification ---------------------------------------

    def apply_self(self, carrier: RxBeacon, now: float) -> None:
        rec = self.recs.get(carrier.pcid)
        if rec is None:
            return
        for f in carrier.msg.body.facilitators:
            if f.kind is not FacilitatorKind.SELF:
                continue
            b = rec.by_bid.get(f.bid)
            if b is None or b is carrier or b.definitive:
                continue
            if b.state is BeaconState.EXPIRED:
                continue
            ok = b.digest() == f.digest
            self.ledger.charge_hash(1)
            v = Verifier(VerifierKind.SELF, ok, carrier.pcid, carrier.bid,
                         carrier.msg)
            if ok:
                accepted_before = b.state is BeaconState.ACCEPTED
                self._install_definitive(b, v, now, self.cfg.cross_check)
                if not accepted_before:
                    self._accept(b, "self", carrier, now)
                b.provisional = False
                self.apply_self(b, now)
                self.apply_coop(b, VerifierKind.SELF, now)
            else:
                if b.provisional and b.state is BeaconState.ACCEPTED:
                    self._retract(b, now)
                self._install_definitive(b, v, now, self.cfg.cross_check)
                self._reject(b, now, definitive=True)

    # ----- cooperative verification -----------------------------------------

    def apply_coop(self, carrier: RxBeacon, carrier_kind: VerifierKind,
                   now: float) -> None:
        for f in carrier.msg.body.facilitators:
            if f.kind is not FacilitatorKind.COOP:
                continue
            if carrier.pcid in self.prl:
                continue
            rec = self.recs.get(f.pcid)
            if rec is None:
                continue
            b = rec.by_bid.get(f.bid)
            if b is None or b is carrier or b.state is BeaconState.EXPIRED:
                continue
            if b.digest() != f.digest:
                self.ledger.charge_hash(1)
                continue
            self.ledger.charge_hash(1)
            v = Verifier(VerifierKind.COOP, f.validity, carrier.pcid,
                         carrier.bid, carrier.msg)
            if b.in_recv and not b.definitive:
                if not rec.discovered and f.validity:
                    self._move_to_check(b, CheckFlag.DISCOVERY,
                                        "mac" if carrier_kind is VerifierKind.MAC
                                        else "sig")
                elif rec.discovered and carrier_kind in DEFINITIVE:
                    if self.rng.random() < self.cfg.pr_check:
                        self._move_to_check(b, CheckFlag.PROBCHECK, "")
                        if f.validity:
                            self._accept(b, "coop", carrier, now,
                                         provisional=True)
                    else:
                        if f.validity:
                            self._accept(b, "coop", carrier, now,
                                         provisional=True)
                        else:
                            self._reject(b, now, definitive=False)
            self._add_verifier(b, v, now)

    def _move_to_check(self, b: RxBeacon, flag: CheckFlag, hint: str) -> None:
        if b.in_check or b.state is BeaconState.EXPIRED:
            return
        b.in_recv = False
        b.in_check = True
        b.check_flag = flag
        if hint:
            b.coop_kind_hint = hint
        self.queue_check.append(b)

    # ----- verifier set & cross-checking -------------------------------------

    def _add_verifier(self, b: RxBeacon, v: Verifier, now: float) -> None:
        if b.definitive:
            existing = b.verifiers[0] if b.verifiers else None
            if (existing is not None and v.validity != existing.validity
                    and self.cfg.cross_check):
                self._punish(v, b, now)
            return
        conflict = any(x.validity != v.validity for x in b.verifiers)
        b.verifiers.append(v)
        if len(b.verifiers) > self.cfg.verifier_cap:
            b.verifiers.pop(0)
        if conflict and self.cfg.cross_check:
            if not b.in_check and b.state is not BeaconState.EXPIRED:
                self._move_to_check(b, CheckFlag.CONFLICT, "")

    def _install_definitive(self, b: RxBeacon, v: Verifier, now: float,
                            allow_revoke: bool) -> None:
        """Replace the verifier set with a definitive SIG/SELF verdict.

        Conflicting prior verifiers are proven wrong: lying cooperative
        sources are revoked locally, misused key chains land on the KRL.
        """
        if b.definitive:
            b.verifiers = [v]
            return
        losers = [x for x in b.verifiers if x.validity != v.validity]
        if allow_revoke:
            for x in losers:
                self._punish(x, b, now)
        b.verifiers = [v]
        b.definitive = True

    def _punish(self, bad: Verifier, b: RxBeacon, now: float) -> None:
        if bad.kind is VerifierKind.COOP and bad.source_pcid is not None:
            self.revoke(bad.source_pcid, now, reason="false_coop",
                        evidence=(b.msg, bad.source_msg))
        elif bad.kind is VerifierKind.MAC and bad.source_pcid is not None:
            if bad.source_pcid not in self.krl:
                self.krl.add(bad.source_pcid)
                if self.hooks.on_revoke:
                    self.hooks.on_revoke(bad.source_pcid, now, "mac_abuse",
                                         None, "krl")

    def revoke(self, pcid: int, now: float, reason: str,
               evidence: tuple[Message, Message] | None = None) -> bool:
        if pcid in self.prl:
            return False
        self.prl.add(pcid)
        rec = self.recs.get(pcid)
        if rec is not None:
            for b in list(rec.by_bid.values()):
                if b.state is BeaconState.PENDING:
                    self._evict(b, now, DropReason.PRL)
        if self.hooks.on_revoke:
            self.hooks.on_revoke(pcid, now, reason, evidence, "prl")
        return True

    # ----- verdicts -----------------------------------------------------------

    def _accept(self, b: RxBeacon, kind: str,
                parent: "RxBeacon | tuple[int, int] | None",
                now: float, provisional: bool = False,
                mac_assisted: bool = False) -> None:
        if b.state is BeaconState.ACCEPTED:
            return
        b.state = BeaconState.ACCEPTED
        b.accepted_kind = kind
        b.mac_assisted = mac_assisted or b.coop_kind_hint == "mac"
        b.provisional = provisional
        if isinstance(parent, RxBeacon):
            b.parent_key = (parent.pcid, parent.bid)
        else:
            b.parent_key = parent
        b.in_recv = False
        if not provisional:
            b.in_check = False
        if self.hooks.cache_event_facilitator:
            for f in b.msg.body.facilitators:
                if f.kind in (FacilitatorKind.EVENT, FacilitatorKind.EVIDENCE):
                    self.hooks.cache_event_facilitator(f.digest, b.pcid, now)
        if self.hooks.on_accept:
            self.hooks.on_accept(b, now)

    def _retract(self, b: RxBeacon, now: float) -> None:
        b.state = BeaconState.PENDING
        b.accepted_kind = None
        b.provisional = False
        if self.hooks.on_retract:
            self.hooks.on_retract(b, now)

    def _reject(self, b: RxBeacon, now: float, definitive: bool) -> None:
        if b.state is BeaconState.REJECTED:
            return
        if b.state is BeaconState.ACCEPTED and not definitive:
            return
        b.state = BeaconState.REJECTED
        b.in_recv = False
        if definitive:
            b.in_check = False
        if self.hooks.on_reject:
            self.hooks.on_reject(b, now)

    # ----- expiry ---------------------------------------------------------------

    def expire_sweep(self, now: float) -> int:
        """Drop queue entries past their lifetime; returns expired count."""
        expired = 0
        q = self.expiry
        pending = BeaconState.PENDING
        gone = BeaconState.EXPIRED
        on_expire = self.hooks.on_expire
        while q and q[0].expire_at <= now:
            b = q.popleft()
            if b.in_flight:
                q.append(b)
                if len(q) == 1:
                    break
                continue
            if b.state is pending:
                if b.in_recv or b.in_check:
                    b.state = gone
                    b.in_recv = False
                    b.in_check = False
                    expired += 1
                    if on_expire:
                        on_expire(b, now)
                else:
                    b.state = gone
            rec = b.rec
            if rec is not None:
                if rec.by_bid.get(b.bid) is b:
                    del rec.by_bid[b.bid]
                    rec.seen_keys.discard(b.msg.body.disclosed_key)
                if rec.newest is b:
                    rec.newest = None
                if not rec.by_bid and not rec.discovered \
                        and self.recs.get(b.pcid) is rec:
                    del self.recs[b.pcid]
        return expired

    # ----- end-of-run accounting -------------------------------------------------

    def queued_pending(self) -> list[RxBeacon]:
        if self.scheme != "FACILITATED":
            return [b for b in self.queue_recv
                    if b.state is BeaconState.PENDING and b.in_recv]
        out = []
        for rec in self.recs.values():
            for b in rec.by_bid.values():
                if b.state is BeaconState.PENDING and (b.in_recv or b.in_check
                                                       or b.in_flight):
                    out.append(b)
        return out
