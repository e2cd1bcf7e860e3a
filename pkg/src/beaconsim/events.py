"""Event-frame (DENM / misbehavior evidence) reception and verification.

Event frames carry no chaining state, so the only cheap filter is the
facilitator cache: digests announced by accepted beacons.  A frame whose
digest matches no cached facilitator is dropped before any signature
work.  Matched frames queue ahead of safety beacons and are strictly
signature-verified; accepted evidence is re-checked by replaying both
embedded signatures before anyone gets revoked.
"""

from __future__ import annotations

from collections import OrderedDict, deque
from dataclasses import dataclass, field
from typing import Callable

from . import wire
from .crypto import CpuLedger, SignatureBackend
from .wire import EventKind, EventMessage


@dataclass(slots=True)
class CacheEntry:
    source_pcid: int
    cached_at: float
    expires_at: float


class FacilitatorCache:
    """Bounded LRU map of announced event digests."""

    def __init__(self, capacity: int, ttl_ms: float):
        self.capacity = capacity
        self.ttl_ms = ttl_ms
        self.entries: OrderedDict[bytes, CacheEntry] = OrderedDict()

    def put(self, digest: bytes, source_pcid: int, now: float) -> None:
        if digest in self.entries:
            self.entries.move_to_end(digest)
        self.entries[digest] = CacheEntry(source_pcid, now, now + self.ttl_ms)
        while len(self.entries) > self.capacity:
            self.entries.popitem(last=False)

    def lookup(self, digest: bytes, now: float) -> CacheEntry | None:
        entry = self.entries.get(digest)
        if entry is None:
            return None
        if entry.expires_at <= now:
            del self.entries[digest]
            return None
        return entry


@dataclass(slots=True)
class RxEvent:
    ev: EventMessage
    arrival: float
    matched_source: int | None


@dataclass
class EventHooks:
    on_accept: Callable | None = None
    on_reject: Callable | None = None
    on_drop: Callable | None = None
    on_expired: Callable | None = None
    revoke: Callable | None = None        # revoke(pcid, now, reason, evidence)
    is_revoked: Callable | None = None
    verify_beacon_bytes: Callable | None = None


class EventState:
    """Per-node event-frame pipeline."""

    def __init__(self, cfg, backend: SignatureBackend, ledger: CpuLedger,
                 hooks: EventHooks | None = None,
                 directory: dict[int, wire.Pseudonym] | None = None):
        self.cfg = cfg
        self.backend = backend
        self.ledger = ledger
        self.hooks = hooks or EventHooks()
        self.directory = directory if directory is not None else {}
        self.cache = FacilitatorCache(cfg.facilitator_cache_cap,
                                      cfg.facilitator_ttl_ms)
        self.queue: deque[RxEvent] = deque()
        self.queued_ids: set[int] = set()
        self.decided_ids: set[int] = set()
        self.bogus_verified = 0  # unmatched bogus frames that reached crypto (must stay 0)

    def cache_facilitator(self, digest: bytes, source_pcid: int,
                          now: float) -> None:
        self.cache.put(digest, source_pcid, now)

    def receive(self, ev: EventMessage, now: float) -> str:
        """Admit or drop an incoming event frame; returns the outcome tag."""
        if ev.event_id in self.decided_ids or ev.event_id in self.queued_ids:
            self._drop(ev, now, "duplicate")
            return "duplicate"
        if self.hooks.is_revoked and self.hooks.is_revoked(ev.pc.pcid):
            self._drop(ev, now, "prl")
            return "prl"
        if now > ev.created_at + ev.lifetime_ms:
            self._drop(ev, now, "expired")
            return "expired"
        if self.cfg.scheme == "FACILITATED":
            entry = self.cache.lookup(ev.frame_digest(), now)
            if entry is None:
                self._drop(ev, now, "unmatched")
                return "unmatched"
            matched = entry.source_pcid
        else:
            matched = None
        self.queue.append(RxEvent(ev, now, matched))
        self.queued_ids.add(ev.event_id)
        return "queued"

    def has_work(self) -> bool:
        return bool(self.queue)

    def next_event(self, now: float) -> RxEvent | None:
        """Pop the next live queued event; expired ones are dropped unverified."""
        while self.queue:
            rx = self.queue.popleft()
            self.queued_ids.discard(rx.ev.event_id)
            if now > rx.ev.created_at + rx.ev.lifetime_ms:
                self.decided_ids.add(rx.ev.event_id)
                if self.hooks.on_expired:
                    self.hooks.on_expired(rx, now)
                continue
            return rx
        return None

    def complete_verification(self, rx: RxEvent, now: float) -> bool:
        ev = rx.ev
        if not ev.authentic and rx.matched_source is None \
                and self.cfg.scheme == "FACILITATED":
            self.bogus_verified += 1
        ok = self.backend.verify(ev.pc.public_key, ev.signed_bytes(),
                                 ev.signature, self.ledger)
        self.decided_ids.add(ev.event_id)
        if not ok:
            if self.hooks.on_reject:
                self.hooks.on_reject(rx, now)
            return False
        if ev.kind is EventKind.EVIDENCE:
            self._process_evidence(rx, now)
        if self.hooks.on_accept:
            self.hooks.on_accept(rx, now)
        return True

    def _process_evidence(self, rx: RxEvent, now: float) -> None:
        """Replay the embedded signatures; revoke the validator only when the
        bogus beacon provably fails and the carrier provably attested it."""
        try:
            bogus, carrier = wire.decode_evidence_body(rx.ev.body,
                                                       self.directory)
        except wire.CodecError:
            if self.hooks.on_reject:
                self.hooks.on_reject(rx, now)
            return
        bogus_ok = self.backend.verify(bogus.body.pc.public_key,
                                       bogus.body_bytes(), bogus.signature,
                                       self.ledger)
        carrier_ok = self.backend.verify(carrier.body.pc.public_key,
                                         carrier.body_bytes(),
                                         carrier.signature, self.ledger)
        attests = any(
            f.kind is wire.FacilitatorKind.COOP and f.validity
            and f.digest == bogus.digest()
            for f in carrier.body.facilitators)
        if not bogus_ok and carrier_ok and attests:
            if self.hooks.revoke:
                self.hooks.revoke(carrier.body.pc.pcid, now,
                                  "evidence", (bogus, carrier))
        else:
            # forged or inconsistent evidence: reporter becomes suspect
            if self.hooks.on_reject:
                self.hooks.on_reject(rx, now)

    def _drop(self, ev: EventMessage, now: float, reason: str) -> None:
        if self.hooks.on_drop:
            self.hooks.on_drop(ev, now, reason)
