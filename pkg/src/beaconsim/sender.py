"""Honest-node transmit path.

Builds beacons at rate gamma: each beacon discloses the previous slot's
one-time key, commits to the sender's own recent beacons (SELF hints),
attests to recently signature-verified foreign beacons (COOP hints, both
validities) and announces upcoming event frames.  Event frames themselves
are artificially delayed until after the covering key has been disclosed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import crypto, wire
from .crypto import KeyChain, SignatureBackend
from .wire import (BeaconBody, EventMessage, Facilitator, FacilitatorKind,
                   Message, Pseudonym, Status)


class ChainExhausted(RuntimeError):
    pass


@dataclass(slots=True)
class VerifiedNote:
    """Entry of the cooperative-verifier ring: one signature-verification result."""

    pcid: int
    bid: int
    digest: bytes
    validity: bool
    t: float


@dataclass(slots=True)
class EventPlan:
    """Dissemination schedule for one event frame.

    The facilitator rides on ``beta1`` consecutive beacons; after each of
    those is followed by its key-disclosing successor, the frame itself is
    transmitted ``beta2`` times at a fixed spacing.
    """

    event: EventMessage
    beta1_left: int
    beta2: int
    tx_offset_ms: float
    awaiting_disclosure: bool = False
    done: bool = False

    def copy_times(self, disclosure_time: float) -> list[float]:
        return [disclosure_time + self.tx_offset_ms * (i + 1)
                for i in range(self.beta2)]


@dataclass(slots=True)
class SenderState:
    pc: Pseudonym
    chain: KeyChain
    private_key: bytes
    backend: SignatureBackend
    alpha: int
    k: int
    attach_facilitators: bool = True  # off for the baseline schemes
    bid: int = 0
    last_slot: int = -1
    recent_verified: list[VerifiedNote] = field(default_factory=list)
    own_recent: list[tuple[int, bytes]] = field(default_factory=list)
    denm_plan: EventPlan | None = None
    evidence_plan: EventPlan | None = None
    evidence_backlog: list[EventPlan] = field(default_factory=list)


def note_verified(state: SenderState, pcid: int, bid: int, digest: bytes,
                  validity: bool, t: float) -> None:
    """Remember a signature-verification result for cooperative attestation.

    Keeps the alpha freshest entries by beacon timestamp; ties broken by
    (pcid, bid) so replays are deterministic.
    """
    ring = state.recent_verified
    for i, note in enumerate(ring):
        if note.pcid == pcid and note.bid == bid:
            del ring[i]
            break
    ring.append(VerifiedNote(pcid, bid, digest, validity, t))
    ring.sort(key=lambda n: (n.t, n.pcid, n.bid))
    if len(ring) > state.alpha:
        del ring[:len(ring) - state.alpha]


def schedule_event(state: SenderState, event: EventMessage, now: float,
                   beta1: int, beta2: int, tx_offset_ms: float) -> EventPlan:
    """Queue an event frame for facilitator-led dissemination."""
    if now > event.created_at + event.lifetime_ms:
        raise ValueError("event expired before scheduling")
    plan = EventPlan(event, beta1, beta2, tx_offset_ms)
    if event.kind is wire.EventKind.EVIDENCE:
        if state.evidence_plan is None or state.evidence_plan.done:
            state.evidence_plan = plan
        else:
            # ongoing evidence dissemination finishes first
            state.evidence_backlog.append(plan)
    else:
        state.denm_plan = plan
    return plan


def _active_event_plans(state: SenderState) -> list[EventPlan]:
    plans = []
    if state.evidence_plan is not None and not state.evidence_plan.done:
        plans.append(state.evidence_plan)
    if state.denm_plan is not None and not state.denm_plan.done:
        plans.append(state.denm_plan)
    return plans


def next_beacon(state: SenderState, now: float,
                status: Status) -> tuple[Message, list[tuple[EventPlan, bool]]]:
    """Assemble and sign the next beacon.

    Returns the message plus the event plans whose facilitator it carries
    (flag True) or whose key disclosure it performs (flag False): the
    engine schedules the delayed event-frame copies off the latter.
    """
    chain = state.chain
    slot = chain.slot_of(now)
    if slot <= state.last_slot:
        raise ValueError(f"beacon slot {slot} not after previous {state.last_slot}")
    if slot < 1 or slot > chain.length:
        raise ChainExhausted(f"slot {slot} outside chain (pseudonym expired)")

    disclosures = [(p, False) for p in _active_event_plans(state)
                   if p.awaiting_disclosure]
    for plan, _ in disclosures:
        plan.awaiting_disclosure = False
        plan.beta1_left -= 1
        if plan.beta1_left <= 0:
            plan.done = True

    facs: list[Facilitator] = []
    carried: list[tuple[EventPlan, bool]] = []
    if state.attach_facilitators:
        event_slots = 0
        for plan in _active_event_plans(state):
            kind = (FacilitatorKind.EVIDENCE
                    if plan.event.kind is wire.EventKind.EVIDENCE
                    else FacilitatorKind.EVENT)
            facs.append(Facilitator(kind, plan.event.frame_digest()))
            plan.awaiting_disclosure = True
            carried.append((plan, True))
            event_slots += 1
        n_coop = max(0, state.alpha - event_slots)
        if n_coop:
            for note in state.recent_verified[-n_coop:]:
                facs.append(Facilitator(FacilitatorKind.COOP, note.digest,
                                        note.pcid, note.bid, note.validity))
        if state.k:
            for bid, dg in state.own_recent[-state.k:]:
                facs.append(Facilitator(FacilitatorKind.SELF, dg, bid=bid))

    state.bid += 1
    disclosed = chain.key_for_slot(slot - 1) if state.attach_facilitators \
        else b"\x00" * crypto.DIGEST_LEN
    body = BeaconBody(status, state.bid, now, disclosed, tuple(facs), state.pc)
    body_bytes = wire.encode_body(body)
    sig = state.backend.sign(state.private_key, body_bytes)
    if state.attach_facilitators:
        mac = crypto.compute_mac(crypto.mac_key(chain.key_for_slot(slot)),
                                 body_bytes)
    else:
        mac = b"\x00" * crypto.DIGEST_LEN
    msg = Message(body, sig, mac)
    msg._body_bytes = body_bytes

    state.last_slot = slot
    if state.attach_facilitators:
        state.own_recent.append((state.bid, msg.digest()))
        if len(state.own_recent) > state.k:
            del state.own_recent[:len(state.own_recent) - state.k]
    if (state.evidence_plan is not None and state.evidence_plan.done
            and state.evidence_backlog):
        state.evidence_plan = state.evidence_backlog.pop(0)
    return msg, carried + disclosures
