"""Attacker behaviors: external clogging flooders, masqueraders and
colluding malicious sender/validator pairs.

Flooders fabricate beacons/DENMs with fresh plausible pseudonyms and
random signatures at negligible cost to themselves; the victim pays via
its own verification algorithms.  Malicious senders hold valid
credentials, beacon honestly until discovered, then switch to correctly
chained and MACed bodies under random signatures; their colluding
validators attest those bogus beacons with false positive cooperative
facilitators.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import crypto, wire
from .wire import (BeaconBody, EventKind, EventMessage, Facilitator,
                   FacilitatorKind, IssuerTag, Message, Pseudonym, Status)


@dataclass(slots=True)
class Flooder:
    """External bogus-traffic generator."""

    rng: object
    slot_len_ms: float
    fake_pc_lifetime_ms: float = 600000.0
    _seq: int = 0

    def _fake_pc(self, now: float) -> Pseudonym:
        pub = self.rng.randbytes(32)
        return Pseudonym(wire.pcid_from_key(pub), pub,
                         now - (now % self.fake_pc_lifetime_ms),
                         now + self.fake_pc_lifetime_ms,
                         IssuerTag.FORGED)

    def bogus_beacon(self, now: float, pos: tuple[float, float]) -> Message:
        """Plausible-looking beacon: fresh forged PC, random key and signature."""
        self._seq += 1
        pc = self._fake_pc(now)
        status = Status(pos[0] + self.rng.uniform(-5, 5),
                        pos[1] + self.rng.uniform(-5, 5),
                        self.rng.uniform(0, 30), self.rng.uniform(0, 6.28))
        body = BeaconBody(status, self.rng.randrange(1, 1 << 16), now,
                          self.rng.randbytes(crypto.DIGEST_LEN), (), pc)
        return Message(body, self.rng.randbytes(crypto.SIGNATURE_LEN),
                       self.rng.randbytes(crypto.DIGEST_LEN), authentic=False)

    def bogus_denm(self, now: float, lifetime_ms: float,
                   body_len: int = 32) -> EventMessage:
        self._seq += 1
        pc = self._fake_pc(now)
        return EventMessage(self.rng.getrandbits(63), EventKind.DENM, now,
                            lifetime_ms, self.rng.randbytes(body_len), pc,
                            self.rng.randbytes(crypto.SIGNATURE_LEN),
                            authentic=False)


def masquerade(rng, overheard: Message, now: float) -> Message:
    """Forge a same-slot beacon reusing the victim's PC and disclosed key.

    The body is altered, so neither the original MAC nor any later SELF
    digest will match; the signature is random bytes.
    """
    src = overheard.body
    status = Status(src.status.x + rng.uniform(-20, 20),
                    src.status.y + rng.uniform(-20, 20),
                    rng.uniform(0, 30), rng.uniform(0, 6.28))
    body = BeaconBody(status, src.bid, src.t + 1.0, src.disclosed_key,
                      (), src.pc)
    return Message(body, rng.randbytes(crypto.SIGNATURE_LEN),
                   rng.randbytes(crypto.DIGEST_LEN), authentic=False)


def bogus_chained_beacon(sender_state, now: float, rng,
                         status: Status) -> Message:
    """Malicious-sender beacon: correct chain key and MAC, bogus signature.

    Consumes the sender's own slot/bid progression so receivers keep
    tracking the chain.
    """
    chain = sender_state.chain
    slot = chain.slot_of(now)
    if slot <= sender_state.last_slot or slot < 1 or slot > chain.length:
        raise ValueError("no fresh slot for bogus beacon")
    sender_state.bid += 1
    body = BeaconBody(status, sender_state.bid, now,
                      chain.key_for_slot(slot - 1), (), sender_state.pc)
    body_bytes = wire.encode_body(body)
    mac = crypto.compute_mac(crypto.mac_key(chain.key_for_slot(slot)),
                             body_bytes)
    msg = Message(body, rng.randbytes(crypto.SIGNATURE_LEN), mac,
                  authentic=False)
    msg._body_bytes = body_bytes
    sender_state.last_slot = slot
    sender_state.own_recent.append((sender_state.bid, msg.digest()))
    if len(sender_state.own_recent) > sender_state.k:
        del sender_state.own_recent[:len(sender_state.own_recent)
                                    - sender_state.k]
    return msg
