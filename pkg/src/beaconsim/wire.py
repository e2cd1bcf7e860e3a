"""Protocol domain types and the deterministic binary codec.

The codec exists for channel-capacity accounting and for canonical byte
strings to sign, MAC and digest.  Layout is little-endian with fixed field
widths: kind tags 1 B, pcid/bid 4 B, timestamps 8 B, digests/keys/MACs
20 B, signatures 64 B, status 20 B.  Frames are zero-padded up to the
configured frame size (default 300 B) so that channel accounting matches
the uniform message size of the load model.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum, IntEnum

from . import crypto

DEFAULT_FRAME_SIZE = 300
PSEUDONYM_BLOB_LEN = 96
STATUS_LEN = 20
MAX_FACILITATORS = 16

COOP_FACILITATOR_LEN = 29   # kind + pcid + bid + digest
SELF_FACILITATOR_LEN = 25   # kind + bid + digest
EVENT_FACILITATOR_LEN = 21  # kind + digest


class CodecError(ValueError):
    pass


class IssuerTag(IntEnum):
    AUTHENTIC = 1
    FORGED = 2


@dataclass(frozen=True, slots=True)
class Pseudonym:
    """Short-term credential: 4-byte id, verification key and lifetime."""

    pcid: int
    public_key: bytes
    valid_from: float
    valid_to: float
    issuer_tag: IssuerTag = IssuerTag.AUTHENTIC

    def __post_init__(self):
        if self.valid_from >= self.valid_to:
            raise ValueError("pseudonym lifetime is empty")


def pcid_from_key(public_key: bytes) -> int:
    return int.from_bytes(crypto.digest(public_key)[:4], "little")


def _f32(v: float) -> float:
    return struct.unpack("<f", struct.pack("<f", v))[0]


@dataclass(frozen=True, slots=True)
class Status:
    """Vehicle status block; also carries the sender's pseudonym id.

    The four kinematic floats plus the 4-byte station reference fill the
    20-byte status field exactly.  Values are quantized to single precision
    at construction so encode/decode is the identity.
    """

    x: float = 0.0
    y: float = 0.0
    speed: float = 0.0
    heading: float = 0.0

    def __post_init__(self):
        for name in ("x", "y", "speed", "heading"):
            object.__setattr__(self, name, _f32(getattr(self, name)))


class FacilitatorKind(Enum):
    COOP = "coop"
    SELF = "self"
    EVENT = "event"
    EVIDENCE = "evidence"


_FAC_TAG = {
    (FacilitatorKind.COOP, True): 1,
    (FacilitatorKind.COOP, False): 2,
    (FacilitatorKind.SELF, True): 3,
    (FacilitatorKind.EVENT, True): 4,
    (FacilitatorKind.EVIDENCE, True): 5,
}
_TAG_FAC = {v: k for k, v in _FAC_TAG.items()}


@dataclass(frozen=True, slots=True)
class Facilitator:
    """Beacon-carried verification hint.

    COOP entries attest (positively or negatively) to a neighbour's beacon;
    SELF entries commit to the sender's own prior beacons; EVENT/EVIDENCE
    entries announce an upcoming event frame by digest.
    """

    kind: FacilitatorKind
    digest: bytes
    pcid: int = 0
    bid: int = 0
    validity: bool = True

    def __post_init__(self):
        # Only COOP carries a validity claim and a foreign pcid; only
        # COOP/SELF carry a bid.  Normalizing keeps the codec bijective.
        if self.kind is not FacilitatorKind.COOP:
            object.__setattr__(self, "validity", True)
            object.__setattr__(self, "pcid", 0)
        if self.kind in (FacilitatorKind.EVENT, FacilitatorKind.EVIDENCE):
            object.__setattr__(self, "bid", 0)

    def encoded_len(self) -> int:
        if self.kind is FacilitatorKind.COOP:
            return COOP_FACILITATOR_LEN
        if self.kind is FacilitatorKind.SELF:
            return SELF_FACILITATOR_LEN
        return EVENT_FACILITATOR_LEN


@dataclass(frozen=True, slots=True)
class BeaconBody:
    status: Status
    bid: int
    t: float
    disclosed_key: bytes
    facilitators: tuple[Facilitator, ...]
    pc: Pseudonym


@dataclass(slots=True)
class Message:
    """A broadcast beacon: signed body plus one-time-keyed MAC."""

    body: BeaconBody
    signature: bytes
    mac: bytes
    # ground-truth tag for oracles and metrics, never read by protocol logic
    authentic: bool = field(default=True, compare=False)
    _body_bytes: bytes | None = field(default=None, compare=False, repr=False)
    _digest: bytes | None = field(default=None, compare=False, repr=False)

    @property
    def pcid(self) -> int:
        return self.body.pc.pcid

    @property
    def bid(self) -> int:
        return self.body.bid

    def body_bytes(self) -> bytes:
        if self._body_bytes is None:
            self._body_bytes = encode_body(self.body)
        return self._body_bytes

    def digest(self) -> bytes:
        if self._digest is None:
            self._digest = crypto.digest(self.body_bytes())
        return self._digest


class EventKind(Enum):
    DENM = "denm"
    EVIDENCE = "evidence"


@dataclass(slots=True)
class EventMessage:
    """Event-driven frame (DENM or misbehavior evidence), strictly signed."""

    event_id: int
    kind: EventKind
    created_at: float
    lifetime_ms: float
    body: bytes
    pc: Pseudonym
    signature: bytes = b""
    authentic: bool = field(default=True, compare=False)
    _frame_digest: bytes | None = field(default=None, compare=False, repr=False)

    def signed_bytes(self) -> bytes:
        return encode_event_header(self) + self.body

    def frame_digest(self) -> bytes:
        """Digest matched against cached event facilitators (covers signature)."""
        if self._frame_digest is None:
            self._frame_digest = crypto.digest(self.signed_bytes()
                                               + self.signature)
        return self._frame_digest


# --- encoding -------------------------------------------------------------

def encode_status(status: Status, pcid: int) -> bytes:
    return struct.pack("<ffffI", status.x, status.y, status.speed,
                       status.heading, pcid)


def encode_facilitator(f: Facilitator) -> bytes:
    key = (f.kind, True if f.kind is not FacilitatorKind.COOP else f.validity)
    tag = _FAC_TAG[key]
    if f.kind is FacilitatorKind.COOP:
        return bytes([tag]) + struct.pack("<II", f.pcid, f.bid) + f.digest
    if f.kind is FacilitatorKind.SELF:
        return bytes([tag]) + struct.pack("<I", f.bid) + f.digest
    return bytes([tag]) + f.digest


def encode_body(body: BeaconBody) -> bytes:
    """Canonical body bytes: what gets signed, MACed and digested."""
    if len(body.facilitators) > MAX_FACILITATORS:
        raise CodecError(f"facilitator overflow: {len(body.facilitators)}")
    out = bytearray()
    out += encode_status(body.status, body.pc.pcid)
    out += struct.pack("<Id", body.bid, body.t)
    out += body.disclosed_key
    out += bytes([len(body.facilitators)])
    for f in body.facilitators:
        out += encode_facilitator(f)
    return bytes(out)


def structural_len(msg: Message) -> int:
    return len(msg.body_bytes()) + crypto.SIGNATURE_LEN + crypto.DIGEST_LEN


def encode_message(msg: Message, frame_size: int = DEFAULT_FRAME_SIZE) -> bytes:
    """Full beacon frame, zero-padded to at least ``frame_size`` bytes."""
    raw = msg.body_bytes() + msg.signature + msg.mac
    if len(raw) < frame_size:
        raw += b"\x00" * (frame_size - len(raw))
    return raw


def beacon_digest(body: BeaconBody) -> bytes:
    return crypto.digest(encode_body(body))


def decode_message(data: bytes, directory: dict[int, Pseudonym]) -> Message:
    """Inverse of encode_message; pseudonyms are resolved through ``directory``."""
    try:
        x, y, speed, heading, pcid = struct.unpack_from("<ffffI", data, 0)
        off = STATUS_LEN
        bid, t = struct.unpack_from("<Id", data, off)
        off += 12
        key = data[off:off + crypto.DIGEST_LEN]
        off += crypto.DIGEST_LEN
        n_fac = data[off]
        off += 1
        facs = []
        for _ in range(n_fac):
            tag = data[off]
            kind, validity = _TAG_FAC[tag]
            off += 1
            if kind is FacilitatorKind.COOP:
                f_pcid, f_bid = struct.unpack_from("<II", data, off)
                off += 8
                dg = data[off:off + crypto.DIGEST_LEN]
                off += crypto.DIGEST_LEN
                facs.append(Facilitator(kind, dg, f_pcid, f_bid, validity))
            elif kind is FacilitatorKind.SELF:
                (f_bid,) = struct.unpack_from("<I", data, off)
                off += 4
                dg = data[off:off + crypto.DIGEST_LEN]
                off += crypto.DIGEST_LEN
                facs.append(Facilitator(kind, dg, bid=f_bid))
            else:
                dg = data[off:off + crypto.DIGEST_LEN]
                off += crypto.DIGEST_LEN
                facs.append(Facilitator(kind, dg))
        sig = data[off:off + crypto.SIGNATURE_LEN]
        off += crypto.SIGNATURE_LEN
        mac = data[off:off + crypto.DIGEST_LEN]
        off += crypto.DIGEST_LEN
    except (struct.error, KeyError, IndexError) as exc:
        raise CodecError(f"malformed beacon frame: {exc}") from exc
    if len(sig) != crypto.SIGNATURE_LEN or len(mac) != crypto.DIGEST_LEN:
        raise CodecError("truncated beacon frame")
    pc = directory.get(pcid)
    if pc is None:
        raise CodecError(f"unknown pseudonym {pcid:#x}")
    body = BeaconBody(Status(x, y, speed, heading), bid, t, key,
                      tuple(facs), pc)
    return Message(body, sig, mac)


def encode_pseudonym(pc: Pseudonym) -> bytes:
    """Fixed 96-byte credential blob (used for debug dumps and registries)."""
    key = pc.public_key[:75].ljust(75, b"\x00")
    return (struct.pack("<IqqB", pc.pcid, int(pc.valid_from),
                        int(pc.valid_to), int(pc.issuer_tag)) + key)


def decode_pseudonym(data: bytes) -> Pseudonym:
    if len(data) < PSEUDONYM_BLOB_LEN:
        raise CodecError("truncated pseudonym blob")
    pcid, vf, vt, tag = struct.unpack_from("<IqqB", data, 0)
    key = data[21:96].rstrip(b"\x00")
    return Pseudonym(pcid, key, float(vf), float(vt), IssuerTag(tag))


# --- event frames ---------------------------------------------------------

_EVENT_KIND_TAG = {EventKind.DENM: 1, EventKind.EVIDENCE: 2}
_TAG_EVENT_KIND = {v: k for k, v in _EVENT_KIND_TAG.items()}


def encode_event_header(ev: EventMessage) -> bytes:
    return struct.pack("<QBddIH", ev.event_id, _EVENT_KIND_TAG[ev.kind],
                       ev.created_at, ev.lifetime_ms,
                       ev.pc.pcid, len(ev.body))


def encode_event(ev: EventMessage, frame_size: int = DEFAULT_FRAME_SIZE) -> bytes:
    raw = ev.signed_bytes() + ev.signature
    if len(raw) < frame_size:
        raw += b"\x00" * (frame_size - len(raw))
    return raw


def event_structural_len(ev: EventMessage) -> int:
    return len(ev.signed_bytes()) + crypto.SIGNATURE_LEN


def decode_event(data: bytes, directory: dict[int, Pseudonym]) -> EventMessage:
    try:
        event_id, tag, created, lifetime, pcid, body_len = struct.unpack_from(
            "<QBddIH", data, 0)
        off = struct.calcsize("<QBddIH")
        body = data[off:off + body_len]
        off += body_len
        sig = data[off:off + crypto.SIGNATURE_LEN]
    except (struct.error, KeyError) as exc:
        raise CodecError(f"malformed event frame: {exc}") from exc
    if len(body) != body_len or len(sig) != crypto.SIGNATURE_LEN:
        raise CodecError("truncated event frame")
    pc = directory.get(pcid)
    if pc is None:
        raise CodecError(f"unknown pseudonym {pcid:#x}")
    return EventMessage(event_id, _TAG_EVENT_KIND[tag], created,
                        lifetime, body, pc, sig)


def encode_evidence_body(bogus: Message, carrier: Message,
                         frame_size: int = DEFAULT_FRAME_SIZE) -> bytes:
    """Evidence payload: the two complete signed messages, length-prefixed."""
    b1 = encode_message(bogus, frame_size)
    b2 = encode_message(carrier, frame_size)
    return (struct.pack("<H", len(b1)) + b1
            + struct.pack("<H", len(b2)) + b2)


def decode_evidence_body(body: bytes,
                         directory: dict[int, Pseudonym]) -> tuple[Message, Message]:
    try:
        (n1,) = struct.unpack_from("<H", body, 0)
        m1 = decode_message(body[2:2 + n1], directory)
        (n2,) = struct.unpack_from("<H", body, 2 + n1)
        m2 = decode_message(body[4 + n1:4 + n1 + n2], directory)
    except (struct.error, CodecError) as exc:
        raise CodecError(f"malformed evidence payload: {exc}") from exc
    return m1, m2
