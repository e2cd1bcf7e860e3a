import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beaconsim import crypto, wire
from beaconsim.wire import (BeaconBody, CodecError, EventKind, EventMessage,
                            Facilitator, FacilitatorKind, IssuerTag, Message,
                            Pseudonym, Status)


def make_pc(seed=b"k1"):
    pub = crypto._h(b"\x07", seed) + b"\x01" * 12
    return Pseudonym(wire.pcid_from_key(pub), pub, 0.0, 60000.0)


def make_msg(pc, facs=(), bid=1, t=1234.0, sig=b"\x05" * 64, mac=b"\x06" * 20):
    body = BeaconBody(Status(10.0, 20.0, 5.0, 1.5), bid, t,
                      b"\x01" * 20, tuple(facs), pc)
    return Message(body, sig, mac)


def coop(digest=b"\x02" * 20, pcid=7, bid=3, validity=True):
    return Facilitator(FacilitatorKind.COOP, digest, pcid, bid, validity)


def self_fac(digest=b"\x03" * 20, bid=2):
    return Facilitator(FacilitatorKind.SELF, digest, bid=bid)


class TestFieldWidths:
    # byte-layout oracle: sum the declared field widths independently
    def test_coop_width(self):
        assert len(wire.encode_facilitator(coop())) == 1 + 4 + 4 + 20 == 29

    def test_self_width(self):
        assert len(wire.encode_facilitator(self_fac())) == 1 + 4 + 20 == 25

    def test_event_width(self):
        f = Facilitator(FacilitatorKind.EVENT, b"\x04" * 20)
        assert len(wire.encode_facilitator(f)) == 1 + 20 == 21

    def test_default_beacon_structural_below_300(self):
        pc = make_pc()
        facs = [coop(bid=i) for i in range(3)] + \
               [self_fac(bid=i) for i in range(3)]
        msg = make_msg(pc, facs)
        # status + bid + t + key + count byte + facilitators + sig + mac
        expected = 20 + 4 + 8 + 20 + 1 + (3 * 29 + 3 * 25) + 64 + 20
        assert wire.structural_len(msg) == expected
        assert expected < 300

    def test_default_beacon_pads_to_300(self):
        pc = make_pc()
        facs = [coop(bid=i) for i in range(3)] + \
               [self_fac(bid=i) for i in range(3)]
        assert len(wire.encode_message(make_msg(pc, facs))) == 300

    def test_pseudonym_blob_is_96_bytes(self):
        assert len(wire.encode_pseudonym(make_pc())) == 96


class TestRoundTrip:
    def test_empty_facilitators_zero_status(self):
        pc = make_pc()
        body = BeaconBody(Status(), 1, 0.0, b"\x00" * 20, (), pc)
        msg = Message(body, b"\x01" * 64, b"\x02" * 20)
        out = wire.decode_message(wire.encode_message(msg), {pc.pcid: pc})
        assert out == msg

    def test_facilitator_overflow_rejected(self):
        pc = make_pc()
        facs = [self_fac(bid=i) for i in range(wire.MAX_FACILITATORS + 1)]
        with pytest.raises(CodecError):
            wire.encode_message(make_msg(pc, facs))

    def test_unknown_pseudonym_rejected(self):
        pc = make_pc()
        data = wire.encode_message(make_msg(pc))
        with pytest.raises(CodecError):
            wire.decode_message(data, {})

    def test_pseudonym_blob_round_trip(self):
        pc = make_pc()
        assert wire.decode_pseudonym(wire.encode_pseudonym(pc)) == pc


@st.composite
def messages(draw):
    pc = make_pc(draw(st.binary(min_size=1, max_size=8)))
    n_coop = draw(st.integers(0, 4))
    n_self = draw(st.integers(0, 4))
    n_ev = draw(st.integers(0, 2))
    facs = []
    for _ in range(n_coop):
        facs.append(Facilitator(
            FacilitatorKind.COOP, draw(st.binary(min_size=20, max_size=20)),
            draw(st.integers(0, 2**32 - 1)), draw(st.integers(0, 2**32 - 1)),
            draw(st.booleans())))
    for _ in range(n_self):
        facs.append(Facilitator(
            FacilitatorKind.SELF, draw(st.binary(min_size=20, max_size=20)),
            bid=draw(st.integers(0, 2**32 - 1))))
    for _ in range(n_ev):
        kind = draw(st.sampled_from([FacilitatorKind.EVENT,
                                     FacilitatorKind.EVIDENCE]))
        facs.append(Facilitator(kind, draw(st.binary(min_size=20,
                                                     max_size=20))))
    status = Status(draw(st.floats(-1e4, 1e4)), draw(st.floats(-1e4, 1e4)),
                    draw(st.floats(0, 100)), draw(st.floats(0, 6.3)))
    body = BeaconBody(status, draw(st.integers(0, 2**32 - 1)),
                      float(draw(st.integers(0, 2**48))),
                      draw(st.binary(min_size=20, max_size=20)),
                      tuple(facs), pc)
    return Message(body, draw(st.binary(min_size=64, max_size=64)),
                   draw(st.binary(min_size=20, max_size=20)))


class TestProperties:
    @given(messages())
    @settings(max_examples=200, deadline=None)
    def test_decode_encode_identity(self, msg):
        pc = msg.body.pc
        out = wire.decode_message(wire.encode_message(msg), {pc.pcid: pc})
        assert out == msg

    @given(messages())
    @settings(max_examples=200, deadline=None)
    def test_padding_never_below_structural(self, msg):
        encoded = wire.encode_message(msg)
        assert len(encoded) >= wire.structural_len(msg)
        assert len(encoded) >= wire.DEFAULT_FRAME_SIZE

    @given(messages())
    @settings(max_examples=100, deadline=None)
    def test_digest_deterministic_and_20_bytes(self, msg):
        d1 = wire.beacon_digest(msg.body)
        d2 = wire.beacon_digest(msg.body)
        assert d1 == d2
        assert len(d1) == 20


class TestBeaconDigest:
    def test_status_bit_changes_digest(self):
        pc = make_pc()
        b1 = BeaconBody(Status(1.0, 2.0, 3.0, 4.0), 1, 10.0, b"\x01" * 20,
                        (), pc)
        b2 = BeaconBody(Status(1.0000001, 2.0, 3.0, 4.0), 1, 10.0,
                        b"\x01" * 20, (), pc)
        # oracle: recompute via the hash primitive on both encodings
        e1, e2 = wire.encode_body(b1), wire.encode_body(b2)
        assert e1 != e2
        assert crypto.digest(e1) == wire.beacon_digest(b1)
        assert crypto.digest(e2) == wire.beacon_digest(b2)
        assert wire.beacon_digest(b1) != wire.beacon_digest(b2)

    def test_digest_excludes_signature_and_mac(self):
        pc = make_pc()
        m1 = make_msg(pc, sig=b"\x01" * 64, mac=b"\x01" * 20)
        m2 = make_msg(pc, sig=b"\x02" * 64, mac=b"\x02" * 20)
        assert m1.digest() == m2.digest()


class TestEventFrames:
    def test_event_round_trip(self):
        pc = make_pc()
        ev = EventMessage(42, EventKind.DENM, 1000.0, 2000.0, b"payload",
                          pc, b"\x07" * 64)
        out = wire.decode_event(wire.encode_event(ev), {pc.pcid: pc})
        assert out == ev

    def test_event_padded_to_default(self):
        pc = make_pc()
        ev = EventMessage(42, EventKind.DENM, 1000.0, 2000.0, b"x" * 32,
                          pc, b"\x07" * 64)
        assert len(wire.encode_event(ev)) == 300

    def test_evidence_embeds_two_messages(self):
        pc = make_pc(b"a")
        pc2 = make_pc(b"b")
        bogus = make_msg(pc, bid=5)
        carrier = make_msg(pc2, [coop(digest=bogus.digest(), pcid=pc.pcid,
                                      bid=5)])
        body = wire.encode_evidence_body(bogus, carrier)
        directory = {pc.pcid: pc, pc2.pcid: pc2}
        m1, m2 = wire.decode_evidence_body(body, directory)
        assert m1 == bogus
        assert m2 == carrier

    def test_evidence_frame_exceeds_default_padding(self):
        pc = make_pc(b"a")
        bogus = make_msg(pc)
        carrier = make_msg(pc)
        ev = EventMessage(1, EventKind.EVIDENCE, 0.0, 4000.0,
                          wire.encode_evidence_body(bogus, carrier), pc,
                          b"\x01" * 64)
        assert wire.event_structural_len(ev) > 300
        assert len(wire.encode_event(ev)) == wire.event_structural_len(ev)
