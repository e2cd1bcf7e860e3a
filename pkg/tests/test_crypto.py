import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from beaconsim import crypto
from beaconsim.crypto import (BackendMode, ChainError, CpuLedger,
                              SignatureBackend, chain_check, chain_hash,
                              compute_mac, generate_chain, mac_key)


class TestChainGeneration:
    def test_single_step(self):
        chain = generate_chain(b"seed", 1, 1, 0.0, 100.0)
        assert chain.keys[0] == chain_hash(chain.keys[1])

    def test_iterated_hash_oracle(self):
        chain = generate_chain(b"\x11" * 32, 7, 3, 0.0, 100.0)
        # independent loop applying the chain hash three times to the tip
        k = chain.keys[3]
        for _ in range(3):
            k = chain_hash(k)
        assert k == chain.keys[0]

    def test_chain_relation_holds_everywhere(self):
        chain = generate_chain(b"x", 2, 64, 0.0, 100.0)
        for j in range(64):
            assert chain.keys[j] == chain_hash(chain.keys[j + 1])

    def test_deterministic_per_seed(self):
        c1 = generate_chain(b"same", 9, 16, 0.0, 100.0)
        c2 = generate_chain(b"same", 9, 16, 0.0, 100.0)
        c3 = generate_chain(b"other", 9, 16, 0.0, 100.0)
        assert c1.keys == c2.keys
        assert c1.keys != c3.keys

    def test_zero_length_rejected(self):
        with pytest.raises(ChainError):
            generate_chain(b"s", 1, 0, 0.0, 100.0)

    def test_day_long_chain_storage(self):
        # one day at 10 Hz: 864000 slots of 20-byte digests
        length = 864000
        chain = generate_chain(b"day", 1, length, 0.0, 100.0)
        raw = length * 20
        assert abs(raw / 2**20 - 16.5) < 0.1  # ~16.5 MiB of raw key material
        assert len(chain.keys) == length + 1
        assert all(len(k) == 20 for k in chain.keys[:100])

    def test_slot_mapping(self):
        chain = generate_chain(b"s", 1, 100, 0.0, 100.0)
        assert chain.slot_of(0.0) == 0
        assert chain.slot_of(99.9) == 0
        assert chain.slot_of(100.0) == 1
        assert chain.slot_of(1050.0) == 10


class TestChainCheck:
    def test_zero_gap_equality(self):
        k = b"\x01" * 20
        assert chain_check(k, k, 0, 100)
        assert not chain_check(k, b"\x02" * 20, 0, 100)

    def test_consecutive_disclosures_verify(self):
        chain = generate_chain(b"s", 1, 32, 0.0, 100.0)
        for j in range(1, 32):
            assert chain_check(chain.keys[j], chain.keys[j - 1], 1, 100)

    def test_multi_slot_gap(self):
        chain = generate_chain(b"s", 1, 32, 0.0, 100.0)
        assert chain_check(chain.keys[20], chain.keys[13], 7, 100)

    def test_gap_beyond_max_rejected_without_work(self):
        chain = generate_chain(b"s", 1, 32, 0.0, 100.0)
        ledger = CpuLedger(4.0, 0.04)
        assert not chain_check(chain.keys[30], chain.keys[0], 30, 10, ledger)
        assert ledger.hash_ops == 0

    def test_random_keys_never_verify(self):
        # randomized negative oracle: no false accept in 10^4 trials
        chain = generate_chain(b"s", 1, 4, 0.0, 100.0)
        rng = random.Random(7)
        false_accepts = sum(
            chain_check(rng.randbytes(20), chain.keys[0], 1, 100)
            for _ in range(10_000))
        assert false_accepts == 0

    def test_cost_charged_per_step(self):
        chain = generate_chain(b"s", 1, 32, 0.0, 100.0)
        ledger = CpuLedger(4.0, 0.04)
        chain_check(chain.keys[9], chain.keys[4], 5, 100, ledger)
        assert ledger.hash_ops == 5
        assert ledger.consumed_ms == pytest.approx(5 * 0.04)


class TestMac:
    def test_mac_key_domain_separated(self):
        rng = random.Random(3)
        for _ in range(1000):
            k = rng.randbytes(20)
            assert mac_key(k) != k

    def test_disclosed_key_recomputes_mac(self):
        chain = generate_chain(b"s", 1, 16, 0.0, 100.0)
        body = b"beacon body bytes"
        mac = compute_mac(mac_key(chain.keys[5]), body)
        assert compute_mac(mac_key(chain.keys[5]), body) == mac

    def test_any_body_byte_flip_breaks_mac(self):
        key = mac_key(b"\x09" * 20)
        body = bytearray(b"some beacon body to protect")
        mac = compute_mac(key, bytes(body))
        for i in range(len(body)):
            mutated = bytearray(body)
            mutated[i] ^= 0x40
            assert compute_mac(key, bytes(mutated)) != mac

    def test_digest_lengths(self):
        assert len(chain_hash(b"\x00" * 20)) == 20
        assert len(mac_key(b"\x00" * 20)) == 20
        assert len(compute_mac(b"\x00" * 20, b"abc")) == 20
        assert len(crypto.digest(b"abc")) == 20


class TestSimulatedBackend:
    def test_sign_verify_round_trip(self):
        be = SignatureBackend(BackendMode.SIMULATED, random.Random(1))
        pair = be.keygen()
        sig = be.sign(pair.private, b"hello")
        assert be.verify(pair.public, b"hello", sig)

    def test_random_signature_rejected_but_charged(self):
        be = SignatureBackend(BackendMode.SIMULATED, random.Random(1))
        pair = be.keygen()
        ledger = CpuLedger(4.0, 0.04)
        assert not be.verify(pair.public, b"hello", b"\xaa" * 64, ledger)
        assert ledger.verify_calls == 1
        assert ledger.consumed_ms == pytest.approx(4.0)

    def test_unissued_key_never_verifies(self):
        be = SignatureBackend(BackendMode.SIMULATED, random.Random(1))
        assert not be.verify(b"\x01" * 44, b"data", b"\x02" * 64)

    def test_wrong_message_rejected(self):
        be = SignatureBackend(BackendMode.SIMULATED, random.Random(1))
        pair = be.keygen()
        sig = be.sign(pair.private, b"hello")
        assert not be.verify(pair.public, b"other", sig)

    def test_wrong_signer_rejected(self):
        be = SignatureBackend(BackendMode.SIMULATED, random.Random(1))
        a, b = be.keygen(), be.keygen()
        sig = be.sign(a.private, b"msg")
        assert not be.verify(b.public, b"msg", sig)


class TestRealBackend:
    def test_ecdsa_round_trip(self):
        be = SignatureBackend(BackendMode.REAL)
        pair = be.keygen()
        sig = be.sign(pair.private, b"real crypto")
        assert len(sig) == 64
        assert be.verify(pair.public, b"real crypto", sig)
        assert not be.verify(pair.public, b"tampered", sig)

    def test_p256_known_answer_vector(self):
        # deterministic-ECDSA P-256/SHA-256 test vector, message "sample"
        pub = bytes.fromhex(
            "60FED4BA255A9D31C961EB74C6356D68C049B8923B61FA6CE669622E60F29FB6"
            "7903FE1008B8BC99A41AE9E95628BC64F2F1B20C2D7E9F5177A3C294D4462299")
        sig = bytes.fromhex(
            "EFD48B2AACB6A8FD1140DD9CD45E81D69D2C877B56AAF991C34D0EA84EAF3716"
            "F7CB1C942D657C41D436C7A1B6E29F65F3E900DBB9AFF4064DC4AB2F843ACDA8")
        be = SignatureBackend(BackendMode.REAL)
        assert be.verify(pub, b"sample", sig)
        assert not be.verify(pub, b"samplx", sig)


class TestLedger:
    def test_cost_identity(self):
        ledger = CpuLedger(4.0, 0.04)
        for _ in range(13):
            ledger.charge_verify()
        ledger.charge_hash(250)
        assert ledger.consumed_ms == pytest.approx(13 * 4.0 + 250 * 0.04)

    def test_class_accounting(self):
        ledger = CpuLedger(4.0, 0.04)
        ledger.charge_class(True, True)
        ledger.charge_class(False, True)
        ledger.charge_class(True, False)
        assert ledger.time_d == pytest.approx(8.0)
        assert ledger.time_nd == pytest.approx(4.0)
        assert ledger.time_d_bb == pytest.approx(4.0)
        assert ledger.time_nd_bb == pytest.approx(4.0)
        assert ledger.ratio_d() == pytest.approx(8.0 / 12.0)


@given(st.binary(min_size=1, max_size=64))
@settings(max_examples=200, deadline=None)
def test_no_digest_collisions_across_domains(data):
    outs = {chain_hash(data), mac_key(data), crypto.digest(data),
            compute_mac(b"\x00" * 20, data)}
    assert len(outs) == 4


def test_dump_chain_layout():
    chain = generate_chain(b"s", 0x01020304, 4, 0.0, 100.0)
    blob = crypto.dump_chain(chain)
    assert blob[:4] == (0x01020304).to_bytes(4, "little")
    assert blob[4:8] == (4).to_bytes(4, "little")
    assert len(blob) == 8 + 5 * 20
