"""Hashing, one-time key chains, MACs and pluggable signature backends.

All digests are a 256-bit hash truncated to 20 bytes.  The chain hash,
MAC-key derivation, MAC and message digest are one hash function under
1-byte domain-separation prefixes.  Signature verification is the only
expensive operation in the cost model; hash-level operations are charged
separately at a much lower per-op cost.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from enum import Enum

DIGEST_LEN = 20
SIGNATURE_LEN = 64

_DOM_CHAIN = b"\x01"
_DOM_MAC_KEY = b"\x02"
_DOM_MAC = b"\x03"
_DOM_DIGEST = b"\x04"
_DOM_SIM_PUB = b"\x05"
_DOM_SIM_SIG = b"\x06"


def _h(domain: bytes, *parts: bytes) -> bytes:
    h = hashlib.sha256(domain)
    for p in parts:
        h.update(p)
    return h.digest()[:DIGEST_LEN]


def chain_hash(key: bytes) -> bytes:
    return _h(_DOM_CHAIN, key)


def mac_key(chain_key: bytes) -> bytes:
    """Derive the MAC key for a slot from that slot's chain element."""
    return _h(_DOM_MAC_KEY, chain_key)


def compute_mac(key: bytes, body_bytes: bytes) -> bytes:
    return _h(_DOM_MAC, key, body_bytes)


def digest(data: bytes) -> bytes:
    """20-byte digest used for beacon bodies and event frames."""
    return _h(_DOM_DIGEST, data)


class ChainError(ValueError):
    pass


@dataclass(slots=True)
class KeyChain:
    """Per-pseudonym hash chain of one-time beacon authentication keys.

    ``keys[j]`` authenticates the beacon of slot ``j`` (via its derived MAC
    key) and is disclosed with the slot ``j+1`` beacon.  ``keys[0]`` is the
    anchor: disclosed by the first beacon, never used as a MAC key.
    Slot indices are relative to ``slot0_time``.
    """

    pcid: int
    length: int
    slot0_time: float
    slot_len_ms: float
    keys: list[bytes]

    def slot_of(self, t_ms: float) -> int:
        return int((t_ms - self.slot0_time) // self.slot_len_ms)

    def key_for_slot(self, j: int) -> bytes:
        if not 0 <= j <= self.length:
            raise ChainError(f"slot {j} outside chain of length {self.length}")
        return self.keys[j]


def generate_chain(seed: bytes, pcid: int, length: int,
                   slot0_time: float, slot_len_ms: float) -> KeyChain:
    """Build a chain of ``length`` one-way steps ending at a seed-derived tip.

    keys[length] is derived from the seed; keys[j] = chain_hash(keys[j+1]).
    """
    if length < 1:
        raise ChainError("chain length must be >= 1")
    keys = [b""] * (length + 1)
    keys[length] = _h(_DOM_CHAIN, seed, pcid.to_bytes(4, "little"), b"tip")
    for j in range(length - 1, -1, -1):
        keys[j] = chain_hash(keys[j + 1])
    return KeyChain(pcid, length, slot0_time, slot_len_ms, keys)


def chain_check(k_new: bytes, k_old: bytes, gap: int, max_gap: int,
                ledger: "CpuLedger | None" = None) -> bool:
    """True iff ``gap`` chain-hash steps applied to k_new yield k_old.

    Charges one hash op per step.  A gap above ``max_gap`` is rejected as
    implausible without doing the work.
    """
    if gap < 0:
        raise ChainError("negative chain gap")
    if gap > max_gap:
        return False
    k = k_new
    for _ in range(gap):
        k = chain_hash(k)
    if ledger is not None:
        ledger.charge_hash(gap)
    return k == k_old


@dataclass(slots=True)
class CpuLedger:
    """Per-node accounting of simulated crypto cost.

    ``time_d``/``time_nd`` track signature-verification time spent on
    discovered vs. non-discovered senders' beacons; the *_bb variants only
    accumulate while both verification pools were backlogged (used for the
    CPU-ratio check).
    """

    tau_verify_ms: float
    tau_light_ms: float
    verify_calls: int = 0
    hash_ops: int = 0
    time_d: float = 0.0
    time_nd: float = 0.0
    time_d_bb: float = 0.0
    time_nd_bb: float = 0.0

    def charge_verify(self) -> float:
        self.verify_calls += 1
        return self.tau_verify_ms

    def charge_hash(self, n: int = 1) -> float:
        self.hash_ops += n
        return n * self.tau_light_ms

    def charge_class(self, discovered: bool, both_backlogged: bool) -> None:
        if discovered:
            self.time_d += self.tau_verify_ms
            if both_backlogged:
                self.time_d_bb += self.tau_verify_ms
        else:
            self.time_nd += self.tau_verify_ms
            if both_backlogged:
                self.time_nd_bb += self.tau_verify_ms

    @property
    def consumed_ms(self) -> float:
        return (self.verify_calls * self.tau_verify_ms
                + self.hash_ops * self.tau_light_ms)

    def ratio_d(self) -> float:
        total = self.time_d + self.time_nd
        return self.time_d / total if total > 0 else 0.0


class BackendMode(Enum):
    SIMULATED = "simulated"
    REAL = "real"


@dataclass(slots=True)
class KeyPair:
    private: bytes
    public: bytes


class SignatureBackend:
    """Sign/verify with either zero-wall-clock simulated crypto or real ECDSA.

    The simulated mode keeps a registry of issued key pairs; a signature
    verifies iff it was produced with the private half registered for the
    pseudonym's public key.  Random 64-byte blobs therefore never verify,
    and nobody can sign for a key pair the backend did not issue, which is
    exactly the oracle behaviour the protocol relies on.
    """

    def __init__(self, mode: BackendMode = BackendMode.SIMULATED,
                 rng=None):
        self.mode = mode
        self._privs: dict[bytes, bytes] = {}
        self._rng = rng

    def _rand(self, n: int) -> bytes:
        if self._rng is not None:
            return self._rng.randbytes(n)
        return os.urandom(n)

    def keygen(self) -> KeyPair:
        if self.mode is BackendMode.SIMULATED:
            priv = self._rand(32)
            pub = _h(_DOM_SIM_PUB, priv) + b"\x00" * 12
            self._privs[pub] = priv
            return KeyPair(priv, pub)
        from cryptography.hazmat.primitives.asymmetric import ec

        key = ec.generate_private_key(ec.SECP256R1())
        priv = key.private_numbers().private_value.to_bytes(32, "big")
        nums = key.public_key().public_numbers()
        pub = nums.x.to_bytes(32, "big") + nums.y.to_bytes(32, "big")
        self._privs[pub] = priv
        return KeyPair(priv, pub)

    def sign(self, private: bytes, data: bytes) -> bytes:
        if self.mode is BackendMode.SIMULATED:
            core = _h(_DOM_SIM_SIG, private, data)
            return (core * 4)[:SIGNATURE_LEN]
        from cryptography.hazmat.primitives import hashes
        from cryptography.hazmat.primitives.asymmetric import ec
        from cryptography.hazmat.primitives.asymmetric.utils import (
            decode_dss_signature,
        )

        key = ec.derive_private_key(int.from_bytes(private, "big"),
                                    ec.SECP256R1())
        der = key.sign(data, ec.ECDSA(hashes.SHA256()))
        r, s = decode_dss_signature(der)
        return r.to_bytes(32, "big") + s.to_bytes(32, "big")

    def verify(self, public: bytes, data: bytes, signature: bytes,
               ledger: CpuLedger | None = None) -> bool:
        """Verify a signature; always charges one verification to the ledger."""
        if ledger is not None:
            ledger.charge_verify()
        if len(signature) != SIGNATURE_LEN:
            return False
        if self.mode is BackendMode.SIMULATED:
            priv = self._privs.get(public)
            if priv is None:
                return False
            core = _h(_DOM_SIM_SIG, priv, data)
            return signature == (core * 4)[:SIGNATURE_LEN]
        return self._verify_real(public, data, signature)

    @staticmethod
    def _verify_real(public: bytes, data: bytes, signature: bytes) -> bool:
        from cryptography.exceptions import InvalidSignature
        from cryptography.hazmat.primitives import hashes
        from cryptography.hazmat.primitives.asymmetric import ec
        from cryptography.hazmat.primitives.asymmetric.utils import (
            encode_dss_signature,
        )

        try:
            pub = ec.EllipticCurvePublicNumbers(
                int.from_bytes(public[:32], "big"),
                int.from_bytes(public[32:64], "big"),
                ec.SECP256R1(),
            ).public_key()
            der = encode_dss_signature(int.from_bytes(signature[:32], "big"),
                                       int.from_bytes(signature[32:], "big"))
            pub.verify(der, data, ec.ECDSA(hashes.SHA256()))
            return True
        except (InvalidSignature, ValueError):
            return False


def dump_chain(chain: KeyChain) -> bytes:
    """Binary debug dump: pcid, length, then all chain elements."""
    out = bytearray()
    out += chain.pcid.to_bytes(4, "little")
    out += chain.length.to_bytes(4, "little")
    for k in chain.keys:
        out += k
    return bytes(out)
