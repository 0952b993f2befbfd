"""RSA keypair lifecycle and per-field encryption to hex.

Identity fields travel as single-block RSA PKCS#1 v1.5 ciphertext,
hex-encoded.  The private key lives server-side as "private.pem"; the
public half is distributed as DER SubjectPublicKeyInfo ("public.der").
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from pathlib import Path

from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric import padding, rsa

SUPPORTED_KEY_BITS = (2048, 4096)
PKCS1_OVERHEAD_BYTES = 11


class CryptoError(Exception):
    pass


class UnsupportedKeySizeError(CryptoError):
    pass


class FieldTooLongError(CryptoError):
    pass


class DecryptionError(CryptoError):
    """Uniform failure for wrong key, corruption, or bad padding."""


DECRYPTION_FAILED = "decryption failed"


@dataclass
class KeyPairHandle:
    """A generated RSA keypair; private material never leaves the handle
    except through the explicit PEM export."""

    modulus_bits: int
    _private: rsa.RSAPrivateKey

    @property
    def public_der(self) -> bytes:
        return self._private.public_key().public_bytes(
            encoding=serialization.Encoding.DER,
            format=serialization.PublicFormat.SubjectPublicKeyInfo,
        )

    def save_private_pem(self, path: str | Path) -> None:
        pem = self._private.private_bytes(
            encoding=serialization.Encoding.PEM,
            format=serialization.PrivateFormat.PKCS8,
            encryption_algorithm=serialization.NoEncryption(),
        )
        path = Path(path)
        path.write_bytes(pem)
        os.chmod(path, 0o600)

    def save_public_der(self, path: str | Path) -> None:
        Path(path).write_bytes(self.public_der)

    @classmethod
    def load_private_pem(cls, path: str | Path) -> "KeyPairHandle":
        key = serialization.load_pem_private_key(Path(path).read_bytes(), password=None)
        if not isinstance(key, rsa.RSAPrivateKey):
            raise CryptoError("not an RSA private key")
        if key.key_size not in SUPPORTED_KEY_BITS:
            raise UnsupportedKeySizeError(f"unsupported key size: {key.key_size}")
        return cls(modulus_bits=key.key_size, _private=key)


def generate_keypair(bits: int) -> KeyPairHandle:
    if bits not in SUPPORTED_KEY_BITS:
        raise UnsupportedKeySizeError(f"unsupported key size: {bits}")
    key = rsa.generate_private_key(public_exponent=65537, key_size=bits)
    return KeyPairHandle(modulus_bits=bits, _private=key)


def max_plaintext_bytes(modulus_bits: int) -> int:
    return modulus_bits // 8 - PKCS1_OVERHEAD_BYTES


def encrypt_field(plaintext: bytes, public_der: bytes) -> str:
    """Encrypt one short field; returns lowercase hex of exactly
    modulus_bits/4 digits."""
    public = serialization.load_der_public_key(public_der)
    if not isinstance(public, rsa.RSAPublicKey):
        raise CryptoError("not an RSA public key")
    if len(plaintext) > max_plaintext_bytes(public.key_size):
        raise FieldTooLongError("field too long for single RSA block")
    return public.encrypt(plaintext, padding.PKCS1v15()).hex()


def decrypt_field(cipher_hex: str, key: KeyPairHandle) -> bytes:
    """Decrypt a hex field; either hex case is accepted.

    Length is checked before any key operation; all key-level failures
    collapse into one message so padding state is not leaked.
    """
    if len(cipher_hex) != key.modulus_bits // 4:
        raise DecryptionError(
            f"ciphertext hex length {len(cipher_hex)} does not match key size"
        )
    try:
        raw = bytes.fromhex(cipher_hex)
    except ValueError:
        raise DecryptionError("ciphertext is not valid hex") from None
    nums = key._private.private_numbers()
    pub = nums.public_numbers
    c = int.from_bytes(raw, "big")
    if c >= pub.n:
        raise DecryptionError(DECRYPTION_FAILED)
    # CRT private operation; padding is checked here rather than by the
    # backend so that corruption and wrong-key inputs fail loudly and
    # identically instead of yielding synthetic plaintext.
    m1 = pow(c, nums.dmp1, nums.p)
    m2 = pow(c, nums.dmq1, nums.q)
    h = (nums.iqmp * (m1 - m2)) % nums.p
    m = m2 + h * nums.q
    block = m.to_bytes(key.modulus_bits // 8, "big")
    return _unpad_pkcs1_v15(block)


def _unpad_pkcs1_v15(block: bytes) -> bytes:
    """Strip a 00 02 <pad> 00 <message> block type 2 envelope."""
    if len(block) < PKCS1_OVERHEAD_BYTES or block[0] != 0x00 or block[1] != 0x02:
        raise DecryptionError(DECRYPTION_FAILED)
    sep = block.find(b"\x00", 2)
    if sep < 2 + 8:  # padding must span at least eight nonzero bytes
        raise DecryptionError(DECRYPTION_FAILED)
    return block[sep + 1 :]


@dataclass
class BenchReport:
    """Timing of repeated decrypts at a fixed cadence."""

    key_bits: int
    period_s: float
    duration_s: float
    ops_completed: int
    mean_latency_s: float
    cpu_time_s: float
    latencies_s: list[float] = field(default_factory=list)


def timed_decrypts(key: KeyPairHandle, count: int) -> list[float]:
    """Back-to-back decrypt latencies (seconds) over ``count`` fresh
    ciphertexts."""
    der = key.public_der
    latencies = []
    for i in range(count):
        cipher = encrypt_field(f"sample-{i}".encode(), der)
        start = time.perf_counter()
        decrypt_field(cipher, key)
        latencies.append(time.perf_counter() - start)
    return latencies


def bench_decrypt(bits: int, duration_s: float, period_s: float) -> BenchReport:
    """Drive decrypt once per period for the given duration.

    Runs floor(duration/period) operations when each decrypt finishes
    within its period; a zero duration yields an empty report.
    """
    key = generate_keypair(bits)
    der = key.public_der
    target_ops = int(duration_s / period_s) if period_s > 0 else 0
    latencies: list[float] = []
    cpu_start = time.process_time()
    t0 = time.perf_counter()
    for i in range(target_ops):
        cipher = encrypt_field(f"bench-{i}".encode(), der)
        start = time.perf_counter()
        decrypt_field(cipher, key)
        latencies.append(time.perf_counter() - start)
        next_slot = t0 + (i + 1) * period_s
        sleep = next_slot - time.perf_counter()
        if sleep > 0 and i + 1 < target_ops:
            time.sleep(sleep)
    cpu_time = time.process_time() - cpu_start
    mean = sum(latencies) / len(latencies) if latencies else 0.0
    return BenchReport(
        key_bits=bits,
        period_s=period_s,
        duration_s=duration_s,
        ops_completed=len(latencies),
        mean_latency_s=mean,
        cpu_time_s=cpu_time,
        latencies_s=latencies,
    )
