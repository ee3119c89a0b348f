"""Paillier cryptosystem on native Python big integers.

The scheme is additively homomorphic: multiplying two ciphertexts modulo N^2
adds their plaintexts modulo N, and raising a ciphertext to a plaintext power
scales its plaintext. Decryption runs on the CRT residues of the two secret
primes, which is roughly four times faster than working modulo N^2 directly.
"""

from __future__ import annotations

import hashlib
import json
import math
import random
import threading
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path

MIN_KEY_BITS = 16
DEFAULT_KEY_BITS = 2048
MILLER_RABIN_ROUNDS = 64


class CiphertextError(ValueError):
    """Value is outside the ciphertext group or shares a factor with N."""


@dataclass(frozen=True, slots=True)
class PublicKey:
    """Encryption key: modulus n = p*q and generator g = n + 1."""

    n: int
    g: int
    n_squared: int

    @classmethod
    def from_modulus(cls, n: int) -> "PublicKey":
        return cls(n=n, g=n + 1, n_squared=n * n)

    @property
    def max_plain(self) -> int:
        """Largest residue treated as a positive number.

        The field splits into thirds: [0, max_plain] is positive,
        [n - max_plain, n) is negative, and the middle third is a dead zone
        used to detect arithmetic overflow after decryption.
        """
        return (self.n - 1) // 3

    def fingerprint(self) -> bytes:
        """8-byte digest of the modulus, used to tag volumes and images."""
        raw = self.n.to_bytes((self.n.bit_length() + 7) // 8, "big")
        return hashlib.sha256(raw).digest()[:8]


@dataclass(frozen=True, slots=True)
class SecureKey:
    """Decryption key: the two primes plus precomputed CRT constants."""

    p: int
    q: int
    h_p: int
    h_q: int
    p_inv_mod_q: int

    def public_key(self) -> PublicKey:
        return PublicKey.from_modulus(self.p * self.q)


@dataclass(frozen=True, slots=True)
class Ciphertext:
    """An encrypted residue, stored as an integer in [0, n^2)."""

    value: int


# ---------------------------------------------------------------------------
# operation counting, used by the renderer tests to audit the homomorphic
# op budget; disabled unless a counter is installed on the current thread

_ACTIVE = threading.local()


class OpCounter:
    __slots__ = ("counts",)

    def __init__(self) -> None:
        self.counts: Counter[str] = Counter()

    def merge(self, other: "Counter[str] | dict[str, int]") -> None:
        self.counts.update(other)

    def __getitem__(self, name: str) -> int:
        return self.counts.get(name, 0)


def _tick(name: str) -> None:
    counter = getattr(_ACTIVE, "counter", None)
    if counter is not None:
        counter.counts[name] += 1


@contextmanager
def count_ops():
    """Install an OpCounter for the current thread and yield it."""
    counter = OpCounter()
    previous = getattr(_ACTIVE, "counter", None)
    _ACTIVE.counter = counter
    try:
        yield counter
    finally:
        _ACTIVE.counter = previous


# ---------------------------------------------------------------------------
# key generation


def _is_probable_prime(n: int, rng: random.Random, rounds: int = MILLER_RABIN_ROUNDS) -> bool:
    """Miller-Rabin with `rounds` random witnesses (error < 4^-rounds)."""
    if n < 2:
        return False
    for small in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % small == 0:
            return n == small
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _random_prime(bits: int, rng: random.Random) -> int:
    while True:
        candidate = rng.getrandbits(bits) | (1 << (bits - 1)) | 1
        if _is_probable_prime(candidate, rng):
            return candidate


def generate_keys(bit_length: int, rng: random.Random | None = None) -> tuple[SecureKey, PublicKey]:
    """Generate a key pair whose modulus has exactly `bit_length` bits.

    `rng` is any `random.Random`-compatible source; pass a seeded instance
    for reproducible keys in tests. Defaults to the OS CSPRNG.
    """
    if bit_length < MIN_KEY_BITS:
        raise ValueError(f"key size must be at least {MIN_KEY_BITS} bits, got {bit_length}")
    if bit_length % 2 != 0:
        raise ValueError(f"key size must be even, got {bit_length}")
    if rng is None:
        rng = random.SystemRandom()

    half = bit_length // 2
    while True:
        p = _random_prime(half, rng)
        q = _random_prime(half, rng)
        if p == q:
            continue
        n = p * q
        if n.bit_length() == bit_length:
            break

    return secure_key_from_primes(p, q), PublicKey.from_modulus(n)


def _crt_l(x: int, y: int) -> int:
    return (x - 1) // y


def _crt_h(prime: int, g: int) -> int:
    return pow(_crt_l(pow(g, prime - 1, prime * prime), prime), -1, prime)


def secure_key_from_primes(p: int, q: int) -> SecureKey:
    """Assemble a SecureKey, precomputing the per-prime decryption constants."""
    g = p * q + 1
    return SecureKey(p=p, q=q, h_p=_crt_h(p, g), h_q=_crt_h(q, g), p_inv_mod_q=pow(p, -1, q))


# ---------------------------------------------------------------------------
# encryption and decryption


def _random_unit(pk: PublicKey, rng: random.Random) -> int:
    """Uniform r in [1, n) with gcd(r, n) = 1."""
    while True:
        r = rng.randrange(1, pk.n)
        if math.gcd(r, pk.n) == 1:
            return r


def encrypt(
    m: int,
    pk: PublicKey,
    obfuscate: bool = True,
    rng: random.Random | None = None,
) -> Ciphertext:
    """Encrypt a residue in [0, n).

    With `obfuscate` the ciphertext is blinded by r^n for a fresh random r,
    making encryption probabilistic. Without it r = 1; that variant is
    deterministic and only suitable for benchmarks and tests.
    """
    if not 0 <= m < pk.n:
        raise ValueError(f"plaintext must lie in [0, n), got {m}")
    _tick("encrypt")
    # g = n + 1 makes g^m mod n^2 collapse to 1 + m*n
    c = (1 + m * pk.n) % pk.n_squared
    if obfuscate:
        if rng is None:
            rng = random.SystemRandom()
        r = _random_unit(pk, rng)
        c = c * pow(r, pk.n, pk.n_squared) % pk.n_squared
    return Ciphertext(c)


def decrypt(c: Ciphertext, sk: SecureKey, pk: PublicKey) -> int:
    """Recover the residue in [0, n) via the two-prime CRT path."""
    _validate(c, pk)
    if math.gcd(c.value, pk.n) != 1:
        raise CiphertextError("ciphertext shares a factor with the modulus")
    p, q = sk.p, sk.q
    m_p = _crt_l(pow(c.value, p - 1, p * p), p) * sk.h_p % p
    m_q = _crt_l(pow(c.value, q - 1, q * q), q) * sk.h_q % q
    return m_p + ((m_q - m_p) * sk.p_inv_mod_q % q) * p


def _validate(c: Ciphertext, pk: PublicKey) -> None:
    if not 0 <= c.value < pk.n_squared:
        raise CiphertextError(f"ciphertext out of range [0, n^2): {c.value}")


# ---------------------------------------------------------------------------
# homomorphic operations


def he_add(c1: Ciphertext, c2: Ciphertext, pk: PublicKey) -> Ciphertext:
    """Homomorphic addition: decrypts to (m1 + m2) mod n."""
    _validate(c1, pk)
    _validate(c2, pk)
    _tick("he_add")
    return Ciphertext(c1.value * c2.value % pk.n_squared)


def he_scale(c: Ciphertext, d: int, pk: PublicKey) -> Ciphertext:
    """Homomorphic scaling by a plaintext integer: decrypts to (m * d) mod n.

    Negative d goes through the modular inverse, so subtraction and
    two's-complement negatives need no special casing by callers.
    """
    _validate(c, pk)
    _tick("he_scale")
    return Ciphertext(pow(c.value, d, pk.n_squared))


def he_negate(c: Ciphertext, pk: PublicKey) -> Ciphertext:
    """Additive inverse: decrypts to n - m, the two's complement of m."""
    _validate(c, pk)
    _tick("he_negate")
    try:
        inv = pow(c.value, -1, pk.n_squared)
    except ValueError as exc:
        raise CiphertextError("ciphertext is not invertible modulo n^2") from exc
    return Ciphertext(inv)


def obfuscate(c: Ciphertext, pk: PublicKey, rng: random.Random | None = None) -> Ciphertext:
    """Re-randomize a ciphertext without changing its plaintext."""
    _validate(c, pk)
    _tick("obfuscate")
    if rng is None:
        rng = random.SystemRandom()
    r = _random_unit(pk, rng)
    return Ciphertext(c.value * pow(r, pk.n, pk.n_squared) % pk.n_squared)


# ---------------------------------------------------------------------------
# key files: JSON documents with lowercase-hex big-endian integer fields.
# Field names are part of the format contract.


def save_public_key(pk: PublicKey, path: str | Path) -> None:
    Path(path).write_text(json.dumps({"n": format(pk.n, "x"), "g": format(pk.g, "x")}) + "\n")


def load_public_key(path: str | Path) -> PublicKey:
    doc = json.loads(Path(path).read_text())
    n = int(doc["n"], 16)
    g = int(doc["g"], 16)
    pk = PublicKey(n=n, g=g, n_squared=n * n)
    if g != n + 1:
        raise ValueError("unsupported generator: expected g = n + 1")
    return pk


def save_secure_key(sk: SecureKey, path: str | Path) -> None:
    Path(path).write_text(json.dumps({"p": format(sk.p, "x"), "q": format(sk.q, "x")}) + "\n")


def load_secure_key(path: str | Path) -> SecureKey:
    doc = json.loads(Path(path).read_text())
    return secure_key_from_primes(int(doc["p"], 16), int(doc["q"], 16))
