"""Floating-point arithmetic over ciphertexts.

A number is stored as an encrypted mantissa plus a plaintext exponent over a
fixed base (10 by default), so the value is mantissa * base^exponent. Only
the mantissa is ever encrypted. Negative mantissas use the two's complement
modulo n and are decoded by thresholding against the positive third of the
field.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .paillier import Ciphertext, PublicKey, SecureKey, decrypt, encrypt, he_add, he_negate, he_scale

DEFAULT_BASE = 10
DEFAULT_GAMMA = 6


class EncFloatError(ArithmeticError):
    pass


class PrecisionExhaustedError(EncFloatError):
    """A rescale or encode step would push the mantissa past max_plain."""


class OverflowDetectedError(EncFloatError):
    """A decrypted mantissa landed in the dead zone between the signs."""


@dataclass(frozen=True, slots=True)
class PlainFloat:
    """Unencrypted fixed-point number: value = mantissa * base^exponent."""

    mantissa: int
    exponent: int


@dataclass(frozen=True, slots=True)
class EncFloat:
    """Encrypted-mantissa floating-point number."""

    mantissa: Ciphertext
    exponent: int
    base: int = DEFAULT_BASE

    def to_wire(self) -> dict[str, str]:
        return {"mantissa": format(self.mantissa.value, "x"), "exponent": str(self.exponent)}

    @classmethod
    def from_wire(cls, doc: dict[str, str], base: int = DEFAULT_BASE) -> "EncFloat":
        return cls(Ciphertext(int(doc["mantissa"], 16)), int(doc["exponent"]), base)


def round_half_away(x: Fraction) -> int:
    """Round to the nearest integer, ties away from zero."""
    if x < 0:
        return -round_half_away(-x)
    return int(x + Fraction(1, 2))


def encode(
    value: int | float | str | Fraction,
    max_fraction_digits: int,
    base: int = DEFAULT_BASE,
    minimize: bool = True,
) -> tuple[int, int]:
    """Turn a decimal value into a signed (mantissa, exponent) pair.

    With `minimize` the exponent is the smallest digit count that represents
    the value exactly, capped at `max_fraction_digits` (rounding half away
    from zero at the cap). Without it the exponent is pinned to
    -max_fraction_digits, which keeps whole collections of encodings on one
    shared exponent.
    """
    f = Fraction(value)
    if minimize:
        for digits in range(max_fraction_digits + 1):
            scaled = f * base**digits
            if scaled.denominator == 1:
                return int(scaled), -digits
    return round_half_away(f * base**max_fraction_digits), -max_fraction_digits


def encode_plain(
    value: int | float | str | Fraction,
    max_fraction_digits: int,
    base: int = DEFAULT_BASE,
    minimize: bool = True,
) -> PlainFloat:
    mantissa, exponent = encode(value, max_fraction_digits, base, minimize)
    return PlainFloat(mantissa, exponent)


def plain_value(pf: PlainFloat, base: int = DEFAULT_BASE) -> Fraction:
    return Fraction(pf.mantissa) * Fraction(base) ** pf.exponent


def encode_encrypt(
    value: int | float | str | Fraction,
    pk: PublicKey,
    max_fraction_digits: int = DEFAULT_GAMMA,
    rng: random.Random | None = None,
    base: int = DEFAULT_BASE,
    obfuscate: bool = True,
    minimize: bool = True,
) -> EncFloat:
    """Encode a decimal value and encrypt its mantissa."""
    mantissa, exponent = encode(value, max_fraction_digits, base, minimize)
    if abs(mantissa) > pk.max_plain:
        raise PrecisionExhaustedError(
            f"mantissa {mantissa} exceeds max_plain {pk.max_plain}; use a larger key"
        )
    return EncFloat(encrypt(mantissa % pk.n, pk, obfuscate, rng), exponent, base)


def decrypt_float(a: EncFloat, sk: SecureKey, pk: PublicKey) -> Fraction:
    """Decrypt to an exact rational value.

    Residues in the positive third decode as-is, residues in the negative
    third decode as value - n. Anything in between means some upstream
    operation overflowed, and raises.
    """
    m = decrypt(a.mantissa, sk, pk)
    if m > pk.max_plain:
        if m < pk.n - pk.max_plain:
            raise OverflowDetectedError(f"mantissa {m} lies in the overflow dead zone")
        m -= pk.n
    return Fraction(m) * Fraction(a.base) ** a.exponent


def fp_add(a: EncFloat, b: EncFloat, pk: PublicKey) -> EncFloat:
    """Add two encrypted floats.

    The operand with the greater exponent is rescaled down to the smaller
    exponent first (an exponent can only ever decrease once the mantissa is
    encrypted), then the mantissas are added homomorphically.
    """
    if a.base != b.base:
        raise ValueError(f"mismatched bases: {a.base} != {b.base}")
    if a.exponent > b.exponent:
        a = decrease_exponent_to(a, b.exponent, pk)
    elif a.exponent < b.exponent:
        b = decrease_exponent_to(b, a.exponent, pk)
    return EncFloat(he_add(a.mantissa, b.mantissa, pk), a.exponent, a.base)


def fp_mul_plain(a: EncFloat, k: PlainFloat, pk: PublicKey) -> EncFloat:
    """Multiply an encrypted float by a plaintext one.

    Mantissas multiply homomorphically, exponents add. When the plaintext
    mantissa is negative (its complement n - m2 is small), the ciphertext is
    inverted and raised to the small complement instead of the full-width
    residue; that keeps the modular exponent short.
    """
    m2 = k.mantissa % pk.n
    complement = pk.n - m2
    if complement <= pk.max_plain:
        base_cipher = he_negate(a.mantissa, pk)
        power = complement
    else:
        base_cipher = a.mantissa
        power = m2
    return EncFloat(he_scale(base_cipher, power, pk), a.exponent + k.exponent, a.base)


def decrease_exponent_to(a: EncFloat, new_exponent: int, pk: PublicKey) -> EncFloat:
    """Rewrite a to a smaller exponent without changing its value."""
    if new_exponent > a.exponent:
        raise ValueError(
            f"cannot increase exponent from {a.exponent} to {new_exponent}: "
            "that would divide the encrypted mantissa"
        )
    if new_exponent == a.exponent:
        return a
    factor = a.base ** (a.exponent - new_exponent)
    if factor > pk.max_plain:
        raise PrecisionExhaustedError(
            f"rescale factor {a.base}^{a.exponent - new_exponent} exceeds max_plain"
        )
    return EncFloat(he_scale(a.mantissa, factor, pk), new_exponent, a.base)


def fp_div_plain(a: EncFloat, n: int, max_fraction_digits: int, pk: PublicKey) -> EncFloat:
    """Approximate division by a positive integer.

    Multiplies by the fixed-point reciprocal round(base^digits / n) at
    exponent -digits, so the result is within |a| * base^-digits of the
    true quotient.
    """
    if n < 1:
        raise ValueError(f"divisor must be a positive integer, got {n}")
    if max_fraction_digits < 1:
        raise ValueError("need at least one reciprocal digit")
    reciprocal = round_half_away(Fraction(a.base**max_fraction_digits, n))
    return fp_mul_plain(a, PlainFloat(reciprocal, -max_fraction_digits), pk)


def equalize_exponents(values: list[EncFloat], pk: PublicKey) -> tuple[list[Ciphertext], int]:
    """Rescale every value to the smallest exponent in the batch.

    Returns the rescaled mantissas plus the single shared exponent; the
    represented values are unchanged.
    """
    if not values:
        raise ValueError("cannot equalize an empty sequence")
    base = values[0].base
    for v in values:
        if v.base != base:
            raise ValueError("all values must share one base")
    common = min(v.exponent for v in values)
    return [decrease_exponent_to(v, common, pk).mantissa for v in values], common
