"""Oblivious lookup tables.

A finite map x_i -> y_i is materialized as the coefficient vector of the
interpolating polynomial through the points, so a lookup becomes a dot
product between a precomputed plaintext coefficient vector and the encrypted
powers (1, x, x^2, ...) of the input. The server evaluating the dot product
learns nothing beyond the table itself: it only runs homomorphic adds and
plaintext scalings.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from fractions import Fraction

from .encfloat import DEFAULT_BASE, EncFloat, PlainFloat, encode_plain, fp_add, fp_mul_plain
from .paillier import Ciphertext, PublicKey, encrypt

DEFAULT_GAMMA_LUT = 9
MAX_TABLE_SIZE = 4096


@dataclass(frozen=True, slots=True)
class LookupTable:
    """Plaintext side of an oblivious map: domain plus coefficient vector."""

    domain: tuple[int, ...]
    coefficients: tuple[PlainFloat, ...]
    gamma: int = DEFAULT_GAMMA_LUT


@dataclass(frozen=True, slots=True)
class EncodedInput:
    """Client-side encoding of a lookup input: encrypted powers of x."""

    powers: tuple[Ciphertext, ...]


def _interpolate(xs: list[int], ys: list[Fraction]) -> list[Fraction]:
    """Exact monomial coefficients of the polynomial through (xs, ys).

    Newton's divided differences followed by basis expansion; all arithmetic
    is rational, so the returned coefficients solve the underlying power-basis
    system exactly. Plain elimination on the power-basis matrix would give the
    same vector but with far larger intermediates.
    """
    n = len(xs)
    dd = list(ys)
    for order in range(1, n):
        for i in range(n - 1, order - 1, -1):
            dd[i] = (dd[i] - dd[i - 1]) / (xs[i] - xs[i - order])
    # expand newton form: p(x) = dd[0] + dd[1](x-x0) + dd[2](x-x0)(x-x1) + ...
    coeffs = [Fraction(0)] * n
    coeffs[0] = dd[n - 1]
    for i in range(n - 2, -1, -1):
        # coeffs <- coeffs * (x - xs[i]) + dd[i]
        for j in range(n - 1, 0, -1):
            coeffs[j] = coeffs[j - 1] - xs[i] * coeffs[j]
        coeffs[0] = dd[i] - xs[i] * coeffs[0]
    return coeffs


def build_table(
    domain: list[int],
    values: list[int | float | Fraction],
    gamma: int = DEFAULT_GAMMA_LUT,
) -> LookupTable:
    """Solve for the coefficient vector mapping each domain value to its output.

    The solve is exact rational interpolation; the coefficients are converted
    to fixed-point plaintext floats at `gamma` digits afterwards (integers
    survive the conversion exactly).
    """
    if len(domain) != len(values) or not domain:
        raise ValueError("domain and values must be equal-length and non-empty")
    if len(set(domain)) != len(domain):
        raise ValueError("domain values must be pairwise distinct")
    if len(domain) > MAX_TABLE_SIZE:
        raise ValueError(f"table size capped at {MAX_TABLE_SIZE} entries")
    xs = list(domain)
    ys = [Fraction(v) for v in values]
    coeffs = _interpolate(xs, ys)
    # self-check: the coefficients must reproduce every y exactly
    for x, y in zip(xs, ys):
        acc = Fraction(0)
        for c in reversed(coeffs):
            acc = acc * x + c
        if acc != y:
            raise ArithmeticError("interpolation self-check failed")
    return LookupTable(
        domain=tuple(xs),
        coefficients=tuple(encode_plain(c, gamma) for c in coeffs),
        gamma=gamma,
    )


def encode_input(
    x: int,
    n: int,
    pk: PublicKey,
    rng: random.Random | None = None,
    obfuscate: bool = True,
) -> EncodedInput:
    """Encrypt the n powers (1, x, ..., x^(n-1)) of a lookup input.

    This runs client-side before upload; the server never sees x itself and
    cannot build the powers from an encrypted x.
    """
    powers = []
    acc = 1
    for _ in range(n):
        powers.append(encrypt(acc % pk.n, pk, obfuscate, rng))
        acc *= x
    return EncodedInput(powers=tuple(powers))


def evaluate(encoded: EncodedInput, table: LookupTable, pk: PublicKey) -> EncFloat:
    """Homomorphic dot product of the encrypted powers with the table vector."""
    if len(encoded.powers) != len(table.coefficients):
        raise ValueError(
            f"input encodes {len(encoded.powers)} powers but the table has "
            f"{len(table.coefficients)} coefficients"
        )
    acc: EncFloat | None = None
    for power, coeff in zip(encoded.powers, table.coefficients):
        term = fp_mul_plain(EncFloat(power, 0, DEFAULT_BASE), coeff, pk)
        acc = term if acc is None else fp_add(acc, term, pk)
    assert acc is not None
    return acc


def table_to_json(table: LookupTable) -> str:
    return json.dumps(
        {
            "domain": list(table.domain),
            "l": [{"mantissa": str(c.mantissa), "exponent": str(c.exponent)} for c in table.coefficients],
            "gamma": table.gamma,
        }
    )


def table_from_json(doc: str) -> LookupTable:
    data = json.loads(doc)
    return LookupTable(
        domain=tuple(data["domain"]),
        coefficients=tuple(
            PlainFloat(int(c["mantissa"]), int(c["exponent"])) for c in data["l"]
        ),
        gamma=data["gamma"],
    )
