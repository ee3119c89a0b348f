"""Encrypted image container.

Pixels of one channel share a single exponent (the renderer equalizes them
before shipping), so the wire format is a small plaintext header, one
fixed-width big-endian mantissa per pixel per channel, and a plaintext
per-pixel sample-count grid for client-side verification.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .paillier import Ciphertext

EIMG_MAGIC = b"EIMG"
EIMG_VERSION = 1


class ImageFormatError(ValueError):
    pass


@dataclass(frozen=True)
class EncImage:
    width: int
    height: int
    channels: int
    base: int
    gamma: int
    modulus_bits: int
    key_fingerprint: bytes
    exponents: tuple[int, ...]  # one per channel
    mantissas: tuple[tuple[Ciphertext, ...], ...]  # channel-major, row-major
    sample_counts: tuple[int, ...]  # row-major

    def __post_init__(self) -> None:
        if len(self.exponents) != self.channels or len(self.mantissas) != self.channels:
            raise ValueError("need one exponent and one mantissa grid per channel")
        pixels = self.width * self.height
        if any(len(grid) != pixels for grid in self.mantissas):
            raise ValueError("mantissa grid size does not match resolution")
        if len(self.sample_counts) != pixels:
            raise ValueError("sample count grid size does not match resolution")


def serialize_enc_image(img: EncImage) -> bytes:
    cipher_bytes = (2 * img.modulus_bits + 7) // 8
    parts = [
        EIMG_MAGIC,
        struct.pack(
            ">BIIBHhI8s",
            EIMG_VERSION,
            img.width,
            img.height,
            img.channels,
            img.base,
            img.gamma,
            img.modulus_bits,
            img.key_fingerprint,
        ),
    ]
    for exponent in img.exponents:
        parts.append(struct.pack(">i", exponent))
    for grid in img.mantissas:
        for c in grid:
            parts.append(c.value.to_bytes(cipher_bytes, "big"))
    for count in img.sample_counts:
        parts.append(struct.pack(">I", count))
    return b"".join(parts)


def deserialize_enc_image(data: bytes) -> EncImage:
    if data[:4] != EIMG_MAGIC:
        raise ImageFormatError("not an encrypted image")
    head = ">BIIBHhI8s"
    try:
        version, width, height, channels, base, gamma, bits, fingerprint = struct.unpack_from(
            head, data, 4
        )
    except struct.error as exc:
        raise ImageFormatError("truncated header") from exc
    if version != EIMG_VERSION:
        raise ImageFormatError(f"unsupported image version {version}")
    offset = 4 + struct.calcsize(head)
    pixels = width * height
    cipher_bytes = (2 * bits + 7) // 8
    expected = channels * 4 + channels * pixels * cipher_bytes + pixels * 4
    if len(data) != offset + expected:
        raise ImageFormatError("image payload size mismatch")
    exponents = struct.unpack_from(f">{channels}i", data, offset)
    offset += channels * 4
    mantissas = []
    for _ in range(channels):
        grid = []
        for _ in range(pixels):
            grid.append(Ciphertext(int.from_bytes(data[offset : offset + cipher_bytes], "big")))
            offset += cipher_bytes
        mantissas.append(tuple(grid))
    sample_counts = struct.unpack_from(f">{pixels}I", data, offset)
    return EncImage(
        width=width,
        height=height,
        channels=channels,
        base=base,
        gamma=gamma,
        modulus_bits=bits,
        key_fingerprint=fingerprint,
        exponents=tuple(exponents),
        mantissas=tuple(mantissas),
        sample_counts=tuple(sample_counts),
    )
