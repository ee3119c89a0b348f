"""Volume model, density-vector encoding, encryption, and container formats.

Plaintext volumes are scalar voxel grids in x-fastest order. Encryption
normalizes each voxel to [0, 1] and either encrypts that scalar directly
(encoding_dim = 1) or encodes it as a short unit vector first so the
renderer can measure density similarity with homomorphic dot products
(encoding_dim >= 2).
"""

from __future__ import annotations

import math
import random
import struct
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .encfloat import DEFAULT_BASE, DEFAULT_GAMMA, EncFloat, round_half_away
from .paillier import Ciphertext, PublicKey, encrypt

CVOL_MAGIC = b"CVOL"
CVOL_VERSION = 1
RVOL_MAGIC = b"RVOL"
RVOL_VERSION = 1

# phantom densities are arbitrary config defaults, chosen to quantize to
# distinct 8-bit values
PHANTOM_CUBE_DENSITY = 1.0
PHANTOM_SHELL_DENSITY = 0.45
PHANTOM_CORNER_DENSITY = 0.75


class VolumeFormatError(ValueError):
    """Container bytes do not parse: bad magic, version, or truncation."""


@dataclass(frozen=True)
class Volume:
    """Plaintext voxel grid; dims are (width, height, depth)."""

    dims: tuple[int, int, int]
    bit_depth: int
    voxels: np.ndarray  # flat uint16, x-fastest

    def __post_init__(self) -> None:
        w, h, d = self.dims
        if len(self.voxels) != w * h * d:
            raise ValueError("voxel count does not match dims")
        if not 8 <= self.bit_depth <= 16:
            raise ValueError("bit depth must be in [8, 16]")
        if self.voxels.size and int(self.voxels.max()) >= 2**self.bit_depth:
            raise ValueError("voxel value exceeds bit depth")

    def voxel(self, x: int, y: int, z: int) -> int:
        w, h, _ = self.dims
        return int(self.voxels[x + w * (y + h * z)])

    def normalized(self, x: int, y: int, z: int) -> Fraction:
        return Fraction(self.voxel(x, y, z), 2**self.bit_depth - 1)


@dataclass(frozen=True)
class EncVolume:
    """Encrypted volume: one EncFloat per voxel per encoding component.

    The payload is voxel-major, component-minor, in the same x-fastest voxel
    order as the plaintext grid. The public modulus rides along so a server
    holding only this object can run the homomorphic operations.
    """

    dims: tuple[int, int, int]
    encoding_dim: int
    base: int
    modulus: int
    key_fingerprint: bytes
    payload: list[EncFloat]

    @property
    def modulus_bits(self) -> int:
        return self.modulus.bit_length()

    def public_key(self) -> PublicKey:
        return PublicKey.from_modulus(self.modulus)

    def voxel_components(self, flat_index: int) -> list[EncFloat]:
        d = self.encoding_dim
        return self.payload[flat_index * d : (flat_index + 1) * d]


def expected_payload_len(dims: tuple[int, int, int], encoding_dim: int) -> int:
    w, h, d = dims
    return w * h * d * encoding_dim


def encode_density(density: float | Fraction, dim: int) -> tuple[float, ...]:
    """Encode a normalized density as a non-negative unit vector.

    Mirrors an HSV-style ramp: the density selects one component (set to 1)
    and bleeds linearly into at most one adjacent component, then the vector
    is normalized. A dot product between two such vectors peaks exactly when
    the densities match. The branch arithmetic runs on exact rationals so
    integer boundaries are hit reliably.
    """
    if dim < 2:
        raise ValueError("vector encoding needs at least 2 dimensions")
    density = Fraction(density)
    if not 0 <= density <= 1:
        raise ValueError(f"density must lie in [0, 1], got {float(density)}")
    v = [Fraction(0)] * dim
    s = density * 2 * (dim - 1)
    floor_s = math.floor(s)
    f = Fraction(floor_s + 1, 2)
    d = math.floor(f)
    v[d] = Fraction(1)
    if d > 0 and d == f:
        v[d - 1] = 1 - (s - floor_s)
    elif d + 1 < dim and d < f:
        v[d + 1] = s - floor_s
    norm = math.sqrt(float(sum(c * c for c in v)))
    return tuple(float(c) / norm for c in v)


def quantized_voxel_mantissas(
    vol: Volume, encoding_dim: int, gamma: int, base: int = DEFAULT_BASE
) -> list[list[int]]:
    """Fixed-point mantissas (at exponent -gamma) for every possible raw
    voxel value, indexed by the value itself.

    A volume has at most 2^bit_depth distinct values, so quantizing (and for
    vector mode, density-encoding) once per value instead of once per voxel
    leaves encryption dominated by the actual modular arithmetic.
    """
    scale = base**gamma
    peak = 2**vol.bit_depth - 1
    table: list[list[int]] = []
    for raw in range(peak + 1):
        density = Fraction(raw, peak)
        if encoding_dim == 1:
            components: tuple = (density,)
        else:
            components = encode_density(density, encoding_dim)
        table.append([round_half_away(Fraction(c) * scale) for c in components])
    return table


def encrypt_volume(
    vol: Volume,
    pk: PublicKey,
    encoding_dim: int = 1,
    gamma: int = DEFAULT_GAMMA,
    rng: random.Random | None = None,
    obfuscate: bool = True,
    base: int = DEFAULT_BASE,
) -> EncVolume:
    """Encrypt every voxel of a volume.

    All mantissas are encoded at the fixed exponent -gamma so the whole
    volume shares one exponent; the renderer's add-only compositing relies
    on that, and a per-voxel exponent would leak nothing but also help
    nothing for freshly encrypted data.
    """
    if base**gamma > pk.max_plain:
        raise ValueError(
            f"key too small: {gamma} fractional digits need max_plain >= {base**gamma}"
        )
    mantissas = quantized_voxel_mantissas(vol, encoding_dim, gamma, base)
    payload: list[EncFloat] = []
    for raw in vol.voxels:
        for m in mantissas[int(raw)]:
            payload.append(
                EncFloat(encrypt(m % pk.n, pk, obfuscate, rng), -gamma, base)
            )
    return EncVolume(
        dims=vol.dims,
        encoding_dim=encoding_dim,
        base=base,
        modulus=pk.n,
        key_fingerprint=pk.fingerprint(),
        payload=payload,
    )


def storage_size(dims: tuple[int, int, int], modulus_bits: int, encoding_dim: int = 1) -> int:
    """Mantissa bytes for an encrypted volume.

    Every ciphertext lives modulo the squared modulus, so each component
    costs 2 * modulus_bits bits.
    """
    w, h, d = dims
    if min(w, h, d) <= 0 or modulus_bits <= 0 or encoding_dim <= 0:
        raise ValueError("dims, modulus bits, and encoding dim must be positive")
    return w * h * d * encoding_dim * 2 * modulus_bits // 8


def plain_storage_size(dims: tuple[int, int, int], encoding_dim: int = 1) -> int:
    """Plaintext bytes for the same grid at 8 bits per component."""
    w, h, d = dims
    return w * h * d * encoding_dim


# ---------------------------------------------------------------------------
# .cvol container: header, fixed-width big-endian mantissas, exponent sidecar


def serialize_enc_volume(ev: EncVolume) -> bytes:
    w, h, d = ev.dims
    k = ev.modulus_bits
    cipher_bytes = 2 * k // 8
    if 2 * k % 8:
        cipher_bytes += 1
    n_bytes = ev.modulus.to_bytes((k + 7) // 8, "big")
    header = CVOL_MAGIC + struct.pack(
        ">BIIIHHI8sI",
        CVOL_VERSION,
        w,
        h,
        d,
        ev.encoding_dim,
        ev.base,
        k,
        ev.key_fingerprint,
        len(n_bytes),
    )
    parts = [header, n_bytes]
    for ef in ev.payload:
        parts.append(ef.mantissa.value.to_bytes(cipher_bytes, "big"))
    for ef in ev.payload:
        parts.append(struct.pack(">i", ef.exponent))
    return b"".join(parts)


def deserialize_enc_volume(data: bytes) -> EncVolume:
    if data[:4] != CVOL_MAGIC:
        raise VolumeFormatError("not an encrypted volume container")
    offset = 4
    try:
        version, w, h, d, dim, base, k, fingerprint, n_len = struct.unpack_from(
            ">BIIIHHI8sI", data, offset
        )
    except struct.error as exc:
        raise VolumeFormatError("truncated header") from exc
    if version != CVOL_VERSION:
        raise VolumeFormatError(f"unsupported container version {version}")
    offset += struct.calcsize(">BIIIHHI8sI")
    if len(data) < offset + n_len:
        raise VolumeFormatError("truncated modulus")
    modulus = int.from_bytes(data[offset : offset + n_len], "big")
    offset += n_len
    count = w * h * d * dim
    cipher_bytes = (2 * k + 7) // 8
    need = count * cipher_bytes + count * 4
    if len(data) != offset + need:
        raise VolumeFormatError(
            f"payload size mismatch: expected {need} bytes after header, got {len(data) - offset}"
        )
    payload: list[EncFloat] = []
    mantissas = []
    for i in range(count):
        start = offset + i * cipher_bytes
        mantissas.append(int.from_bytes(data[start : start + cipher_bytes], "big"))
    offset += count * cipher_bytes
    for i in range(count):
        (exponent,) = struct.unpack_from(">i", data, offset + i * 4)
        payload.append(EncFloat(Ciphertext(mantissas[i]), exponent, base))
    ev = EncVolume(
        dims=(w, h, d),
        encoding_dim=dim,
        base=base,
        modulus=modulus,
        key_fingerprint=fingerprint,
        payload=payload,
    )
    if PublicKey.from_modulus(modulus).fingerprint() != fingerprint:
        raise VolumeFormatError("key fingerprint does not match the embedded modulus")
    if modulus.bit_length() != k:
        raise VolumeFormatError("modulus bit length does not match header")
    return ev


# ---------------------------------------------------------------------------
# .rvol plaintext grids: small header + raw little-endian scalars


def save_volume(vol: Volume, path) -> None:
    w, h, d = vol.dims
    header = RVOL_MAGIC + struct.pack("<BIIIB", RVOL_VERSION, w, h, d, vol.bit_depth)
    dtype = "<u1" if vol.bit_depth <= 8 else "<u2"
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(vol.voxels.astype(dtype).tobytes())


def load_volume(path) -> Volume:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != RVOL_MAGIC:
        raise VolumeFormatError("not a raw volume file")
    try:
        version, w, h, d, bit_depth = struct.unpack_from("<BIIIB", data, 4)
    except struct.error as exc:
        raise VolumeFormatError("truncated header") from exc
    if version != RVOL_VERSION:
        raise VolumeFormatError(f"unsupported raw volume version {version}")
    offset = 4 + struct.calcsize("<BIIIB")
    dtype = "<u1" if bit_depth <= 8 else "<u2"
    expected = w * h * d * (1 if bit_depth <= 8 else 2)
    if len(data) != offset + expected:
        raise VolumeFormatError("voxel data size mismatch")
    voxels = np.frombuffer(data[offset:], dtype=dtype).astype(np.uint16)
    return Volume(dims=(w, h, d), bit_depth=bit_depth, voxels=voxels)


def make_synthetic_volume(
    size: int,
    cube_density: float = PHANTOM_CUBE_DENSITY,
    shell_density: float = PHANTOM_SHELL_DENSITY,
    corner_density: float = PHANTOM_CORNER_DENSITY,
    bit_depth: int = 8,
) -> Volume:
    """Three-object phantom: a dense cube inside a sphere, plus a small
    sphere near the top-left-front corner, on a zero background."""
    if size < 16:
        raise ValueError("phantom needs size >= 16")
    center = (size - 1) / 2
    cube_half = size / 8
    sphere_radius = 0.35 * size
    corner_center = size / 6
    corner_radius = size / 10
    peak = 2**bit_depth - 1
    values = {
        "cube": round(cube_density * peak),
        "shell": round(shell_density * peak),
        "corner": round(corner_density * peak),
    }
    voxels = np.zeros(size * size * size, dtype=np.uint16)
    i = 0
    for z in range(size):
        for y in range(size):
            for x in range(size):
                dx, dy, dz = x - center, y - center, z - center
                if max(abs(dx), abs(dy), abs(dz)) <= cube_half:
                    voxels[i] = values["cube"]
                elif dx * dx + dy * dy + dz * dz <= sphere_radius**2:
                    voxels[i] = values["shell"]
                else:
                    cx, cy, cz = x - corner_center, y - corner_center, z - corner_center
                    if cx * cx + cy * cy + cz * cz <= corner_radius**2:
                        voxels[i] = values["corner"]
                i += 1
    return Volume(dims=(size, size, size), bit_depth=bit_depth, voxels=voxels)
