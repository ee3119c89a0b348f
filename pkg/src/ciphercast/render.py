"""Encrypted volume ray casting.

The server-side core: perspective rays, nearest-neighbor and trilinear
sampling over ciphertexts, and three compositing modes. Everything here
touches ciphertexts only through homomorphic add and plaintext scaling; the
module has no notion of a decryption key. A plaintext twin of the pipeline
(`render_plaintext`) mirrors every quantization step and serves as the
testing oracle.
"""

from __future__ import annotations

import math
import multiprocessing
import random
import uuid
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from .encfloat import (
    DEFAULT_GAMMA,
    EncFloat,
    PlainFloat,
    equalize_exponents,
    fp_add,
    fp_div_plain,
    fp_mul_plain,
    round_half_away,
)
from .encimage import EncImage
from .paillier import _ACTIVE, Ciphertext, OpCounter, PublicKey, count_ops, encrypt, obfuscate
from .volume import EncVolume, Volume, encode_density, quantized_voxel_mantissas

MODES = ("xray_nn", "xray_trilinear", "emphasize", "color_tf")
DEFAULT_STEP_SIZE = 0.5


@dataclass(frozen=True)
class Camera:
    eye: tuple[float, float, float]
    look_at: tuple[float, float, float]
    up: tuple[float, float, float] = (0.0, 1.0, 0.0)
    vertical_fov: float = 45.0
    resolution: tuple[int, int] = (64, 64)


@dataclass(frozen=True)
class TransferNode:
    """A density worth emphasizing and the color it contributes."""

    density: float
    color: tuple[float, float, float]


@dataclass(frozen=True)
class RenderRequest:
    camera: Camera
    mode: str = "xray_nn"
    emphasize_density: float | None = None
    tf_nodes: tuple[TransferNode, ...] = ()
    step_size: float = DEFAULT_STEP_SIZE
    gamma: int = DEFAULT_GAMMA


# ---------------------------------------------------------------------------
# geometry


def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


def _cross(a, b):
    return (
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    )


def _norm(a):
    return math.sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2])


def _normalize(a):
    n = _norm(a)
    if n == 0.0:
        raise ValueError("zero-length vector")
    return (a[0] / n, a[1] / n, a[2] / n)


def generate_rays(camera: Camera) -> list[tuple[tuple[float, float, float], tuple[float, float, float]]]:
    """Perspective pinhole rays, row-major with row 0 at the top.

    The continuous image center maps onto the view axis, so the ray through
    pixel coordinates (w/2, h/2) passes through the look-at point.
    """
    w, h = camera.resolution
    if w <= 0 or h <= 0:
        raise ValueError("resolution must be positive")
    if not 0.0 < camera.vertical_fov < 180.0:
        raise ValueError("vertical fov must lie in (0, 180) degrees")
    forward = _normalize(_sub(camera.look_at, camera.eye))
    right = _cross(forward, camera.up)
    if _norm(right) < 1e-12:
        raise ValueError("up vector is parallel to the view direction")
    right = _normalize(right)
    true_up = _cross(right, forward)
    half = math.tan(math.radians(camera.vertical_fov) / 2.0)
    scale = 2.0 * half / h  # square pixels, vertical fov governs
    rays = []
    for j in range(h):
        v = (h / 2.0 - (j + 0.5)) * scale
        for i in range(w):
            u = ((i + 0.5) - w / 2.0) * scale
            direction = _normalize(
                (
                    forward[0] + u * right[0] + v * true_up[0],
                    forward[1] + u * right[1] + v * true_up[1],
                    forward[2] + u * right[2] + v * true_up[2],
                )
            )
            rays.append((camera.eye, direction))
    return rays


def _ray_box(origin, direction, dims) -> tuple[float, float] | None:
    """Slab intersection with the voxel-center bounding box, clipped to t >= 0."""
    t0, t1 = 0.0, math.inf
    for axis in range(3):
        lo, hi = -0.5, dims[axis] - 0.5
        o, d = origin[axis], direction[axis]
        if d == 0.0:
            if not lo <= o <= hi:
                return None
            continue
        ta, tb = (lo - o) / d, (hi - o) / d
        if ta > tb:
            ta, tb = tb, ta
        t0, t1 = max(t0, ta), min(t1, tb)
    if t0 >= t1:
        return None
    return t0, t1


def _sample_positions(origin, direction, dims, step) -> list[tuple[float, float, float]]:
    hit = _ray_box(origin, direction, dims)
    if hit is None:
        return []
    t0, t1 = hit
    count = int((t1 - t0) / step)
    if count < 1:
        ts = [(t0 + t1) / 2.0]
    else:
        ts = [t0 + (k + 0.5) * step for k in range(count)]
    return [
        (origin[0] + t * direction[0], origin[1] + t * direction[1], origin[2] + t * direction[2])
        for t in ts
    ]


def _nearest_index(pos, dims) -> int:
    idx = []
    for axis in range(3):
        i = math.floor(pos[axis] + 0.5)
        idx.append(min(max(i, 0), dims[axis] - 1))
    return idx[0] + dims[0] * (idx[1] + dims[1] * idx[2])


def _trilinear_terms(pos, dims) -> list[tuple[int, float]]:
    """The 8 neighbor (index, weight) pairs; weights sum to 1.

    Positions whose full neighborhood leaves the grid fall back to a single
    nearest-neighbor term with weight 1.
    """
    base_idx = [math.floor(pos[axis]) for axis in range(3)]
    if any(base_idx[a] < 0 or base_idx[a] + 1 > dims[a] - 1 for a in range(3)):
        return [(_nearest_index(pos, dims), 1.0)]
    fx = pos[0] - base_idx[0]
    fy = pos[1] - base_idx[1]
    fz = pos[2] - base_idx[2]
    terms = []
    for dz in (0, 1):
        wz = fz if dz else 1.0 - fz
        for dy in (0, 1):
            wy = fy if dy else 1.0 - fy
            for dx in (0, 1):
                wx = fx if dx else 1.0 - fx
                flat = (base_idx[0] + dx) + dims[0] * ((base_idx[1] + dy) + dims[1] * (base_idx[2] + dz))
                terms.append((flat, wx * wy * wz))
    return terms


def _pixel_plan(ray, dims, req: RenderRequest) -> list[list[tuple[int, float | None]]]:
    """Per-sample voxel terms for one ray.

    A term weight of None means "copy the voxel value" (nearest neighbor,
    no homomorphic work); a float weight is quantized and multiplied in.
    Both the encrypted and the plaintext pipeline consume the exact same
    plan, so their float-level geometry is bit-identical.
    """
    positions = _sample_positions(ray[0], ray[1], dims, req.step_size)
    if req.mode == "xray_trilinear":
        return [_trilinear_terms(pos, dims) for pos in positions]
    return [[(_nearest_index(pos, dims), None)] for pos in positions]


def _quantize_weight(weight: float, gamma: int, base: int) -> PlainFloat:
    return PlainFloat(round_half_away(Fraction(weight) * base**gamma), -gamma)


# ---------------------------------------------------------------------------
# sampling and compositing over ciphertexts


def sample_nn(vol: EncVolume, pos) -> list[EncFloat]:
    """Copy the payload of the voxel nearest to pos. Free of homomorphic ops."""
    _check_inside(pos, vol.dims)
    return vol.voxel_components(_nearest_index(pos, vol.dims))


def sample_trilinear(vol: EncVolume, pos, gamma: int, pk: PublicKey) -> list[EncFloat]:
    """Weighted sum of the 8 neighboring voxels, weights quantized at gamma."""
    _check_inside(pos, vol.dims)
    terms = _trilinear_terms(pos, vol.dims)
    out: list[EncFloat] = []
    for component in range(vol.encoding_dim):
        acc: EncFloat | None = None
        for flat, weight in terms:
            voxel = vol.voxel_components(flat)[component]
            term = fp_mul_plain(voxel, _quantize_weight(weight, gamma, vol.base), pk)
            acc = term if acc is None else fp_add(acc, term, pk)
        assert acc is not None
        out.append(acc)
    return out


def _check_inside(pos, dims) -> None:
    for axis in range(3):
        if not -0.5 <= pos[axis] <= dims[axis] - 0.5:
            raise ValueError(f"sample position {pos} outside the volume")


def composite_xray(samples: list[EncFloat], gamma: int, pk: PublicKey) -> EncFloat:
    """Sum the samples along the ray and divide by their count."""
    if not samples:
        raise ValueError("cannot composite an empty ray")
    acc = samples[0]
    for s in samples[1:]:
        acc = fp_add(acc, s, pk)
    return fp_div_plain(acc, len(samples), gamma, pk)


def composite_emphasize(
    sample_vectors: list[list[EncFloat]],
    target: list[PlainFloat],
    gamma: int,
    pk: PublicKey,
) -> EncFloat:
    """Dot each encoded sample against the target vector, then average."""
    if not sample_vectors:
        raise ValueError("cannot composite an empty ray")
    acc: EncFloat | None = None
    for components in sample_vectors:
        if len(components) != len(target):
            raise ValueError("encoding dimension does not match the target vector")
        dot = _dot_plain(components, target, pk)
        acc = dot if acc is None else fp_add(acc, dot, pk)
    assert acc is not None
    return fp_div_plain(acc, len(sample_vectors), gamma, pk)


def composite_color_tf(
    sample_vectors: list[list[EncFloat]],
    nodes: list[tuple[list[PlainFloat], list[PlainFloat]]],
    gamma: int,
    pk: PublicKey,
) -> tuple[EncFloat, EncFloat, EncFloat]:
    """Per-node emphasize responses scaled by node colors, averaged per channel.

    Each node contributes (sample . node_density_vector) * color; the sums
    are divided by sample count times node count.
    """
    if not sample_vectors:
        raise ValueError("cannot composite an empty ray")
    if not nodes:
        raise ValueError("need at least one transfer function node")
    channels: list[EncFloat | None] = [None, None, None]
    for components in sample_vectors:
        for density_vec, color in nodes:
            dot = _dot_plain(components, density_vec, pk)
            for ch in range(3):
                term = fp_mul_plain(dot, color[ch], pk)
                channels[ch] = term if channels[ch] is None else fp_add(channels[ch], term, pk)
    divisor = len(sample_vectors) * len(nodes)
    return tuple(fp_div_plain(c, divisor, gamma, pk) for c in channels)  # type: ignore[return-value]


def _dot_plain(components: list[EncFloat], plain: list[PlainFloat], pk: PublicKey) -> EncFloat:
    acc: EncFloat | None = None
    for comp, coeff in zip(components, plain):
        term = fp_mul_plain(comp, coeff, pk)
        acc = term if acc is None else fp_add(acc, term, pk)
    assert acc is not None
    return acc


# ---------------------------------------------------------------------------
# full-image rendering


def _validate_request(req: RenderRequest, encoding_dim: int) -> None:
    if req.mode not in MODES:
        raise ValueError(f"unknown mode {req.mode!r}")
    if req.mode in ("xray_nn", "xray_trilinear") and encoding_dim != 1:
        raise ValueError("x-ray modes need a scalar-encoded volume")
    if req.mode in ("emphasize", "color_tf") and encoding_dim < 2:
        raise ValueError(f"{req.mode} needs a vector-encoded volume")
    if req.mode == "emphasize" and req.emphasize_density is None:
        raise ValueError("emphasize mode needs emphasize_density")
    if req.mode == "color_tf" and not req.tf_nodes:
        raise ValueError("color_tf mode needs at least one node")
    if req.step_size <= 0:
        raise ValueError("step size must be positive")


def _node_coefficients(req: RenderRequest, encoding_dim: int, base: int):
    """Quantized plaintext vectors for the request's transfer settings."""
    gamma = req.gamma
    if req.mode == "emphasize":
        target = encode_density(req.emphasize_density, encoding_dim)
        return [_quantize_weight(c, gamma, base) for c in target]
    if req.mode == "color_tf":
        nodes = []
        for node in req.tf_nodes:
            vec = [_quantize_weight(c, gamma, base) for c in encode_density(node.density, encoding_dim)]
            color = [_quantize_weight(c, gamma, base) for c in node.color]
            nodes.append((vec, color))
        return nodes
    return None


# per-render contexts keyed by token so concurrent renders in one process
# cannot clobber each other; forked workers inherit the entry for their token
_WORK_CTX: dict[str, dict] = {}


def _render_chunk(task: tuple[str, int, int]):
    """Render pixels [start, stop) using the context behind the token."""
    token, start, stop = task
    ctx = _WORK_CTX[token]
    vol: EncVolume = ctx["vol"]
    req: RenderRequest = ctx["req"]
    pk: PublicKey = ctx["pk"]
    rays = ctx["rays"]
    coeffs = ctx["coeffs"]
    channels = 3 if req.mode == "color_tf" else 1
    results = []
    with count_ops() as counter:
        for index in range(start, stop):
            plan = _pixel_plan(rays[index], vol.dims, req)
            if not plan:
                zero = encrypt(0, pk, obfuscate=False)
                results.append(([(zero.value, 0)] * channels, 0))
                continue
            sample_vectors = []
            for terms in plan:
                components = []
                for comp_index in range(vol.encoding_dim):
                    acc: EncFloat | None = None
                    for flat, weight in terms:
                        voxel = vol.voxel_components(flat)[comp_index]
                        if weight is None:
                            term = voxel
                        else:
                            term = fp_mul_plain(
                                voxel, _quantize_weight(weight, req.gamma, vol.base), pk
                            )
                        acc = term if acc is None else fp_add(acc, term, pk)
                    components.append(acc)
                sample_vectors.append(components)
            if req.mode in ("xray_nn", "xray_trilinear"):
                value = composite_xray([v[0] for v in sample_vectors], req.gamma, pk)
                pixel = [value]
            elif req.mode == "emphasize":
                pixel = [composite_emphasize(sample_vectors, coeffs, req.gamma, pk)]
            else:
                pixel = list(composite_color_tf(sample_vectors, coeffs, req.gamma, pk))
            results.append(
                ([(p.mantissa.value, p.exponent) for p in pixel], len(sample_vectors))
            )
    return start, results, dict(counter.counts)


def render(
    vol: EncVolume,
    req: RenderRequest,
    pk: PublicKey | None = None,
    rng: random.Random | None = None,
    workers: int = 1,
) -> EncImage:
    """Ray-cast an encrypted volume into an encrypted image.

    Every output channel is brought to one common exponent and every output
    ciphertext is re-randomized, so two renders of the same request yield
    distinct ciphertext grids that decrypt identically.
    """
    if pk is None:
        pk = vol.public_key()
    _validate_request(req, vol.encoding_dim)
    rays = generate_rays(req.camera)
    coeffs = _node_coefficients(req, vol.encoding_dim, vol.base)
    width, height = req.camera.resolution
    pixels = width * height
    channels = 3 if req.mode == "color_tf" else 1

    token = uuid.uuid4().hex
    _WORK_CTX[token] = {"vol": vol, "req": req, "pk": pk, "rays": rays, "coeffs": coeffs}
    tasks = [(token, start, stop) for start, stop in _spans(pixels, workers)]
    try:
        if len(tasks) == 1 or workers <= 1:
            chunk_results = [_render_chunk(task) for task in tasks]
        else:
            chunk_results = _render_parallel(tasks, workers)
    finally:
        del _WORK_CTX[token]

    per_pixel: list = [None] * pixels
    counts = [0] * pixels
    active: OpCounter | None = getattr(_ACTIVE, "counter", None)
    for start, results, opcounts in chunk_results:
        if active is not None:
            active.merge(opcounts)
        for offset, (channel_values, count) in enumerate(results):
            per_pixel[start + offset] = channel_values
            counts[start + offset] = count

    exponents = []
    grids = []
    for ch in range(channels):
        column = [
            EncFloat(Ciphertext(per_pixel[i][ch][0]), per_pixel[i][ch][1], vol.base)
            for i in range(pixels)
        ]
        mantissas, common = equalize_exponents(column, pk)
        grids.append(tuple(obfuscate(m, pk, rng) for m in mantissas))
        exponents.append(common)

    return EncImage(
        width=width,
        height=height,
        channels=channels,
        base=vol.base,
        gamma=req.gamma,
        modulus_bits=vol.modulus_bits,
        key_fingerprint=vol.key_fingerprint,
        exponents=tuple(exponents),
        mantissas=tuple(grids),
        sample_counts=tuple(counts),
    )


def _spans(pixels: int, workers: int) -> list[tuple[int, int]]:
    chunks = max(1, min(workers, pixels))
    size = (pixels + chunks - 1) // chunks
    return [(start, min(start + size, pixels)) for start in range(0, pixels, size)]


def _render_parallel(tasks, workers: int):
    try:
        mp_ctx = multiprocessing.get_context("fork")
    except ValueError:
        # no fork on this platform; stay in-process
        return [_render_chunk(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers, mp_context=mp_ctx) as pool:
        return list(pool.map(_render_chunk, tasks))


# ---------------------------------------------------------------------------
# plaintext twin: exact fixed-point mirror of the encrypted pipeline


def _p_add(a: tuple[int, int], b: tuple[int, int], base: int) -> tuple[int, int]:
    ma, ea = a
    mb, eb = b
    if ea > eb:
        ma *= base ** (ea - eb)
        ea = eb
    elif eb > ea:
        mb *= base ** (eb - ea)
    return ma + mb, ea


def _p_mul(a: tuple[int, int], k: PlainFloat) -> tuple[int, int]:
    return a[0] * k.mantissa, a[1] + k.exponent


def _p_div(a: tuple[int, int], n: int, gamma: int, base: int) -> tuple[int, int]:
    return _p_mul(a, PlainFloat(round_half_away(Fraction(base**gamma, n)), -gamma))


def _plain_voxel_table(vol: Volume, encoding_dim: int, gamma: int, base: int) -> list[list[int]]:
    """Fixed-point mantissas (exponent -gamma) per voxel component, using the
    same per-value quantization as volume encryption."""
    per_value = quantized_voxel_mantissas(vol, encoding_dim, gamma, base)
    return [per_value[int(raw)] for raw in vol.voxels]


def render_plaintext(
    vol: Volume,
    req: RenderRequest,
    encoding_dim: int = 1,
    base: int = 10,
) -> list[list[Fraction]]:
    """Reference renderer over plaintext values.

    Runs the identical pipeline with exact integer fixed-point arithmetic:
    same voxel quantization, same weight quantization, same reciprocal
    rounding. Returns one row-major grid of exact rationals per channel.
    """
    _validate_request(req, encoding_dim)
    rays = generate_rays(req.camera)
    gamma = req.gamma
    coeffs = _node_coefficients(req, encoding_dim, base)
    table = _plain_voxel_table(vol, encoding_dim, gamma, base)
    channels = 3 if req.mode == "color_tf" else 1
    out: list[list[Fraction]] = [[] for _ in range(channels)]
    for ray in rays:
        plan = _pixel_plan(ray, vol.dims, req)
        if not plan:
            for ch in range(channels):
                out[ch].append(Fraction(0))
            continue
        sample_vectors = []
        for terms in plan:
            components = []
            for comp_index in range(encoding_dim):
                acc: tuple[int, int] | None = None
                for flat, weight in terms:
                    voxel = (table[flat][comp_index], -gamma)
                    if weight is None:
                        term = voxel
                    else:
                        term = _p_mul(voxel, _quantize_weight(weight, gamma, base))
                    acc = term if acc is None else _p_add(acc, term, base)
                components.append(acc)
            sample_vectors.append(components)
        count = len(sample_vectors)
        if req.mode in ("xray_nn", "xray_trilinear"):
            acc = sample_vectors[0][0]
            for vec in sample_vectors[1:]:
                acc = _p_add(acc, vec[0], base)
            values = [_p_div(acc, count, gamma, base)]
        elif req.mode == "emphasize":
            acc = None
            for vec in sample_vectors:
                dot = None
                for comp, coeff in zip(vec, coeffs):
                    term = _p_mul(comp, coeff)
                    dot = term if dot is None else _p_add(dot, term, base)
                acc = dot if acc is None else _p_add(acc, dot, base)
            values = [_p_div(acc, count, gamma, base)]
        else:
            sums: list[tuple[int, int] | None] = [None, None, None]
            for vec in sample_vectors:
                for density_vec, color in coeffs:
                    dot = None
                    for comp, coeff in zip(vec, density_vec):
                        term = _p_mul(comp, coeff)
                        dot = term if dot is None else _p_add(dot, term, base)
                    for ch in range(3):
                        term = _p_mul(dot, color[ch])
                        sums[ch] = term if sums[ch] is None else _p_add(sums[ch], term, base)
            values = [_p_div(s, count * len(coeffs), gamma, base) for s in sums]
        for ch in range(channels):
            m, e = values[ch]
            out[ch].append(Fraction(m) * Fraction(base) ** e)
    return out
