"""Desk-scale benchmarks.

Produces encrypt/render/decrypt timing tables across key sizes, sampling
modes, encoding dimensions, and transfer-function node counts, plus a
storage-size report. Absolute numbers are hardware-dependent and only meant
for trend reading; the test suite asserts the trends, never the seconds.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from pathlib import Path

from .encfloat import EncFloat, decrypt_float
from .paillier import PublicKey, SecureKey, generate_keys
from .render import Camera, RenderRequest, TransferNode, render, render_plaintext
from .volume import (
    encrypt_volume,
    make_synthetic_volume,
    plain_storage_size,
    serialize_enc_volume,
    storage_size,
)

DEFAULT_BENCH_GAMMA = 3  # small keys cannot hold 6-digit trilinear products


@dataclass
class BenchTable:
    title: str
    row_labels: list[str]
    col_labels: list[str]
    cells: dict[tuple[str, str], float | None]
    meta: dict = field(default_factory=dict)

    def cell(self, row: str, col: str) -> float | None:
        return self.cells.get((row, col))


def _fmt(value: float | None) -> str:
    if value is None:
        return ""
    if value == int(value) and abs(value) >= 1:
        return str(int(value))
    return f"{value:.4f}"


def to_csv(table: BenchTable) -> str:
    lines = ["," + ",".join(table.col_labels)]
    for row in table.row_labels:
        lines.append(row + "," + ",".join(_fmt(table.cell(row, col)) for col in table.col_labels))
    return "\n".join(lines) + "\n"


def to_markdown(table: BenchTable) -> str:
    header = "| " + " | ".join([table.title] + table.col_labels) + " |"
    rule = "|" + "---|" * (len(table.col_labels) + 1)
    lines = [header, rule]
    for row in table.row_labels:
        cells = [_fmt(table.cell(row, col)) for col in table.col_labels]
        lines.append("| " + " | ".join([row] + cells) + " |")
    return "\n".join(lines) + "\n"


def default_camera(size: int, resolution: tuple[int, int]) -> Camera:
    center = (size - 1) / 2.0
    return Camera(
        eye=(center, center, center + 2.2 * size),
        look_at=(center, center, center),
        up=(0.0, 1.0, 0.0),
        vertical_fov=45.0,
        resolution=resolution,
    )


def _timed(fn, repeats: int = 1) -> tuple[float, object]:
    best = None
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        elapsed = time.perf_counter() - start
        best = elapsed if best is None else min(best, elapsed)
    return best, result


def _decrypt_image_timing(image, sk: SecureKey, pk: PublicKey) -> float:
    start = time.perf_counter()
    for ch in range(image.channels):
        exponent = image.exponents[ch]
        for cipher in image.mantissas[ch]:
            decrypt_float(EncFloat(cipher, exponent, image.base), sk, pk)
    return time.perf_counter() - start


def run_xray_bench(
    size: int = 32,
    bits_list: tuple[int, ...] = (64, 128, 256),
    image_size: int = 64,
    gamma: int = DEFAULT_BENCH_GAMMA,
    step_size: float = 0.5,
    rng: random.Random | None = None,
    repeats: int = 1,
    workers: int = 1,
) -> BenchTable:
    """Encrypt/render/decrypt timings for both sampling modes, with and
    without obfuscation, across key sizes."""
    rng = rng or random.Random()
    vol = make_synthetic_volume(size)
    camera = default_camera(size, (image_size, image_size))
    cols = ["plain"] + [f"{bits}bit" for bits in bits_list]
    rows: list[str] = []
    cells: dict[tuple[str, str], float | None] = {}

    for sampling in ("nn", "trilinear"):
        mode = "xray_nn" if sampling == "nn" else "xray_trilinear"
        req = RenderRequest(camera=camera, mode=mode, step_size=step_size, gamma=gamma)
        plain_time, _ = _timed(lambda: render_plaintext(vol, req), repeats)
        for obf in (False, True):
            prefix = f"{sampling}/{'obf' if obf else 'no-obf'}"
            for stage in ("encrypt", "render", "decrypt"):
                rows.append(f"{prefix}/{stage}")
            cells[(f"{prefix}/render", "plain")] = plain_time
            for bits in bits_list:
                sk, pk = generate_keys(bits, rng)
                col = f"{bits}bit"
                enc_time, ev = _timed(
                    lambda: encrypt_volume(vol, pk, gamma=gamma, rng=rng, obfuscate=obf),
                    repeats,
                )
                render_time, image = _timed(
                    lambda: render(ev, req, rng=rng, workers=workers), repeats
                )
                cells[(f"{prefix}/encrypt", col)] = enc_time
                cells[(f"{prefix}/render", col)] = render_time
                cells[(f"{prefix}/decrypt", col)] = _decrypt_image_timing(image, sk, pk)
    table = BenchTable("x-ray", rows, cols, cells)
    table.meta.update(size=size, image_size=image_size, gamma=gamma, workers=workers)
    return table


def run_tf_bench(
    dims_list: tuple[int, ...] = (2, 4),
    node_counts: tuple[int, ...] = (1, 2),
    bits_list: tuple[int, ...] = (128,),
    size: int = 16,
    image_size: int = 32,
    gamma: int = DEFAULT_BENCH_GAMMA,
    rng: random.Random | None = None,
    repeats: int = 1,
    workers: int = 1,
) -> BenchTable:
    """Transfer-function timings nested by encoding dimension and color count."""
    rng = rng or random.Random()
    vol = make_synthetic_volume(size)
    camera = default_camera(size, (image_size, image_size))
    palette = [(1.0, 0.0, 0.0), (0.0, 0.0, 1.0), (0.0, 1.0, 0.0), (1.0, 1.0, 0.0)]
    densities = [1.0, 0.45, 0.75, 0.1]
    cols = ["plain"] + [f"{bits}bit" for bits in bits_list]
    rows: list[str] = []
    cells: dict[tuple[str, str], float | None] = {}

    for dim in dims_list:
        keyed: dict[int, tuple] = {}
        rows.append(f"{dim}dim/encrypt")
        for bits in bits_list:
            sk, pk = generate_keys(bits, rng)
            enc_time, ev = _timed(
                lambda: encrypt_volume(vol, pk, encoding_dim=dim, gamma=gamma, rng=rng),
                repeats,
            )
            keyed[bits] = (sk, pk, ev)
            cells[(f"{dim}dim/encrypt", f"{bits}bit")] = enc_time
        for count in node_counts:
            nodes = tuple(
                TransferNode(density=densities[i], color=palette[i]) for i in range(count)
            )
            req = RenderRequest(camera=camera, mode="color_tf", tf_nodes=nodes, gamma=gamma)
            label = f"{dim}dim/{count}color"
            rows.append(f"{label}/render")
            rows.append(f"{label}/decrypt")
            plain_time, _ = _timed(lambda: render_plaintext(vol, req, encoding_dim=dim), repeats)
            cells[(f"{label}/render", "plain")] = plain_time
            for bits in bits_list:
                sk, pk, ev = keyed[bits]
                render_time, image = _timed(
                    lambda: render(ev, req, rng=rng, workers=workers), repeats
                )
                cells[(f"{label}/render", f"{bits}bit")] = render_time
                cells[(f"{label}/decrypt", f"{bits}bit")] = _decrypt_image_timing(image, sk, pk)
    table = BenchTable("transfer function", rows, cols, cells)
    table.meta.update(size=size, image_size=image_size, gamma=gamma, workers=workers)
    return table


def run_storage_report(
    dims: tuple[int, int, int] = (100, 100, 100),
    bits_list: tuple[int, ...] = (64, 128, 256, 512, 1024, 2048),
    dim_list: tuple[int, ...] = (1, 2, 3, 4),
    verify: bool = True,
    rng: random.Random | None = None,
) -> BenchTable:
    """Storage sizes in decimal megabytes for every encoding/key-size cell.

    With `verify` the smallest cell is cross-checked against the mantissa
    region of an actually serialized container.
    """
    cols = ["plain (8bit)"] + [f"{bits}bit" for bits in bits_list]
    rows = []
    cells: dict[tuple[str, str], float | None] = {}
    for dim in dim_list:
        row = "scalar" if dim == 1 else f"{dim}dim"
        rows.append(row)
        cells[(row, "plain (8bit)")] = plain_storage_size(dims, dim) / 1e6
        for bits in bits_list:
            cells[(row, f"{bits}bit")] = storage_size(dims, bits, dim) / 1e6
    table = BenchTable("storage (MB)", rows, cols, cells)
    table.meta["dims"] = dims
    if verify:
        rng = rng or random.Random(7)
        _, pk = generate_keys(64, rng)
        vol = make_synthetic_volume(16)
        ev = encrypt_volume(vol, pk, gamma=3, rng=rng, obfuscate=False)
        blob = serialize_enc_volume(ev)
        formula = storage_size(vol.dims, 64, 1)
        sidecar = len(ev.payload) * 4
        header = len(blob) - sidecar - formula
        if header <= 0:
            raise AssertionError("serialized mantissa region smaller than the formula predicts")
        table.meta["verify"] = {
            "dims": vol.dims,
            "bits": 64,
            "formula_bytes": formula,
            "file_bytes": len(blob),
            "header_bytes": header,
            "sidecar_bytes": sidecar,
        }
    return table


def run_from_args(args) -> int:
    """Entry point behind the `ciphercast bench` subcommand."""
    sizes = [int(s) for s in str(args.sizes).split(",") if s]
    bits = tuple(int(b) for b in str(args.bits).split(",") if b)
    groups = [g.strip() for g in str(args.modes).split(",") if g.strip()]
    rng = random.Random(args.seed) if args.seed is not None else random.Random()
    tables: list[BenchTable] = []
    for size in sizes:
        if "xray" in groups:
            tables.append(
                run_xray_bench(
                    size=size,
                    bits_list=bits,
                    image_size=args.image_size,
                    gamma=args.gamma,
                    rng=rng,
                    workers=args.workers,
                )
            )
        if "tf" in groups:
            dims_list = tuple(int(d) for d in str(args.dims).split(",") if d)
            node_counts = tuple(int(n) for n in str(args.nodes).split(",") if n)
            tf_bits = tuple(b for b in bits if b >= 128) or (128,)
            tables.append(
                run_tf_bench(
                    dims_list=dims_list,
                    node_counts=node_counts,
                    bits_list=tf_bits,
                    size=min(sizes),
                    image_size=min(args.image_size, 32),
                    gamma=args.gamma,
                    rng=rng,
                    workers=args.workers,
                )
            )
    if "storage" in groups:
        tables.append(run_storage_report(rng=rng))
    renderer = to_csv if args.out_format == "csv" else to_markdown
    text = "\n".join(renderer(t) for t in tables)
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0
