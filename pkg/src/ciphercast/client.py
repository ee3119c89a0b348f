"""Trusted client: key generation, volume encryption, render requests,
image decryption, and export.

The client is the only component that ever holds a secure key. Decrypted
pixel values in [0, 1] are tone-mapped linearly to 8 bits and written as
PGM (one channel), PPM (three channels), or PNG.
"""

from __future__ import annotations

import argparse
import multiprocessing
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import httpx

from . import bench as bench_mod
from .encfloat import EncFloat, OverflowDetectedError, decrypt_float
from .encimage import EncImage, deserialize_enc_image
from .paillier import (
    PublicKey,
    SecureKey,
    generate_keys,
    load_public_key,
    load_secure_key,
    save_public_key,
    save_secure_key,
)
from .render import Camera, MODES, RenderRequest, TransferNode
from .volume import (
    Volume,
    encrypt_volume,
    load_volume,
    make_synthetic_volume,
    save_volume,
    serialize_enc_volume,
)


def _decrypt_pixels(
    task: tuple[list, int, int, SecureKey, PublicKey],
) -> tuple[list[Fraction], int]:
    ciphers, exponent, base, sk, pk = task
    from .paillier import CiphertextError, decrypt

    warnings = 0
    grid: list[Fraction] = []
    for cipher in ciphers:
        ef = EncFloat(cipher, exponent, base)
        try:
            grid.append(decrypt_float(ef, sk, pk))
        except OverflowDetectedError:
            warnings += 1
            residue = decrypt(cipher, sk, pk)
            grid.append(Fraction(residue % 256, 255))
        except CiphertextError:
            warnings += 1
            grid.append(Fraction(cipher.value % 256, 255))
    return grid, warnings


def decrypt_enc_image(
    img: EncImage, sk: SecureKey, pk: PublicKey, workers: int | None = None
) -> tuple[list[list[Fraction]], int]:
    """Decrypt every pixel; returns per-channel value grids plus the number
    of pixels whose mantissa fell into the overflow dead zone.

    Pixels are independent, so large images fan out across forked workers
    (pass workers=1 to force the serial path). Unreadable pixels decode to
    a noise value so the image stays viewable: dead-zone residues
    (tampering, or a wrong key) map their residue onto 8 bits, and
    ciphertexts that are invalid under this key entirely (a wrong key with
    a smaller modulus) map their raw value instead.
    """
    pixels = img.width * img.height
    if workers is None:
        workers = min(4, os.cpu_count() or 1) if pixels >= 4096 else 1
    tasks = []
    for ch in range(img.channels):
        grid = list(img.mantissas[ch])
        chunk = max(1, (pixels + workers - 1) // workers)
        for start in range(0, pixels, chunk):
            tasks.append((grid[start : start + chunk], img.exponents[ch], img.base, sk, pk))
    if workers > 1 and len(tasks) > 1:
        try:
            ctx = multiprocessing.get_context("fork")
            with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
                results = list(pool.map(_decrypt_pixels, tasks))
        except ValueError:
            results = [_decrypt_pixels(t) for t in tasks]
    else:
        results = [_decrypt_pixels(t) for t in tasks]

    warnings = 0
    channels: list[list[Fraction]] = []
    index = 0
    for _ in range(img.channels):
        grid = []
        while len(grid) < pixels:
            part, w = results[index]
            grid.extend(part)
            warnings += w
            index += 1
        channels.append(grid)
    return channels, warnings


def tone_map(values: list[Fraction]) -> bytes:
    """Linear map of [0, 1] to [0, 255] with clamping."""
    out = bytearray(len(values))
    for i, v in enumerate(values):
        level = int(v * 255 + Fraction(1, 2))
        out[i] = min(max(level, 0), 255)
    return bytes(out)


def write_image(path: str | Path, width: int, height: int, channels: list[bytes]) -> None:
    path = Path(path)
    if path.suffix.lower() == ".png":
        _write_png(path, width, height, channels)
    elif len(channels) == 1:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{width} {height}\n255\n".encode())
            fh.write(channels[0])
    else:
        with open(path, "wb") as fh:
            fh.write(f"P6\n{width} {height}\n255\n".encode())
            interleaved = bytearray()
            for i in range(width * height):
                for ch in channels:
                    interleaved.append(ch[i])
            fh.write(bytes(interleaved))


def _write_png(path: Path, width: int, height: int, channels: list[bytes]) -> None:
    try:
        from PIL import Image
    except ImportError as exc:  # pragma: no cover
        raise RuntimeError("PNG export needs Pillow; install ciphercast[png]") from exc
    if len(channels) == 1:
        img = Image.frombytes("L", (width, height), channels[0])
    else:
        interleaved = bytearray()
        for i in range(width * height):
            for ch in channels:
                interleaved.append(ch[i])
        img = Image.frombytes("RGB", (width, height), bytes(interleaved))
    img.save(path)


def _decrypt_and_write(img: EncImage, sk: SecureKey, out: str | Path) -> int:
    pk = sk.public_key()
    channels, warnings = decrypt_enc_image(img, sk, pk)
    if warnings:
        print(f"warning: {warnings} pixel value(s) hit the overflow dead zone", file=sys.stderr)
    write_image(out, img.width, img.height, [tone_map(grid) for grid in channels])
    return warnings


# ---------------------------------------------------------------------------
# subcommands


def cmd_keygen(args) -> int:
    sk, pk = generate_keys(args.bits, _rng(args))
    save_secure_key(sk, args.sk)
    save_public_key(pk, args.pk)
    print(f"wrote {args.sk} and {args.pk} ({args.bits}-bit modulus)")
    return 0


def cmd_phantom(args) -> int:
    vol = make_synthetic_volume(args.size)
    save_volume(vol, args.out)
    print(f"wrote {args.out}: {args.size}^3 phantom")
    return 0


def cmd_encrypt(args) -> int:
    pk = load_public_key(args.pk)
    vol = load_volume(args.infile)
    ev = encrypt_volume(vol, pk, encoding_dim=args.dim, gamma=args.gamma, rng=_rng(args))
    data = serialize_enc_volume(ev)
    Path(args.out).write_bytes(data)
    print(f"wrote {args.out}: {len(data)} bytes, dim={args.dim}")
    return 0


def cmd_upload(args) -> int:
    data = Path(args.infile).read_bytes()
    response = httpx.put(f"{args.server}/volumes", content=data, timeout=args.timeout)
    response.raise_for_status()
    vid = response.json()["id"]
    print(vid)
    return 0


def _camera_from_args(args) -> Camera:
    return Camera(
        eye=tuple(args.eye),
        look_at=tuple(args.look_at),
        up=tuple(args.up),
        vertical_fov=args.fov,
        resolution=(args.width, args.height),
    )


def _request_doc(args) -> dict:
    doc = {
        "camera": {
            "eye": list(args.eye),
            "look_at": list(args.look_at),
            "up": list(args.up),
            "fov": args.fov,
            "resolution": [args.width, args.height],
        },
        "mode": args.mode,
        "step_size": args.step,
        "gamma": args.gamma,
    }
    if args.emphasize_density is not None:
        doc["emphasize_density"] = args.emphasize_density
    if args.tf_node:
        doc["tf_nodes"] = [_parse_node_doc(spec) for spec in args.tf_node]
    return doc


def _parse_node_doc(spec: str) -> dict:
    try:
        density_part, color_part = spec.split(":")
        r, g, b = (float(c) for c in color_part.split(","))
        return {"density": float(density_part), "color": [r, g, b]}
    except ValueError as exc:
        raise SystemExit(f"bad node spec {spec!r}, expected density:r,g,b") from exc


def cmd_render(args) -> int:
    sk = load_secure_key(args.sk)
    response = httpx.post(
        f"{args.server}/volumes/{args.id}/render",
        json=_request_doc(args),
        timeout=args.timeout,
    )
    response.raise_for_status()
    data = response.content
    if args.enc_out:
        Path(args.enc_out).write_bytes(data)
    img = deserialize_enc_image(data)
    _decrypt_and_write(img, sk, args.out)
    print(f"wrote {args.out} ({img.width}x{img.height}, {img.channels} channel(s))")
    return 0


def cmd_decrypt_image(args) -> int:
    data = Path(args.infile).read_bytes()
    img = deserialize_enc_image(data)
    sk = load_secure_key(args.sk)
    _decrypt_and_write(img, sk, args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_bench(args) -> int:
    return bench_mod.run_from_args(args)


def _rng(args) -> random.Random | None:
    return random.Random(args.seed) if args.seed is not None else None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ciphercast")
    parser.add_argument("--seed", type=int, default=None, help="seed the RNG (tests only)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="generate a key pair")
    p.add_argument("--bits", type=int, default=2048)
    p.add_argument("--sk", required=True, help="secure key output path (.sk)")
    p.add_argument("--pk", required=True, help="public key output path (.pk)")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("phantom", help="write a synthetic test volume")
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("encrypt", help="encrypt a raw volume into a .cvol container")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--pk", required=True)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--gamma", type=int, default=6)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encrypt)

    p = sub.add_parser("upload", help="upload a .cvol container to the server")
    p.add_argument("--server", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--timeout", type=float, default=600.0)
    p.set_defaults(func=cmd_upload)

    p = sub.add_parser("render", help="request a render and decrypt the result")
    p.add_argument("--server", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--sk", required=True)
    p.add_argument("--mode", choices=MODES, default="xray_nn")
    p.add_argument("--eye", type=float, nargs=3, required=True)
    p.add_argument("--look-at", type=float, nargs=3, required=True)
    p.add_argument("--up", type=float, nargs=3, default=[0.0, 1.0, 0.0])
    p.add_argument("--fov", type=float, default=45.0)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--step", type=float, default=0.5)
    p.add_argument("--gamma", type=int, default=6)
    p.add_argument("--emphasize-density", type=float, default=None)
    p.add_argument("--tf-node", action="append", default=[], help="density:r,g,b (repeatable)")
    p.add_argument("--out", required=True, help="decrypted image (.pgm/.ppm/.png)")
    p.add_argument("--enc-out", default=None, help="also save the raw encrypted image")
    p.add_argument("--timeout", type=float, default=3600.0)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("decrypt-image", help="decrypt a stored encrypted image")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--sk", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_decrypt_image)

    p = sub.add_parser("bench", help="run the desk-scale benchmark suite")
    p.add_argument("--sizes", default="32", help="comma-separated volume sizes")
    p.add_argument("--bits", default="64,128,256", help="comma-separated key sizes")
    p.add_argument("--modes", default="xray,tf,storage", help="bench groups to run")
    p.add_argument("--image-size", type=int, default=64)
    p.add_argument("--gamma", type=int, default=3)
    p.add_argument("--dims", default="2,4", help="encoding dims for the tf bench")
    p.add_argument("--nodes", default="1,2", help="node counts for the tf bench")
    p.add_argument("--out-format", choices=("csv", "md"), default="md")
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, httpx.HTTPError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
