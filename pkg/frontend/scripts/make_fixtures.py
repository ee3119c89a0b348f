"""Regenerate the viewer parity fixtures.

Produces a 256-bit key pair, one 64x64 single-channel encrypted frame, one
16x16 three-channel frame, and the 8-bit reference images the trusted
command-line client decrypts from them. Run from the repository root:

    python3 frontend/scripts/make_fixtures.py
"""

import json
import random
from pathlib import Path

from ciphercast.client import decrypt_enc_image, tone_map
from ciphercast.encimage import serialize_enc_image
from ciphercast.paillier import generate_keys, save_public_key, save_secure_key
from ciphercast.render import Camera, RenderRequest, TransferNode, render
from ciphercast.volume import encrypt_volume, make_synthetic_volume

FIXTURES = Path(__file__).resolve().parent.parent / "test" / "fixtures"


def main() -> None:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    rng = random.Random(0xF1D0)
    sk, pk = generate_keys(256, rng)
    save_public_key(pk, FIXTURES / "demo.pk")
    save_secure_key(sk, FIXTURES / "demo.sk")

    vol = make_synthetic_volume(16)
    center = 7.5
    gray_camera = Camera(
        eye=(center, center, center + 2.2 * 16),
        look_at=(center, center, center),
        vertical_fov=45.0,
        resolution=(64, 64),
    )

    scalar = encrypt_volume(vol, pk, gamma=6, rng=rng)
    gray_req = RenderRequest(camera=gray_camera, mode="xray_trilinear", gamma=6)
    gray = render(scalar, gray_req, rng=rng)
    (FIXTURES / "frame_gray.eimg").write_bytes(serialize_enc_image(gray))

    encoded = encrypt_volume(vol, pk, encoding_dim=4, gamma=6, rng=rng)
    color_req = RenderRequest(
        camera=Camera(
            eye=(center, center, center + 2.2 * 16),
            look_at=(center, center, center),
            vertical_fov=45.0,
            resolution=(16, 16),
        ),
        mode="color_tf",
        tf_nodes=(TransferNode(0.45, (0.0, 0.0, 1.0)), TransferNode(1.0, (1.0, 0.0, 0.0))),
        gamma=6,
    )
    color = render(encoded, color_req, rng=rng)
    (FIXTURES / "frame_color.eimg").write_bytes(serialize_enc_image(color))

    expected = {}
    for name, image in (("gray", gray), ("color", color)):
        channels, warnings = decrypt_enc_image(image, sk, pk)
        assert warnings == 0
        expected[name] = {
            "width": image.width,
            "height": image.height,
            "channels": [tone_map(grid).hex() for grid in channels],
        }
    (FIXTURES / "expected.json").write_text(json.dumps(expected, indent=1))
    print(f"wrote fixtures to {FIXTURES}")


if __name__ == "__main__":
    main()
