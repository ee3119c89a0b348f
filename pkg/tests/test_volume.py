import math
import random
from fractions import Fraction

import numpy as np
import pytest

from ciphercast.encfloat import decrypt_float, round_half_away
from ciphercast.volume import (
    Volume,
    VolumeFormatError,
    deserialize_enc_volume,
    encode_density,
    encrypt_volume,
    expected_payload_len,
    load_volume,
    make_synthetic_volume,
    plain_storage_size,
    save_volume,
    serialize_enc_volume,
    storage_size,
)


class TestEncodeDensity:
    def test_zero_density(self):
        assert encode_density(0, 4) == (1.0, 0.0, 0.0, 0.0)

    def test_full_density(self):
        assert encode_density(1, 4) == (0.0, 0.0, 0.0, 1.0)

    def test_mid_density(self):
        assert encode_density(0.5, 3) == (0.0, 1.0, 0.0)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            encode_density(1.5, 4)
        with pytest.raises(ValueError):
            encode_density(-0.1, 4)

    def test_dim_too_small(self):
        with pytest.raises(ValueError):
            encode_density(0.5, 1)

    @pytest.mark.parametrize("dim", [2, 3, 4, 6])
    def test_unit_norm_and_nonnegative(self, dim):
        for i in range(201):
            v = encode_density(Fraction(i, 200), dim)
            assert abs(sum(c * c for c in v) - 1.0) <= 1e-9
            assert all(c >= 0 for c in v)

    @pytest.mark.parametrize("dim", [3, 4, 6])
    def test_at_most_two_adjacent_nonzero(self, dim):
        for i in range(201):
            v = encode_density(Fraction(i, 200), dim)
            nonzero = [j for j, c in enumerate(v) if c != 0]
            assert 1 <= len(nonzero) <= 2
            if len(nonzero) == 2:
                assert nonzero[1] - nonzero[0] == 1

    @pytest.mark.parametrize("target", [0.2, 0.45, 0.7, 0.85])
    def test_response_peaks_at_encoded_density(self, target):
        dim = 4
        encoded_target = encode_density(target, dim)
        grid = [i / 999 for i in range(1000)]
        responses = [
            sum(a * b for a, b in zip(encode_density(rho, dim), encoded_target)) for rho in grid
        ]
        best = grid[responses.index(max(responses))]
        assert abs(best - target) <= 1.5 / 999

    def test_higher_dim_narrows_response(self):
        target = 0.5

        def fwhm(dim: int) -> float:
            encoded = encode_density(target, dim)
            grid = [i / 999 for i in range(1000)]
            resp = [
                sum(a * b for a, b in zip(encode_density(rho, dim), encoded)) for rho in grid
            ]
            peak = max(resp)
            above = [rho for rho, r in zip(grid, resp) if r >= peak / 2]
            return max(above) - min(above)

        assert fwhm(6) < fwhm(3)


class TestEncryptVolume:
    def test_zero_volume(self, key64, rng):
        sk, pk = key64
        vol = Volume(dims=(2, 2, 2), bit_depth=8, voxels=np.zeros(8, dtype=np.uint16))
        ev = encrypt_volume(vol, pk, gamma=3, rng=rng)
        assert len(ev.payload) == 8
        for ef in ev.payload:
            assert decrypt_float(ef, sk, pk) == 0

    def test_scalar_roundtrip_matches_quantized_plaintext(self, key64, rng):
        sk, pk = key64
        vol = make_synthetic_volume(16)
        ev = encrypt_volume(vol, pk, gamma=3, rng=rng)
        gamma = 3
        for z in (0, 7, 15):
            for y in (0, 8):
                for x in (0, 9, 15):
                    flat = x + 16 * (y + 16 * z)
                    expected = Fraction(
                        round_half_away(vol.normalized(x, y, z) * 10**gamma), 10**gamma
                    )
                    got = decrypt_float(ev.payload[flat], sk, pk)
                    assert got == expected
                    assert abs(got - vol.normalized(x, y, z)) <= Fraction(10) ** -gamma

    def test_vector_mode_payload_and_values(self, key64, rng):
        sk, pk = key64
        vol = Volume(dims=(2, 2, 1), bit_depth=8, voxels=np.array([0, 128, 255, 51], dtype=np.uint16))
        ev = encrypt_volume(vol, pk, encoding_dim=3, gamma=3, rng=rng)
        assert len(ev.payload) == 4 * 3
        for i in range(4):
            x, y = i % 2, i // 2
            expected = encode_density(vol.normalized(x, y, 0), 3)
            got = [float(decrypt_float(ef, sk, pk)) for ef in ev.voxel_components(i)]
            assert got == pytest.approx(expected, abs=1e-3)

    def test_shared_exponent(self, key64, rng):
        _, pk = key64
        vol = make_synthetic_volume(16)
        ev = encrypt_volume(vol, pk, gamma=3, rng=rng)
        assert {ef.exponent for ef in ev.payload} == {-3}

    def test_key_too_small(self, rng):
        from ciphercast.paillier import generate_keys

        _, pk = generate_keys(16, random.Random(5))
        vol = make_synthetic_volume(16)
        with pytest.raises(ValueError):
            encrypt_volume(vol, pk, gamma=6, rng=rng)

    def test_payload_count_formula(self):
        assert expected_payload_len((100, 100, 100), 4) == 4_000_000

    def test_constant_volume_ciphertexts_pairwise_distinct(self, key64, rng):
        _, pk = key64
        vol = Volume(
            dims=(16, 16, 16), bit_depth=8, voxels=np.full(16**3, 200, dtype=np.uint16)
        )
        ev = encrypt_volume(vol, pk, gamma=3, rng=rng)
        seen = {ef.mantissa.value for ef in ev.payload}
        assert len(seen) == 16**3


class TestStorageSize:
    def test_scalar_64bit(self):
        assert storage_size((100, 100, 100), 64, 1) == 16_000_000

    def test_4dim_2048bit(self):
        assert storage_size((100, 100, 100), 2048, 4) == 2_048_000_000

    def test_full_scale(self):
        assert storage_size((512, 512, 512), 2048, 1) == 64 * 2**30

    def test_plain_column(self):
        assert plain_storage_size((100, 100, 100), 1) == 1_000_000
        assert plain_storage_size((100, 100, 100), 4) == 4_000_000

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            storage_size((0, 1, 1), 64, 1)


class TestContainer:
    def test_roundtrip_bit_exact(self, key64, rng):
        _, pk = key64
        vol = make_synthetic_volume(16)
        ev = encrypt_volume(vol, pk, gamma=3, rng=rng)
        blob = serialize_enc_volume(ev)
        again = deserialize_enc_volume(blob)
        assert serialize_enc_volume(again) == blob
        assert again.dims == ev.dims
        assert again.payload == ev.payload

    def test_payload_region_matches_formula(self, key64, rng):
        _, pk = key64
        vol = make_synthetic_volume(16)
        ev = encrypt_volume(vol, pk, gamma=3, rng=rng)
        blob = serialize_enc_volume(ev)
        mantissa_bytes = storage_size((16, 16, 16), 64, 1)
        sidecar = len(ev.payload) * 4
        header = len(blob) - mantissa_bytes - sidecar
        assert mantissa_bytes == 65_536
        assert header > 0  # fixed header plus embedded modulus

    def test_bad_magic(self):
        with pytest.raises(VolumeFormatError):
            deserialize_enc_volume(b"NOPE" + b"\x00" * 64)

    def test_truncated(self, key64, rng):
        _, pk = key64
        vol = Volume(dims=(2, 2, 2), bit_depth=8, voxels=np.zeros(8, dtype=np.uint16))
        blob = serialize_enc_volume(encrypt_volume(vol, pk, gamma=3, rng=rng))
        with pytest.raises(VolumeFormatError):
            deserialize_enc_volume(blob[:-5])


class TestRawVolumeIO:
    def test_roundtrip(self, tmp_path):
        vol = make_synthetic_volume(16)
        path = tmp_path / "phantom.rvol"
        save_volume(vol, path)
        back = load_volume(path)
        assert back.dims == vol.dims
        assert back.bit_depth == vol.bit_depth
        assert np.array_equal(back.voxels, vol.voxels)

    def test_sixteen_bit_voxels(self, tmp_path):
        voxels = np.array([0, 1000, 65535, 42], dtype=np.uint16)
        vol = Volume(dims=(4, 1, 1), bit_depth=16, voxels=voxels)
        path = tmp_path / "wide.rvol"
        save_volume(vol, path)
        assert np.array_equal(load_volume(path).voxels, voxels)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.rvol"
        path.write_bytes(b"JUNKJUNKJUNK")
        with pytest.raises(VolumeFormatError):
            load_volume(path)


class TestPhantom:
    def test_center_is_cube_density(self):
        vol = make_synthetic_volume(32)
        assert vol.voxel(16, 16, 16) == 255

    def test_corner_sphere_center(self):
        size = 32
        vol = make_synthetic_volume(size)
        c = round(size / 6)
        assert vol.voxel(c, c, c) == round(0.75 * 255)

    def test_exactly_four_distinct_values(self):
        vol = make_synthetic_volume(24)
        assert len(np.unique(vol.voxels)) == 4

    def test_shell_surrounds_cube(self):
        size = 32
        vol = make_synthetic_volume(size)
        # just outside the cube along x, still inside the sphere
        assert vol.voxel(16 + size // 8 + 1, 16, 16) == round(0.45 * 255)

    def test_too_small_rejected(self):
        with pytest.raises(ValueError):
            make_synthetic_volume(15)


class TestVolumeValidation:
    def test_count_mismatch(self):
        with pytest.raises(ValueError):
            Volume(dims=(2, 2, 2), bit_depth=8, voxels=np.zeros(7, dtype=np.uint16))

    def test_value_exceeds_depth(self):
        with pytest.raises(ValueError):
            Volume(dims=(1, 1, 1), bit_depth=8, voxels=np.array([256], dtype=np.uint16))
