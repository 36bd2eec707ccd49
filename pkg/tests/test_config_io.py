import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wmcg3d.bankio import (
    MAGIC,
    central_slices,
    decode_bank,
    decode_pgm,
    dump_slices,
    encode_bank,
    read_bank,
    write_bank,
)
from wmcg3d.basis import BasisIndex, KernelGrid, SphericalBessel
from wmcg3d.config import RunConfig, dump_config, load_config, parse_config
from wmcg3d.conv import KernelBank, build_kernel_bank
from wmcg3d.errors import ConfigError, InvalidArgument
from wmcg3d.sampling import AugmentationConfig, build_layer_plan


class TestConfig:
    def test_empty_is_default(self):
        assert parse_config("") == RunConfig()
        assert load_config(None) == RunConfig()

    def test_default_matches_augmentation_defaults(self):
        aug = RunConfig().augmentation_config()
        assert aug == AugmentationConfig()
        assert RunConfig().kernel_grid() == KernelGrid(5)
        assert len(RunConfig().basis_indices()) == 27

    def test_pi_angles(self):
        cfg = parse_config("augmentation:\n  shear_angle_range: ['-0.25pi', 0.25pi]\n")
        assert cfg.augmentation.shear_angle_range == (-0.25 * math.pi, 0.25 * math.pi)

    def test_round_trip(self):
        text = """
seed: 12
augmentation:
  shear_angle_range: [-0.3, 0.2]
  isotropic_scaling: false
grid:
  kernel_size: 7
basis:
  count: 16
layer:
  c_out: 2
  padding: circular
equiv:
  family: rotation
"""
        cfg = parse_config(text)
        assert parse_config(dump_config(cfg)) == cfg
        assert cfg.augmentation_config().seed == 12

    @pytest.mark.parametrize(
        "text,key",
        [
            ("colour: red", "colour"),
            ("augmentation:\n  shear: 1", "augmentation.shear"),
            ("grid:\n  kernel_size: 4", "grid.kernel_size"),
            ("grid:\n  kernel_size: five", "grid.kernel_size"),
            ("grid:\n  radius: -1.0", "grid.radius"),
            ("basis:\n  count: 17", "basis.count"),
            ("basis:\n  profile: wavelet", "basis.profile"),
            ("augmentation:\n  scale_factor_range: [2, 1]", "augmentation.scale_factor_range"),
            ("augmentation:\n  shear_angle_range: [-0.6pi, 0.1]", "augmentation.shear_angle_range"),
            ("augmentation:\n  shear_angle_range: [a, b]", "augmentation.shear_angle_range"),
            ("augmentation:\n  rotation_enabled: 3", "augmentation.rotation_enabled"),
            ("layer:\n  c_out: 0", "layer.c_out"),
            ("layer:\n  padding: reflect", "layer.padding"),
            ("equiv:\n  family: spin", "equiv.family"),
            ("bench:\n  repeats: 2", "bench.repeats"),
            ("seed: -3", "seed"),
        ],
    )
    def test_rejects_naming_key(self, text, key):
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        assert info.value.key.split(" ")[0] == key

    def test_line_number(self):
        with pytest.raises(ConfigError) as info:
            parse_config("seed: 1\ngrid:\n  kernel_size: 5\n  bogus: 2\n")
        assert info.value.key == "grid.bogus (line 4)"

    def test_syntax_error(self):
        with pytest.raises(ConfigError):
            parse_config("grid: [unclosed")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_config(tmp_path / "nope.yaml")


bank_values = st.integers(1, 3).flatmap(
    lambda co: st.integers(1, 3).flatmap(
        lambda ci: st.sampled_from([1, 3, 5]).flatmap(
            lambda k: st.lists(
                st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=co * ci * k ** 3,
                max_size=co * ci * k ** 3,
            ).map(lambda v: np.array(v).reshape(co, ci, k, k, k))
        )
    )
)


class TestBankFile:
    @settings(max_examples=40, deadline=None)
    @given(bank_values, st.booleans(), st.booleans())
    def test_round_trip_bitwise(self, values, normalized, haar):
        bank = KernelBank(values, normalized, haar)
        back = decode_bank(encode_bank(bank))
        assert back.values.tobytes() == bank.values.tobytes()
        assert (back.normalized, back.haar_applied) == (normalized, haar)

    def test_header_layout(self):
        data = encode_bank(KernelBank(np.zeros((2, 3, 5, 5, 5)), True, False))
        assert data[:4] == MAGIC
        assert int.from_bytes(data[4:6], "little") == 1
        assert [int.from_bytes(data[i:i + 4], "little") for i in (6, 10, 14, 18)] == [2, 3, 5, 1]
        assert len(data) == 22 + 2 * 3 * 125 * 8

    def test_payload_order_and_endianness(self):
        v = np.arange(2 * 1 * 27, dtype=np.float64).reshape(2, 1, 3, 3, 3)
        data = encode_bank(KernelBank(v))
        payload = np.frombuffer(data[22:], dtype="<f8")
        np.testing.assert_array_equal(payload, np.arange(54))

    @pytest.mark.parametrize(
        "mutate",
        [
            lambda d: b"XMCG" + d[4:],
            lambda d: d[:4] + (2).to_bytes(2, "little") + d[6:],
            lambda d: d[:-8],
            lambda d: d + b"\0" * 8,
            lambda d: d[:18] + (4).to_bytes(4, "little") + d[22:],
            lambda d: d[:10],
        ],
        ids=["magic", "version", "short", "long", "flags", "truncated-header"],
    )
    def test_rejects_corrupt(self, mutate):
        data = encode_bank(KernelBank(np.ones((1, 1, 3, 3, 3))))
        with pytest.raises(InvalidArgument):
            decode_bank(mutate(data))

    def test_file_round_trip(self, tmp_path):
        bank = KernelBank(np.random.default_rng(0).standard_normal((2, 2, 3, 3, 3)))
        write_bank(tmp_path / "b.wmcg", bank)
        assert read_bank(tmp_path / "b.wmcg").values.tobytes() == bank.values.tobytes()


class TestSlices:
    def test_central_slice_planes(self):
        K = np.arange(27.0).reshape(3, 3, 3)
        s = central_slices(K)
        np.testing.assert_array_equal(s["x"], K[:, :, 1])
        np.testing.assert_array_equal(s["y"], K[:, 1, :])
        np.testing.assert_array_equal(s["z"], K[1, :, :])

    def test_symmetric_kernel_identical_images(self, tmp_path):
        plan = build_layer_plan(AugmentationConfig.identity(), 1, 1, 7)
        bank = build_kernel_bank(np.ones((1, 1, 1)), [BasisIndex(0, 0, 1)], SphericalBessel(), KernelGrid(7), plan)
        dump_slices(bank, 0, 0, tmp_path / "k")
        imgs = [(tmp_path / f"k_perp{a}.pgm").read_bytes() for a in "xyz"]
        assert imgs[0] == imgs[1] == imgs[2]
        pix = decode_pgm(imgs[0])
        assert pix.shape == (7, 7) and pix.max() == 255

    def test_csv_round_trip(self, tmp_path):
        bank = KernelBank(np.random.default_rng(1).standard_normal((2, 2, 5, 5, 5)))
        dump_slices(bank, 1, 0, tmp_path / "k")
        rows = (tmp_path / "k.csv").read_text().strip().split("\n")[1:]
        got = np.empty((5, 5, 5))
        for r in rows:
            z, y, x, v = r.split(",")
            got[int(z), int(y), int(x)] = float(v)
        assert got.tobytes() == bank.values[1, 0].tobytes()

    def test_scale_sidecar(self, tmp_path):
        bank = KernelBank(np.random.default_rng(2).standard_normal((1, 1, 5, 5, 5)))
        dump_slices(bank, 0, 0, tmp_path / "k")
        lo, hi = [float(line.split()[1]) for line in (tmp_path / "k_scale.txt").read_text().splitlines()]
        s = central_slices(bank.values[0, 0])
        assert lo == min(v.min() for v in s.values()) and hi == max(v.max() for v in s.values())

    def test_out_of_range(self, tmp_path):
        with pytest.raises(InvalidArgument):
            dump_slices(KernelBank(np.ones((1, 1, 3, 3, 3))), 1, 0, tmp_path / "k")
