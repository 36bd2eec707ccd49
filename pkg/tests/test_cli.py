import math

import numpy as np
import pytest

from wmcg3d.bankio import read_bank
from wmcg3d.cli import main


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "cfg.yaml"
    path.write_text(
        "seed: 5\nlayer:\n  c_out: 2\n  c_in: 3\nequiv:\n  n_samples: 2\n  size: 16\n"
        "bench:\n  size: 12\n  repeats: 3\n  tolerance: 0.9\n"
    )
    return path


class TestBasisGen:
    def test_default_bank(self, tmp_path, capsys):
        code, _, _ = run(capsys, "basis", "gen", "--out", tmp_path / "b.wmcg")
        assert code == 0
        bank = read_bank(tmp_path / "b.wmcg")
        assert bank.shape == (4, 4, 5, 5, 5) and bank.normalized and bank.haar_applied
        assert (tmp_path / "b.wmcg.plan.tsv").exists()

    def test_rerun_byte_identical(self, tmp_path, capsys, small_config):
        for name in ("a", "b"):
            run(capsys, "basis", "gen", "--config", small_config, "--out", tmp_path / f"{name}.wmcg")
        assert (tmp_path / "a.wmcg").read_bytes() == (tmp_path / "b.wmcg").read_bytes()
        assert (tmp_path / "a.wmcg.plan.tsv").read_bytes() == (tmp_path / "b.wmcg.plan.tsv").read_bytes()

    def test_seed_flag_changes_bank(self, tmp_path, capsys):
        run(capsys, "basis", "gen", "--seed", 1, "--out", tmp_path / "a.wmcg")
        run(capsys, "basis", "gen", "--seed", 2, "--out", tmp_path / "b.wmcg")
        assert (tmp_path / "a.wmcg").read_bytes() != (tmp_path / "b.wmcg").read_bytes()

    def test_identity_config_identical_kernels(self, tmp_path, capsys):
        cfg = tmp_path / "id.yaml"
        cfg.write_text(
            "augmentation:\n  shear_angle_range: [0, 0]\n  scale_factor_range: [1, 1]\n"
            "  rotation_enabled: false\n  shift_enabled: false\nlayer:\n  c_out: 3\n  c_in: 2\n"
        )
        assert run(capsys, "basis", "gen", "--config", cfg, "--out", tmp_path / "b.wmcg")[0] == 0
        v = read_bank(tmp_path / "b.wmcg").values
        assert np.all(v == v[0, 0])

    def test_weights_file(self, tmp_path, capsys, small_config):
        np.save(tmp_path / "w.npy", np.zeros((2, 3, 27)))
        code, _, _ = run(capsys, "basis", "gen", "--config", small_config, "--weights", tmp_path / "w.npy",
                         "--out", tmp_path / "b.wmcg")
        assert code == 0 and np.all(read_bank(tmp_path / "b.wmcg").values == 0)

    def test_bad_weights_shape(self, tmp_path, capsys):
        np.save(tmp_path / "w.npy", np.zeros((1, 1, 27)))
        code, _, err = run(capsys, "basis", "gen", "--weights", tmp_path / "w.npy", "--out", tmp_path / "b.wmcg")
        assert code == 2 and "shape" in err

    def test_bad_config_names_key(self, tmp_path, capsys):
        cfg = tmp_path / "bad.yaml"
        cfg.write_text("grid:\n  kernel_size: 6\n")
        code, _, err = run(capsys, "basis", "gen", "--config", cfg, "--out", tmp_path / "b.wmcg")
        assert code == 2 and "grid.kernel_size (line 2)" in err

    def test_unwritable(self, tmp_path, capsys):
        code, _, _ = run(capsys, "basis", "gen", "--out", tmp_path / "missing" / "b.wmcg")
        assert code == 2


class TestOtherCommands:
    def test_gram_csv(self, tmp_path, capsys):
        assert run(capsys, "basis", "gram", "--out", tmp_path / "g.csv")[0] == 0
        lines = (tmp_path / "g.csv").read_text().strip().split("\n")
        G = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
        assert G.shape == (27, 27)
        d = np.sqrt(np.diag(G))
        assert np.max(np.abs(G / np.outer(d, d) - np.eye(27))) < 1e-6

    def test_sampled_gram(self, capsys):
        code, out, _ = run(capsys, "basis", "gram", "--mode", "sampled")
        G = np.array([[float(v) for v in line.split(",")] for line in out.strip().split("\n")[1:]])
        np.testing.assert_allclose(np.diag(G), 1.0, atol=1e-12)

    def test_decompose(self, capsys):
        code, out, _ = run(capsys, "decompose", 1, 0.5, 0, 0, 2, 0.3, -0.2, 0, 1.5)
        assert code == 0
        vals = dict(line.split() for line in out.strip().split("\n"))
        assert len(vals) == 12 and float(vals["residual"]) < 1e-12

    def test_decompose_rotation(self, capsys):
        c, s = math.cos(0.7), math.sin(0.7)
        code, out, _ = run(capsys, "decompose", 1, 0, 0, 0, c, -s, 0, s, c)
        vals = dict(line.split() for line in out.strip().split("\n"))
        # rotation angles only resolve signs; the rotation itself is carried by scales and shears
        assert float(vals["theta1"]) in (0.0, math.pi) and float(vals["theta3"]) in (0.0, math.pi)
        assert float(vals["residual"]) < 1e-14

    def test_decompose_reflection(self, capsys):
        code, _, err = run(capsys, "decompose", 1, 0, 0, 0, 1, 0, 0, 0, -1)
        assert code == 2 and "not positive" in err

    def test_decompose_degenerate_pivot(self, capsys):
        code, _, err = run(capsys, "decompose", 0, 0, 1, 0, 1, 0, -1, 0, 0)
        assert code == 1 and "(0,2)" in err

    def test_decompose_usage(self, capsys):
        assert run(capsys, "decompose", 1, 2, 3)[0] == 2

    def test_roots(self, capsys):
        code, out, _ = run(capsys, "roots", "-l", 1, "-n", 3, "-R", 1)
        vals = [line.split()[1] for line in out.strip().split("\n")]
        assert vals == ["3.14159265358979", "6.28318530717959", "9.42477796076938"]

    def test_roots_bad_degree(self, capsys):
        assert run(capsys, "roots", "-l", 12)[0] == 2

    def test_check_pass(self, capsys):
        code, out, _ = run(capsys, "check", "roots")
        assert code == 0 and out.count("PASS") == 2

    def test_check_unknown_suite(self, capsys):
        assert run(capsys, "check", "speed")[0] == 2

    def test_equiv_deterministic(self, tmp_path, capsys, small_config):
        for name in ("a", "b"):
            assert run(capsys, "equiv", "--config", small_config, "--out", tmp_path / f"{name}.jsonl")[0] == 0
        a = (tmp_path / "a.jsonl").read_bytes()
        assert a == (tmp_path / "b.jsonl").read_bytes()
        assert a.count(b"\n") == 3

    def test_bench(self, capsys, small_config):
        code, out, _ = run(capsys, "bench", "--config", small_config)
        keys = [line.split()[0] for line in out.strip().split("\n")]
        assert {"synthesis_median_s", "conv_precomputed_median_s", "conv_plain_median_s", "ratio"} <= set(keys)
        assert code == 0

    def test_bench_rejects_one_repeat(self, capsys):
        assert run(capsys, "bench", "--repeats", 1)[0] == 2

    def test_dump_slices(self, tmp_path, capsys):
        run(capsys, "basis", "gen", "--out", tmp_path / "b.wmcg")
        code, out, _ = run(capsys, "dump-slices", tmp_path / "b.wmcg", "--co", 1, "--ci", 2, "--out", tmp_path / "s")
        assert code == 0 and len(out.strip().split("\n")) == 5

    def test_dump_slices_out_of_range(self, tmp_path, capsys):
        run(capsys, "basis", "gen", "--out", tmp_path / "b.wmcg")
        assert run(capsys, "dump-slices", tmp_path / "b.wmcg", "--co", 9, "--out", tmp_path / "s")[0] == 2

    def test_dump_slices_corrupt_bank(self, tmp_path, capsys):
        (tmp_path / "b.wmcg").write_bytes(b"nonsense")
        assert run(capsys, "dump-slices", tmp_path / "b.wmcg", "--out", tmp_path / "s")[0] == 2

    def test_no_command(self, capsys):
        assert run(capsys)[0] == 2
