import json

import pytest

from main import build_parser, main


def read_json_output(capsys):
    return json.loads(capsys.readouterr().out)


def test_identify(tmp_path, capsys):
    code = main(["identify", "--experiment", "example1", "--sigma", "0.001", "--out-dir", str(tmp_path)])
    assert code == 0
    result = read_json_output(capsys)
    assert result["s_star"] == pytest.approx(0.5, abs=1e-6)
    assert result["config"]["provider"] == "spectral"
    assert (tmp_path / "trace.jsonl").exists()


def test_state_spectral(tmp_path, capsys):
    code = main(["state", "--s", "0.5", "--experiment", "example1", "--out-dir", str(tmp_path)])
    assert code == 0
    result = read_json_output(capsys)
    # ‖∏ sin(2πx_i)‖ = 1/2，u(0.5) = u_d
    assert result["norm_u"] == pytest.approx(0.5, rel=1e-6)


def test_state_fem_snapshot(tmp_path, capsys):
    snapshot = tmp_path / "state.npz"
    code = main(["state", "--s", "0.5", "--dim", "1", "--mesh", "8x8", "--solver", "direct", "--snapshot",
                 str(snapshot), "--out-dir", str(tmp_path)])
    assert code == 0
    result = read_json_output(capsys)
    assert result["num_cells"] == 64
    assert snapshot.exists()


def test_bad_config_exit_code(tmp_path):
    assert main(["identify", "--sigma", "0.5", "--out-dir", str(tmp_path)]) == 2
    assert main(["convergence", "--experiment", "example4", "--out-dir", str(tmp_path)]) == 2


def test_parser():
    args = build_parser().parse_args(["noise", "--levels", "200,2", "--noise-mode", "scalar", "--seed", "3"])
    assert (args.levels, args.noise_mode, args.seed) == ("200,2", "scalar", 3)
    with pytest.raises(SystemExit):
        build_parser().parse_args(["identify", "--dim", "3"])
