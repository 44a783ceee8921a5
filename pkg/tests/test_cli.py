import subprocess
import sys

import pytest

from drivenoat.cli import build_parser, main
from drivenoat.experiments import PRESETS, read_csv


def test_list_presets(capsys):
    assert main(["list-presets"]) == 0
    out = capsys.readouterr().out
    for name in PRESETS:
        assert name in out


def test_run_writes_outputs(tmp_path, capsys):
    rc = main(["run", "--scenario", "pulsed_sq_d01", "--out", str(tmp_path), "--no-timestamp", "--set", "n_samples=21"])
    assert rc == 0
    data = read_csv(tmp_path / "pulsed_sq_d01.csv")
    assert len(data["t"]) == 21
    assert (tmp_path / "pulsed_sq_d01.json").exists()
    assert "min xi2" in capsys.readouterr().out


def test_run_is_byte_identical(tmp_path):
    args = ["run", "--scenario", "decay_constant_frame", "--no-timestamp", "--set", "n_samples=51"]
    out = str(tmp_path / "run.csv")
    main(args + ["--out", out])
    first = [(tmp_path / n).read_bytes() for n in ("run.csv", "run.json")]
    main(args + ["--out", out])
    assert [(tmp_path / n).read_bytes() for n in ("run.csv", "run.json")] == first


def test_run_with_maps(tmp_path):
    rc = main(["run", "--scenario", "pulsed_ghz_d04", "--out", str(tmp_path), "--maps", "--no-timestamp", "--set", "n_samples=401"])
    assert rc == 0
    assert list(tmp_path.glob("pulsed_ghz_d04_wigner_*.csv"))


def test_config_file_and_nmax(tmp_path):
    cfg = tmp_path / "c.ini"
    cfg.write_text("[run]\nscenario = small\nmodel = dispersive\nN = 4\nt_end = 0.5\nn_samples = 6\n")
    rc = main(["run", "--config", str(cfg), "--nmax", "18", "--out", str(tmp_path), "--no-timestamp"])
    assert rc == 0
    assert '"truncation": 18' in (tmp_path / "small.json").read_text()


def test_sweep(tmp_path, capsys):
    rc = main(
        ["sweep", "--scenario", "decay_pulsed_frame", "--axis", "gamma", "--values", "0,0.01", "--workers", "2",
         "--out", str(tmp_path), "--no-timestamp", "--set", "n_samples=21"]
    )
    assert rc == 0
    table = read_csv(tmp_path / "decay_pulsed_frame_sweep_gamma.csv")
    assert list(table["gamma"]) == [0.0, 0.01]
    assert (tmp_path / "decay_pulsed_frame_gamma=0.01.csv").exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--scenario", "nope"],
        ["run", "--scenario", "const_sq_undriven", "--set", "N=-3"],
        ["run", "--scenario", "const_sq_undriven", "--set", "novalue"],
        ["sweep", "--scenario", "const_sq_undriven", "--axis", "gamma", "--values", "a,b"],
    ],
)
def test_config_errors_exit_1(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)]) == 1


def test_numerical_failure_exits_2(tmp_path):
    argv = ["run", "--scenario", "const_sq_undriven", "--nmax", "2", "--set", "input_value=3", "--out", str(tmp_path)]
    assert main(argv) == 2
    sweep = ["sweep", "--scenario", "const_sq_undriven", "--nmax", "2", "--axis", "input_value", "--values", "0,3",
             "--set", "n_samples=5", "--out", str(tmp_path)]
    assert main(sweep) == 2


def test_argparse_requires_source():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["run"])


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "drivenoat", "list-presets"], capture_output=True, text=True)
    assert proc.returncode == 0 and "const_sq_ideal" in proc.stdout
