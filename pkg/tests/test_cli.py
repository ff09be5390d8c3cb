"""Command-line interface: exit codes, flag handling, presets, outputs."""

import subprocess
import sys

import numpy as np
import pytest

from qrandcert import cli, sdp
from qrandcert.cli import (
    ConfigError,
    _grid_points,
    _parse_grid_string,
    _resolve_config,
    main,
)
from qrandcert.sweep import CSV_HEADER, FUNCTIONAL_CSV_HEADER


class TestGridParsing:
    def test_standard_grid_hits_both_ends(self):
        grid = _parse_grid_string("0:0.05:1")
        assert len(grid) == 21
        assert grid[0] == 0.0 and grid[-1] == 1.0

    def test_single_point(self):
        assert _parse_grid_string("1:1:1") == [1.0]

    def test_end_not_divisible_stays_inside(self):
        assert _parse_grid_string("0:0.3:1") == [0.0, 0.3, 0.6, 0.9]

    def test_no_accumulated_float_noise(self):
        grid = _grid_points(0.0, 0.1, 0.5)
        assert grid == [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]

    def test_malformed_strings_rejected(self):
        for bad in ("0:1", "a:b:c", "0:0:1", "1:0.1:0"):
            with pytest.raises(ConfigError):
                _parse_grid_string(bad)


class TestPresets:
    def test_all_presets_resolve(self):
        for name in ("fig2", "fig3", "sic", "trine"):
            path = _resolve_config(name)
            assert path.endswith(f"{name}.cfg")

    def test_suffix_accepted(self):
        assert _resolve_config("sic.cfg").endswith("sic.cfg")

    def test_missing_config_is_config_error(self):
        with pytest.raises(ConfigError, match="not found"):
            _resolve_config("nonexistent.cfg")


class TestSweepCommand:
    def test_small_sweep_writes_csv(self, tmp_path, capsys):
        out = tmp_path / "rows.csv"
        rc = main(["sweep", "--grid", "0.3:0.3:0.9", "--out", str(out),
                   "--jobs", "1"])
        assert rc == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == CSV_HEADER
        assert len(lines) == 4

    def test_stdout_when_no_out_flag(self, capsys):
        rc = main(["sweep", "--grid", "0.2:1:0.2", "--jobs", "1"])
        captured = capsys.readouterr()
        assert rc == 0
        assert captured.out.startswith(CSV_HEADER)

    def test_bad_grid_is_config_error(self, capsys):
        assert main(["sweep", "--grid", "nope"]) == 3

    def test_missing_config_file_is_config_error(self, capsys):
        assert main(["sweep", "--config", "no/such/file.cfg"]) == 3

    def test_unknown_config_key_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("mode: full_statistics\nspeed: ludicrous\n")
        assert main(["sweep", "--config", str(cfg)]) == 3

    def test_functional_mode_rejected_by_sweep(self, tmp_path, capsys):
        cfg = tmp_path / "f.cfg"
        cfg.write_text("mode: CHSH\n")
        assert main(["sweep", "--config", str(cfg)]) == 3

    def test_config_file_drives_run(self, tmp_path, capsys):
        out = tmp_path / "cfg.csv"
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "mode: full_statistics\n"
            "grid: [0.4]\n"
            "levels: [tomographic]\n"
            f"out: {out}\n"
        )
        assert main(["sweep", "--config", str(cfg)]) == 0
        fields = out.read_text().strip().split("\n")[1].split(",")
        assert fields[0] == "0.4" and fields[1] != ""
        assert fields[5] == ""

    def test_svg_emitted(self, tmp_path, capsys):
        out = tmp_path / "rows.csv"
        svg = tmp_path / "rows.svg"
        rc = main(["sweep", "--grid", "0.2:0.2:0.4", "--out", str(out),
                   "--svg", str(svg), "--jobs", "1"])
        assert rc == 0
        head = svg.read_text()[:200]
        assert "<?xml" in head and "svg" in head


class TestFunctionalCommand:
    def test_chsh_stdout(self, capsys):
        rc = main(["functional", "--grid", "1:1:1", "--jobs", "1"])
        captured = capsys.readouterr()
        assert rc == 0
        lines = captured.out.strip().split("\n")
        assert lines[0] == FUNCTIONAL_CSV_HEADER
        value = float(lines[1].split(",")[1])
        assert value == pytest.approx(2 * np.sqrt(2), abs=1e-9)

    def test_chsh3_via_config(self, tmp_path, capsys):
        out = tmp_path / "f3.csv"
        cfg = tmp_path / "f3.cfg"
        cfg.write_text(f"mode: CHSH3\ngrid: [1.0]\ntarget: [2, 3]\nout: {out}\n")
        assert main(["functional", "--config", str(cfg)]) == 0
        row = out.read_text().strip().split("\n")[1].split(",")
        assert float(row[1]) == pytest.approx(2 * np.sqrt(2) + 1, abs=1e-9)
        assert float(row[3]) == pytest.approx(2.0, abs=0.01)

    def test_statistics_mode_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "s.cfg"
        cfg.write_text("mode: full_statistics\n")
        assert main(["functional", "--config", str(cfg)]) == 3


class TestWhiteNoiseCommand:
    def test_two_settings_value(self, capsys):
        rc = main(["white-noise", "2", "--restarts", "8"])
        captured = capsys.readouterr()
        assert rc == 0
        assert "0.707106781" in captured.out

    def test_out_of_range_settings(self, capsys):
        assert main(["white-noise", "1"]) == 3


class TestPovmCommand:
    def test_sic_preset(self, capsys):
        rc = main(["povm", "sic"])
        captured = capsys.readouterr()
        assert rc == 0
        assert "1.000000000 bits" in captured.out
        assert "rank sum             : 4" in captured.out

    def test_trine_preset_with_verification(self, capsys):
        rc = main(["povm", "trine", "--verify"])
        captured = capsys.readouterr()
        assert rc == 0
        assert "0.584962501 bits" in captured.out
        assert "bound respected      : True" in captured.out

    def test_projective_bloch_config_gives_zero_bits(self, tmp_path, capsys):
        cfg = tmp_path / "proj.cfg"
        cfg.write_text(
            "kind: povm\nd_s: 2\nbloch:\n"
            "  - {direction: [0, 0, 1], weight: 1.0}\n"
            "  - {direction: [0, 0, -1], weight: 1.0}\n"
        )
        rc = main(["povm", str(cfg)])
        captured = capsys.readouterr()
        assert rc == 0
        assert "0.000000000 bits" in captured.out
        assert "hidden dimension     : 0" in captured.out

    def test_explicit_effect_matrices(self, tmp_path, capsys):
        cfg = tmp_path / "mats.cfg"
        cfg.write_text(
            "kind: povm\nd_s: 2\neffects:\n"
            "  - [[0.5, [0, -0.5]], [[0, 0.5], 0.5]]\n"
            "  - [[0.5, [0, 0.5]], [[0, -0.5], 0.5]]\n"
        )
        rc = main(["povm", str(cfg)])
        captured = capsys.readouterr()
        assert rc == 0
        assert "effect ranks         : [1, 1]" in captured.out

    def test_ambiguous_form_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "ambig.cfg"
        cfg.write_text(
            "kind: povm\nbuiltin: sic\nbloch:\n"
            "  - {direction: [0, 0, 1], weight: 1.0}\n"
        )
        assert main(["povm", str(cfg)]) == 3

    def test_unknown_builtin_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "b.cfg"
        cfg.write_text("kind: povm\nbuiltin: mercedes\n")
        assert main(["povm", str(cfg)]) == 3


class TestSolveCommand:
    def _write_problem(self, path):
        rng = np.random.default_rng(3)
        raw = rng.standard_normal((4, 4))
        objective = (raw + raw.T) / 2
        problem = sdp.BlockSDP([4], [objective], [({0: np.eye(4)}, 1.0)])
        sdp.write_sdpa(problem, path)
        return float(np.linalg.eigvalsh(objective)[-1])

    def test_solves_and_matches_eigenvalue(self, tmp_path, capsys):
        path = tmp_path / "prob.dat-s"
        top = self._write_problem(str(path))
        rc = main(["solve", str(path)])
        captured = capsys.readouterr()
        assert rc == 0
        assert "optimal" in captured.out
        primal = float(captured.out.split("primal value:")[1].split()[0])
        assert primal == pytest.approx(top, abs=1e-6)

    def test_malformed_file_is_config_error(self, tmp_path, capsys):
        path = tmp_path / "junk.dat-s"
        path.write_text("this is not sdpa\n")
        assert main(["solve", str(path)]) == 3

    def test_missing_file_is_config_error(self, capsys):
        assert main(["solve", "no/such/file.dat-s"]) == 3


class TestEntryPoint:
    def test_console_script_help(self):
        result = subprocess.run(
            [sys.executable, "-m", "qrandcert.cli", "--help"],
            capture_output=True, text=True)
        assert result.returncode == 0
        for name in ("sweep", "functional", "white-noise", "povm", "solve"):
            assert name in result.stdout

    def test_bad_subcommand_exits_three(self):
        result = subprocess.run(
            [sys.executable, "-m", "qrandcert.cli", "frobnicate"],
            capture_output=True, text=True)
        assert result.returncode == 3
