"""Command-line interface: flags, config files, formats, exit codes."""

import json
import math
import subprocess
import sys

import pytest

from hybrid_teleport import cli
from hybrid_teleport.cli import (
    CSV_HEADER,
    ConfigError,
    EXIT_CHECK,
    EXIT_CONFIG,
    EXIT_NUMERIC,
    EXIT_OK,
    SweepConfig,
    config_from_sources,
    format_csv,
    format_json,
    main,
    parse_config_file,
    run_sweep,
)
from hybrid_teleport.crossval import CheckResult
from hybrid_teleport.encoding import HybridType

BOTH = (HybridType.TYPE_I, HybridType.TYPE_II)


def small_config(**kw):
    base = dict(types=BOTH, alphas=(1.0,), r_min=0.0, r_max=0.3, r_step=0.3)
    base.update(kw)
    return SweepConfig(**base)


class TestConfigValidation:
    def test_defaults_valid(self):
        cfg = SweepConfig()
        cfg.validate()
        rs = cfg.r_values()
        assert rs[0] == 0.0 and rs[-1] == pytest.approx(0.98)
        assert len(rs) == 50

    def test_r_grid_rounding(self):
        cfg = small_config(r_min=0.1, r_max=0.7, r_step=0.2)
        assert cfg.r_values() == (0.1, 0.3, 0.5, 0.7)

    def test_bad_r_range(self):
        with pytest.raises(ConfigError):
            small_config(r_max=1.0).validate()
        with pytest.raises(ConfigError):
            small_config(r_min=0.5, r_max=0.2).validate()
        with pytest.raises(ConfigError):
            small_config(r_step=0.0).validate()

    def test_bad_alpha(self):
        with pytest.raises(ConfigError):
            small_config(alphas=(0.0,)).validate()

    def test_fock_alpha_guard(self):
        cfg = small_config(engine="first-principles-fock", alphas=(5.0,))
        with pytest.raises(ConfigError, match="alpha <= 2"):
            cfg.validate()
        small_config(engine="first-principles-fock", alphas=(2.0,)).validate()

    def test_unknown_engine(self):
        with pytest.raises(ConfigError):
            small_config(engine="magic").validate()

    def test_bad_format(self):
        with pytest.raises(ConfigError):
            small_config(fmt="yaml").validate()


class TestConfigFile:
    def test_parse_and_precedence(self, tmp_path):
        cfg_file = tmp_path / "sweep.cfg"
        cfg_file.write_text(
            "# comment line\n"
            "type = I\n"
            "alpha = 1, 2\n"
            "r-max = 0.5\n"
            "r-step = 0.25\n"
            "format = json\n"
        )
        parsed = parse_config_file(str(cfg_file))
        assert parsed["type"] == "I"

        args = cli.build_parser().parse_args(
            ["--config", str(cfg_file), "--format", "csv"]
        )
        cfg = config_from_sources(args)
        assert cfg.types == (HybridType.TYPE_I,)
        assert cfg.alphas == (1.0, 2.0)
        assert cfg.r_max == 0.5
        assert cfg.fmt == "csv"  # CLI flag beats file value

    def test_unknown_key_rejected(self, tmp_path):
        cfg_file = tmp_path / "sweep.cfg"
        cfg_file.write_text("frobnicate = 3\n")
        args = cli.build_parser().parse_args(["--config", str(cfg_file)])
        with pytest.raises(ConfigError):
            config_from_sources(args)

    def test_missing_file_is_config_error(self):
        args = cli.build_parser().parse_args(["--config", "/nonexistent/x.cfg"])
        with pytest.raises(ConfigError):
            config_from_sources(args)


class TestSweepOutput:
    EXPECTED = (
        "type,alpha,r,t,avg_fidelity,avg_success,classical_limit,engine\n"
        "I,1,0,1.000000,1.000000,0.932332,0.666667,closed-form\n"
        "I,1,0.3,0.953939,0.818295,0.836278,0.666667,closed-form\n"
        "II,1,0,1.000000,1.000000,0.932332,0.666667,closed-form\n"
        "II,1,0.3,0.953939,0.852872,0.918987,0.666667,closed-form\n"
    )

    def test_header_exact(self):
        assert CSV_HEADER == "type,alpha,r,t,avg_fidelity,avg_success,classical_limit,engine"

    def test_reference_rows(self):
        got = format_csv(run_sweep(small_config()))
        assert got == self.EXPECTED

    def test_reruns_byte_identical(self, tmp_path):
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        argv = ["--type", "both", "--alpha", "1", "--r-max", "0.3",
                "--r-step", "0.3"]
        assert main(argv + ["--out", str(out1)]) == EXIT_OK
        assert main(argv + ["--out", str(out2)]) == EXIT_OK
        assert out1.read_bytes() == out2.read_bytes()
        assert out1.read_text() == self.EXPECTED

    def test_json_full_precision(self):
        rows = run_sweep(small_config(types=(HybridType.TYPE_II,)))
        payload = json.loads(format_json(rows))
        row = payload[-1]
        assert row["type"] == "II"
        assert row["r"] == 0.3
        # JSON keeps the full float, not the 6-decimal CSV rendering
        assert abs(row["avg_success"] - 0.9189871245330598) < 1e-12
        assert row["classical_limit"] == pytest.approx(2.0 / 3.0, rel=1e-15)

    def test_first_principles_matches_closed_form(self):
        closed = run_sweep(small_config(types=(HybridType.TYPE_II,),
                                        r_min=0.3, r_max=0.3))
        simulated = run_sweep(small_config(types=(HybridType.TYPE_II,),
                                           r_min=0.3, r_max=0.3,
                                           engine="first-principles-coherent"))
        for a, b in zip(closed, simulated):
            assert abs(a["avg_fidelity"] - b["avg_fidelity"]) < 1e-6
            assert abs(a["avg_success"] - b["avg_success"]) < 1e-6

    def test_t_column_consistent(self):
        for row in run_sweep(small_config()):
            assert math.isclose(row["t"], math.sqrt(1.0 - row["r"] ** 2),
                                rel_tol=1e-12)


class TestExitCodes:
    def test_ok(self, tmp_path):
        out = tmp_path / "x.csv"
        code = main(["--type", "I", "--alpha", "1", "--r-max", "0",
                     "--r-step", "0.5", "--out", str(out)])
        assert code == EXIT_OK
        assert out.read_text().startswith(CSV_HEADER)

    def test_config_error(self, capsys):
        code = main(["--type", "I", "--alpha", "0"])
        assert code == EXIT_CONFIG
        assert "config error" in capsys.readouterr().err

    def test_fock_alpha_rejected_before_compute(self, capsys):
        code = main(["--engine", "first-principles-fock", "--alpha", "5",
                     "--r-max", "0", "--r-step", "0.5"])
        assert code == EXIT_CONFIG
        assert "alpha <= 2" in capsys.readouterr().err

    def test_crossval_pass_and_fail(self, monkeypatch, capsys):
        fake = (
            CheckResult("bell-support", 5.0e-15, 1.0e-8),
            CheckResult("group-formulas", 2.0e-9, 1.0e-6),
        )
        monkeypatch.setattr(cli, "run_all_checks", lambda: fake)
        assert main(["--crossval"]) == EXIT_OK
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 2
        assert lines[0].startswith("PASS bell-support")
        # a stricter tolerance flips the verdict and the exit code
        assert main(["--crossval", "--tolerance", "1e-18"]) == EXIT_CHECK
        lines = capsys.readouterr().out.strip().splitlines()
        assert all(line.startswith("FAIL") for line in lines)

    def test_crossval_json(self, monkeypatch, capsys):
        fake = (CheckResult("bell-support", 5.0e-15, 1.0e-8),)
        monkeypatch.setattr(cli, "run_all_checks", lambda: fake)
        assert main(["--crossval", "--format", "json"]) == EXIT_OK
        payload = json.loads(capsys.readouterr().out)
        assert payload["passed"] is True
        assert payload["checks"][0]["name"] == "bell-support"

    def test_numeric_error(self, monkeypatch, capsys):
        def boom(config):
            raise RuntimeError("numeric failure at type=II alpha=2 r=0.5: cutoff")

        monkeypatch.setattr(cli, "run_sweep", boom)
        code = main(["--type", "II", "--alpha", "2"])
        assert code == EXIT_NUMERIC
        assert "numeric error" in capsys.readouterr().err


class TestEntryPoint:
    def test_console_script(self, tmp_path):
        out = tmp_path / "cli.csv"
        proc = subprocess.run(
            [sys.executable, "-c",
             "import sys; from hybrid_teleport.cli import main; sys.exit(main())",
             ],
            input="",
            capture_output=True,
            text=True,
            timeout=120,
        )
        # no args: full default sweep would be slow only for first-principles;
        # closed-form default finishes fast and prints CSV to stdout
        assert proc.returncode == EXIT_OK
        assert proc.stdout.startswith(CSV_HEADER)
        n_rows = len(proc.stdout.strip().splitlines()) - 1
        assert n_rows == 2 * 3 * 50  # both types, three alphas, fifty r values
