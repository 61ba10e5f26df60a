"""
Tests for the CLI module.

This module tests the command-line interface functionality.
"""

import json
from unittest.mock import patch

import pytest

from ftl.cli import create_parser, main
from ftl.reports import read_csv


class TestCLIParser:
    """Test the command-line parser functionality."""

    def test_create_parser(self):
        """Test that the parser can be created and has expected commands."""
        parser = create_parser()
        commands = parser._subparsers._group_actions[0].choices.keys()
        for name in ("weights", "eb-check", "balpha", "herbort-cert", "coords", "ball", "gamma", "doubling",
                     "bergman", "star-volume", "metric", "psh-build", "psh-verify", "localize", "appendix",
                     "catalog", "parse"):
            assert name in commands

    def test_common_flags(self):
        args = create_parser().parse_args(["weights", "--domain", "herbort", "--delta", "1e-4:1e-2:3", "--seed", "7"])
        assert args.domain == "herbort"
        assert args.delta == "1e-4:1e-2:3"
        assert args.seed == 7
        assert args.direction == "e1"


class TestCLIMain:
    """Test exit statuses of the main entry point."""

    def test_version(self, capsys):
        assert main(["--version"]) == 0
        assert "ftl version" in capsys.readouterr().out

    @patch("sys.stdout")
    def test_no_command(self, mock_stdout):
        assert main([]) == 1

    def test_usage_error(self, capsys):
        assert main(["no-such-command"]) == 1

    def test_unknown_domain(self, capsys):
        assert main(["weights", "--domain", "no-such-domain", "--delta", "0.1"]) == 1
        assert "Error" in capsys.readouterr().err

    def test_failed_certificate(self, capsys):
        """Sampled extremality constants are at least 1, so a bound of 0.5 must fail."""
        code = main(["eb-check", "--domain", "siegel", "--delta", "0.01", "--samples", "8", "--max-K", "0.5"])
        assert code == 2
        assert "Certification failed" in capsys.readouterr().err


class TestCLICommands:
    """Test CLI command handlers end to end on the Siegel domain."""

    def test_weights_json(self, tmp_path, capsys):
        target = tmp_path / "weights.json"
        code = main(["weights", "--domain", "siegel", "--delta", "1e-3:1e-1:3", "--json", str(target)])
        assert code == 0
        assert capsys.readouterr().out == ""
        report = json.loads(target.read_text())
        assert report["schema"] == 1
        assert report["command"] == "weights"
        assert report["domain"] == "siegel"
        assert report["fit"]["slope"] == pytest.approx(-1.0)
        # F(L1, 0, δ) = 2/δ on the Siegel domain
        assert [row["F_times_delta"] for row in report["rows"]] == pytest.approx([2.0, 2.0, 2.0])

    def test_weights_csv(self, tmp_path):
        target = tmp_path / "out" / "weights.csv"
        assert main(["weights", "--domain", "siegel", "--delta", "1e-3:1e-1:3", "--csv", str(target)]) == 0
        rows = read_csv(str(target))
        assert len(rows) == 3
        assert float(rows[0]["delta"]) == pytest.approx(0.1)
        assert float(rows[-1]["F"]) == pytest.approx(2000.0)

    def test_weights_stdout(self, capsys):
        assert main(["weights", "--domain", "siegel", "--delta", "0.01", "--dir", "e1+e2"]) == 0
        out = capsys.readouterr().out
        assert out.startswith("delta,F,F_times_delta,dominant")
        assert "# direction: e1+e2" in out

    def test_config_file(self, tmp_path, capsys):
        config = tmp_path / "run.yaml"
        config.write_text("domain: siegel\ndelta: 0.01\ncommand: weights\n")
        target = tmp_path / "weights.json"
        assert main(["weights", "--config", str(config), "--json", str(target)]) == 0
        assert len(json.loads(target.read_text())["rows"]) == 1

    def test_config_for_other_command(self, tmp_path, capsys):
        config = tmp_path / "run.yaml"
        config.write_text("command: bergman\n")
        assert main(["weights", "--config", str(config)]) == 1

    def test_catalog(self, capsys):
        assert main(["catalog"]) == 0
        names = capsys.readouterr().out.split()
        assert {"decoupled", "herbort", "rotated", "siegel"} <= set(names)

    def test_catalog_entry(self, capsys):
        assert main(["catalog", "siegel", "--json"]) == 0
        info = json.loads(capsys.readouterr().out)
        assert info["n"] == 3
        assert info["M"] == 4

    def test_parse(self, capsys):
        assert main(["parse", "Re(z3) + |z1|^2 + |z2|^2"]) == 0
        assert capsys.readouterr().out.strip()

    def test_parse_error(self, capsys):
        assert main(["parse", "Re(z3) + |z1|^"]) == 1
        assert "^" in capsys.readouterr().err


class TestCLIReproducibility:
    """A fixed seed reproduces a report byte for byte."""

    def run(self, argv, capsys):
        assert main(argv) == 0
        return capsys.readouterr().out

    def test_stdout_identical(self, capsys):
        argv = ["star-volume", "--domain", "rotated", "--delta", "1e-3:1e-1:3", "--samples", "64", "--seed", "4"]
        first = self.run(argv, capsys)
        second = self.run(argv, capsys)
        assert first
        assert first == second

    def test_seed_changes_samples(self, capsys):
        argv = ["star-volume", "--domain", "rotated", "--delta", "1e-2", "--samples", "64", "--seed"]
        assert self.run(argv + ["4"], capsys) != self.run(argv + ["5"], capsys)

    def test_json_identical(self, tmp_path, capsys):
        paths = [tmp_path / "first.json", tmp_path / "second.json"]
        for path in paths:
            argv = ["eb-check", "--domain", "herbort", "--delta", "1e-4:1e-2:3", "--samples", "16", "--seed", "2"]
            assert main(argv + ["--json", str(path)]) == 0
        assert paths[0].read_bytes() == paths[1].read_bytes()


class TestCLIReports:
    """Summary fields added to individual command reports."""

    def test_herbort_cert_deviation(self, tmp_path):
        target = tmp_path / "cert.json"
        assert main(["herbort-cert", "--domain", "herbort", "--delta", "1e-6:1e-2:5", "--json", str(target)]) == 0
        report = json.loads(target.read_text())
        assert "leading exponent" in report["deviation"]
        assert report["exponent"] == pytest.approx(-1 / 6)
        assert report["fit"]["slope"] > -0.15

    def test_eb_check_deviation(self, tmp_path):
        target = tmp_path / "eb.json"
        argv = ["eb-check", "--domain", "herbort", "--delta", "1e-6:1e-2:5", "--samples", "64", "--json", str(target)]
        assert main(argv) == 0
        report = json.loads(target.read_text())
        assert report["max_K_EB1"] < 50
        assert report["eb1_fit"]["slope"] < 0
        assert "stays below 50" in report["deviation"]
        assert report["eb1_target_delta"] < 1e-6

    def test_eb_check_extremal_frame(self, tmp_path):
        target = tmp_path / "eb.json"
        assert main(["eb-check", "--delta", "1e-4:1e-2:3", "--samples", "16", "--json", str(target)]) == 0
        report = json.loads(target.read_text())
        assert "eb1_fit" in report
        assert "deviation" not in report

    def test_localize_frame_orthonormal(self, tmp_path, caplog):
        target = tmp_path / "localize.json"
        with caplog.at_level("WARNING", logger="ftl"):
            assert main(["localize", "--delta", "1e-3", "--points", "2", "--json", str(target)]) == 0
        assert "not orthonormal" not in caplog.text
        assert len(json.loads(target.read_text())["rows"]) == 2

    @pytest.mark.slow
    def test_psh_verify_raw_deficit(self, tmp_path):
        target = tmp_path / "psh.json"
        assert main(["psh-verify", "--delta", "1e-2", "--json", str(target)]) == 0
        report = json.loads(target.read_text())
        assert report["profile"] == "quadratic"
        assert report["max_beta"] <= 10.0
        assert report["failures"] == 0
        assert report["rows"][0]["raw_deficit"] >= 0.0
