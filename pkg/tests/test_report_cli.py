"""Report serialization, config parsing, CLI flows, and determinism."""

import json
import os
import subprocess
import sys

import pytest

from evglab.config import ConfigError, manifold_sections, parse_config_text
from evglab.report import CHECK_TAGS, ExperimentReport, module_for_tag


def _sample_report():
    rep = ExperimentReport(experiment="demo", manifold="exp_taper(n=3,c=0.8)")
    rep.add(name="alpha check", tag="green.flux", observed=1.25e-9,
            criterion="<= 1e-8", passed=True, hard=True,
            details={"max": 1.25e-9, "where": 2.0})
    rep.add(name="soft fit", tag="heat.liyau_upper", observed=0.107,
            criterion="finite", passed=True, hard=False)
    rep.provenance["grid"] = {"points": 40}
    return rep


class TestReport:
    def test_json_round_trip(self):
        rep = _sample_report()
        back = ExperimentReport.from_json(rep.to_json())
        assert back.to_json() == rep.to_json()
        assert back.records[0].observed == rep.records[0].observed
        assert back.provenance == rep.provenance

    def test_csv_round_trip(self):
        rep = _sample_report()
        back = ExperimentReport.from_csv(rep.to_csv())
        assert back.experiment == rep.experiment
        assert back.manifold == rep.manifold
        assert back.records == rep.records

    def test_every_record_has_criterion_and_flag(self):
        rep = _sample_report()
        for rec in rep.records:
            assert rec.criterion
            assert isinstance(rec.passed, bool)

    def test_unknown_tag_rejected(self):
        rep = ExperimentReport(experiment="x")
        with pytest.raises(KeyError):
            rep.add(name="bad", tag="nonexistent.check", observed=0.0,
                    criterion="", passed=True)

    def test_tags_resolve_to_exactly_one_module(self):
        seen = {}
        for tag in CHECK_TAGS:
            mod = module_for_tag(tag)
            assert tag.split(".")[0] in (mod, "cli", "mt", "tilde", "heat",
                                         "green", "rearrange", "geometry")
            assert seen.setdefault(tag, mod) == mod

    def test_no_timestamp_by_default(self, monkeypatch):
        monkeypatch.delenv("EVGLAB_STAMP", raising=False)
        rep = _sample_report()
        rep.stamp()
        assert "timestamp" not in rep.provenance
        monkeypatch.setenv("EVGLAB_STAMP", "1")
        rep.stamp()
        assert "timestamp" in rep.provenance

    def test_hard_passed_ignores_soft_failures(self):
        rep = _sample_report()
        rep.add(name="failed fit", tag="heat.liyau_lower", observed=0.0,
                criterion="> 0", passed=False, hard=False)
        assert not rep.passed
        assert rep.hard_passed


class TestConfig:
    def test_parse_sections_and_values(self):
        text = """
        # comment
        [run]
        checks = manifold, green
        out = reports

        [manifold exp3]
        family = exp_taper
        n = 3
        c = 0.8
        flag = true
        """
        sections = parse_config_text(text)
        assert sections["run"]["checks"] == ["manifold", "green"]
        mans = manifold_sections(sections)
        assert mans["exp3"]["family"] == "exp_taper"
        assert mans["exp3"]["n"] == 3
        assert mans["exp3"]["c"] == 0.8
        assert mans["exp3"]["flag"] is True

    @pytest.mark.parametrize("text", [
        "[unterminated\nkey = 1",
        "key = 1",
        "[a]\nnovalue",
        "[a]\n[a]\n",
    ])
    def test_rejects_malformed(self, text):
        with pytest.raises(ConfigError):
            parse_config_text(text)


MINI_CONFIG = """\
[run]
checks = manifold, green

[manifold flat]
family = euclidean
n = 3
"""


def _run_cli(args, cwd):
    return subprocess.run([sys.executable, "-m", "evglab.cli", *args],
                          capture_output=True, text=True, cwd=cwd)


class TestCli:
    def test_empty_check_list_exits_zero(self, tmp_path):
        cfg = tmp_path / "empty.cfg"
        cfg.write_text("[run]\nchecks =\n")
        res = _run_cli(["--config", str(cfg), "--out",
                        str(tmp_path / "out"), "suite"], cwd=str(tmp_path))
        assert res.returncode == 0, res.stderr
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["provenance"]["experiments"] == []

    def test_flat_mini_suite_all_hard_pass(self, tmp_path):
        cfg = tmp_path / "mini.cfg"
        cfg.write_text(MINI_CONFIG)
        res = _run_cli(["--config", str(cfg), "--out", str(tmp_path / "out"),
                        "suite"], cwd=str(tmp_path))
        assert res.returncode == 0, res.stderr + res.stdout
        names = sorted(os.listdir(tmp_path / "out"))
        assert "manifold_flat.csv" in names
        assert "manifold_flat.svg" in names
        assert "green_flat.json" in names

    def test_suite_byte_identical(self, tmp_path):
        cfg = tmp_path / "mini.cfg"
        cfg.write_text(MINI_CONFIG)
        for sub in ("one", "two"):
            res = _run_cli(["--config", str(cfg), "--out",
                            str(tmp_path / sub), "suite"], cwd=str(tmp_path))
            assert res.returncode == 0, res.stderr
        files = sorted(os.listdir(tmp_path / "one"))
        assert files == sorted(os.listdir(tmp_path / "two"))
        for fname in files:
            a = (tmp_path / "one" / fname).read_bytes()
            b = (tmp_path / "two" / fname).read_bytes()
            assert a == b, f"{fname} differs between runs"

    def test_concurrent_jobs_match_serial(self, tmp_path):
        cfg = tmp_path / "mini.cfg"
        cfg.write_text(MINI_CONFIG)
        for sub, jobs in (("serial", "1"), ("threaded", "3")):
            res = _run_cli(["--config", str(cfg), "--out",
                            str(tmp_path / sub), "--jobs", jobs, "suite"],
                           cwd=str(tmp_path))
            assert res.returncode == 0, res.stderr
        for fname in sorted(os.listdir(tmp_path / "serial")):
            assert (tmp_path / "serial" / fname).read_bytes() \
                == (tmp_path / "threaded" / fname).read_bytes(), fname

    def test_unadjusted_constant_fails_hard(self, tmp_path):
        cfg = tmp_path / "wrong.cfg"
        cfg.write_text("""\
[run]
checks = rearrange

[manifold exp3]
family = exp_taper
n = 3
c = 0.8

[rearrange]
families = exp3
alpha = 2
constant_mode = unadjusted
""")
        res = _run_cli(["--config", str(cfg), "--out", str(tmp_path / "out"),
                        "suite"], cwd=str(tmp_path))
        assert res.returncode == 1

    def test_malformed_config_exit_code(self, tmp_path):
        cfg = tmp_path / "broken.cfg"
        cfg.write_text("nonsense\n")
        res = _run_cli(["--config", str(cfg), "--out", str(tmp_path / "out"),
                        "suite"], cwd=str(tmp_path))
        assert res.returncode == 2

    def test_unknown_check_exit_code(self, tmp_path):
        cfg = tmp_path / "odd.cfg"
        cfg.write_text("[run]\nchecks = warp\n")
        res = _run_cli(["--config", str(cfg), "--out", str(tmp_path / "out"),
                        "suite"], cwd=str(tmp_path))
        assert res.returncode == 2

    def test_manifold_subcommand(self, tmp_path):
        res = _run_cli(["--out", str(tmp_path / "out"), "manifold",
                        "--family", "poly_taper", "--n", "3", "--c", "0.5",
                        "--a", "0.5", "--r-max", "100"], cwd=str(tmp_path))
        assert res.returncode == 0, res.stderr
        assert (tmp_path / "out" / "manifold_poly_taper3.csv").exists()

    def test_tilde_subcommand_rejects_flat(self, tmp_path):
        res = _run_cli(["--out", str(tmp_path / "out"), "tilde",
                        "--family", "euclidean"], cwd=str(tmp_path))
        assert res.returncode == 2

    def test_plot_replot_identical(self, tmp_path):
        from evglab.plotting import render_series
        import numpy as np
        x = np.geomspace(1.0, 100.0, 20)
        for sub in ("p1.svg", "p2.svg"):
            render_series(str(tmp_path / sub), x,
                          {"series a": x ** -0.5, "series b": x ** -1.0},
                          title="check", xlabel="r", ylabel="v", logx=True,
                          logy=True, hlines={"level": 0.1})
        assert (tmp_path / "p1.svg").read_bytes() \
            == (tmp_path / "p2.svg").read_bytes()
