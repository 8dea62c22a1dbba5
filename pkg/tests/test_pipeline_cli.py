import json
import subprocess
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from dexfrag import pipeline
from dexfrag.cli import main
from dexfrag.config import DESK_SCALE, ExperimentConfig, from_mapping, load_config
from dexfrag.errors import ConfigError, ManifestError
from dexfrag.montecarlo import MonteCarloParams
from dexfrag.plots import emit_plots

ROOT = Path(__file__).resolve().parents[1]

TINY = """
[delays]
n = 1500
[bootstrap]
n_sub = 20
sub_size = 200
[montecarlo]
n_draws = 100
n_sim = 5
[protocol]
n_runs = 10
[econ]
pi_points = 20
"""


@pytest.fixture(scope="module")
def tiny_cfg(tmp_path_factory):
    p = tmp_path_factory.mktemp("cfg") / "tiny.toml"
    p.write_text(TINY)
    return p


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory, tiny_cfg):
    out = tmp_path_factory.mktemp("run")
    assert main(["reproduce", "--config", str(tiny_cfg), "--out", str(out), "--format", "svg"]) == 0
    return out


def data_lines(path):
    return [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]


class TestConfig:
    def test_defaults_match_design(self):
        c = ExperimentConfig()
        assert len(c.grid()) == 30
        assert c.n_delays == 100_000
        assert (c.bootstrap.n_sub, c.bootstrap.sub_size) == (1000, 5000)
        assert c.montecarlo == MonteCarloParams(10_000, 1_000)

    def test_shipped_file_is_default(self):
        assert load_config(ROOT / "configs" / "default.toml") == ExperimentConfig()

    def test_desk_scale_and_seed(self):
        c = load_config(None, desk_scale=True, seed=7)
        assert c.seed == 7 and c.n_delays == DESK_SCALE["n_delays"]
        assert c.montecarlo == MonteCarloParams(1000, 100)

    @pytest.mark.parametrize("data,key", [
        ({"links": {"fast_hi": 3}}, "links.fast_hi"),
        ({"nonsense": {"x": 1}}, "nonsense.x"),
        ({"clusters": {"configs": [[4, 6]]}}, "cluster"),
        ({"regression": {"cov_type": "HC3"}}, "regression.cov_type"),
        ({"links": {"slow_means": [20.0]}}, "links"),
    ])
    def test_errors_name_key(self, data, key):
        with pytest.raises(ConfigError) as exc:
            from_mapping(data)
        assert key in str(exc.value)

    def test_fingerprint_changes(self):
        a = ExperimentConfig()
        assert a.fingerprint() == ExperimentConfig().fingerprint()
        assert a.fingerprint() != replace(a, seed=1).fingerprint()

    def test_route_all_and_bins(self):
        c = from_mapping({"route": {"max_intermediate": 2}, "distributions": {"bins": 30}})
        assert c.route.max_intermediate == 2 and c.distributions.bins == 30
        assert from_mapping({"route": {"max_intermediate": "all"}}).route.max_intermediate is None


class TestCsv:
    def test_fmt(self):
        assert pipeline.fmt(1 / 3) == "0.333333"
        assert pipeline.fmt(123456789.0) == "1.23457e+08"
        assert pipeline.fmt(np.inf) == "inf"
        assert pipeline.fmt(True) == "true"
        assert pipeline.fmt(np.int64(4)) == "4"

    def test_roundtrip_and_metadata(self, tmp_path):
        cfg = ExperimentConfig()
        p = pipeline.write_csv(tmp_path / "x.csv", ["a", "b"], [[1, 0.5]], cfg)
        lines = p.read_text().splitlines()
        assert lines[0] == "a,b"
        assert lines[-1] == f"# fingerprint={cfg.fingerprint()} seed=2020"
        assert pipeline.read_csv(p) == [{"a": "1", "b": "0.5"}]
        assert not list(tmp_path.glob(".*.tmp"))


class TestReproduce:
    def test_files_and_manifest(self, tiny_run):
        doc = pipeline.load_manifest(tiny_run)
        listed = {e["file"] for e in doc["files"]}
        for name in ["econ.csv", "delays.csv", "bootstrap.csv", "density.csv", "cdf.csv",
                     "dist_summary.csv", "winprob.csv", "table2.csv", "protocol.csv"]:
            assert name in listed
        on_disk = {p.name for p in tiny_run.iterdir()} - {"manifest.json"}
        assert on_disk == listed
        for e in doc["files"]:
            assert pipeline.sha256(tiny_run / e["file"]) == e["sha256"]

    def test_csv_headers_and_trailer(self, tiny_run):
        fp = json.loads((tiny_run / "manifest.json").read_text())["fingerprint"]
        for p in tiny_run.glob("*.csv"):
            text = p.read_text().splitlines()
            assert text[-1] == f"# fingerprint={fp} seed=2020", p.name
            assert "," in text[0]
        assert data_lines(tiny_run / "winprob.csv")[0].split(",") == pipeline.WINPROB_HEADER
        assert data_lines(tiny_run / "delays.csv")[0].split(",") == [
            "draw_index", "source_cluster", "delay_ms", "eta_a", "eta_b", "slow_mean_ms", "seed"]
        assert data_lines(tiny_run / "protocol.csv")[0].split(",")[:5] == [
            "run_index", "initiator_cluster", "rounds", "elapsed_ms", "committed"]
        assert data_lines(tiny_run / "bootstrap.csv")[0].split(",") == pipeline.BOOTSTRAP_HEADER

    def test_row_counts(self, tiny_run):
        assert len(pipeline.read_csv(tiny_run / "winprob.csv")) == 30
        assert len(pipeline.read_csv(tiny_run / "delays.csv")) == 30 * 1500
        assert len(pipeline.read_csv(tiny_run / "table2.csv")) == 16
        assert len(pipeline.read_csv(tiny_run / "econ.csv")) == 20

    def test_svgs(self, tiny_run):
        svgs = sorted(p.name for p in tiny_run.glob("*.svg"))
        assert "econ_profits.svg" in svgs and "bootstrap_means.svg" in svgs and len(svgs) == 8

    def test_stage_alone_matches_pipeline(self, tiny_run, tiny_cfg, tmp_path):
        assert main(["montecarlo", "--config", str(tiny_cfg), "--out", str(tmp_path)]) == 0
        assert (tmp_path / "winprob.csv").read_bytes() == (tiny_run / "winprob.csv").read_bytes()
        assert main(["regress", "--config", str(tiny_cfg), "--out", str(tmp_path)]) == 0
        assert (tmp_path / "table2.csv").read_bytes() == (tiny_run / "table2.csv").read_bytes()

    def test_csv_only_emits_no_images(self, tiny_cfg, tmp_path):
        assert main(["reproduce", "--config", str(tiny_cfg), "--out", str(tmp_path)]) == 0
        assert not list(tmp_path.glob("*.svg"))
        assert emit_plots(tmp_path, "csv") == []

    def test_plots_need_manifest(self, tmp_path):
        with pytest.raises(ManifestError):
            emit_plots(tmp_path, "svg")


class TestExitCodes:
    def test_config_error(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("[links]\nfast_hi = 3\n")
        assert main(["econ", "--config", str(bad), "--out", str(tmp_path)]) == 1
        assert main(["econ", "--config", str(tmp_path / "missing.toml"), "--out", str(tmp_path)]) == 1
        bad.write_text("not toml [")
        assert main(["econ", "--config", str(bad), "--out", str(tmp_path)]) == 1

    def test_runtime_error(self, tmp_path, tiny_run):
        rows = data_lines(tiny_run / "winprob.csv")
        partial = tmp_path / "partial.csv"
        partial.write_text("\n".join(rows[:-3]) + "\n")
        assert main(["regress", "--input", str(partial), "--out", str(tmp_path)]) == 2

    def test_io_error(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert main(["econ", "--out", str(blocker / "sub")]) == 3
        assert main(["regress", "--input", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 3

    def test_econ_success(self, tmp_path):
        assert main(["econ", "--out", str(tmp_path)]) == 0
        assert len(pipeline.read_csv(tmp_path / "econ.csv")) == 100

    def test_module_entry_point(self, tmp_path):
        r = subprocess.run([sys.executable, "-m", "dexfrag", "econ", "--out", str(tmp_path)],
                           capture_output=True, text=True)
        assert r.returncode == 0 and "econ.csv" in r.stdout
