import json
from pathlib import Path

import pytest

from covlearn.cli import SpecError, main, parse_spec, run_experiment

SHIPPED_CONFIGS = sorted((Path(__file__).parent.parent / "scripts").glob("*.cfg"))

MINI = """\
# smallest useful experiment
kind = gaussian-ssr
n = 10
m = 30
l = 12
k = 2
snr_db = 4, 8
methods = cl-omp, somp
seed = 21
trials = 6
"""


def write(tmp_path, text, name="exp.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestParseSpec:
    def test_minimal_spec_defaults(self, tmp_path):
        spec = parse_spec(write(tmp_path, MINI))
        assert spec.scenario.kind == "gaussian-ssr"
        assert spec.scenario.trials == 6
        assert spec.emit == ("csv", "json")
        for m in spec.methods:
            assert m.max_iter == 500
            assert m.tol == pytest.approx(0.5e-4)

    def test_sparsity_constraint_named(self, tmp_path):
        bad = MINI.replace("k = 2", "k = 10")
        with pytest.raises(SpecError, match="k=10"):
            parse_spec(write(tmp_path, bad))

    def test_unknown_method_lists_supported(self, tmp_path):
        bad = MINI.replace("methods = cl-omp, somp", "methods = cl-omp, nonsense")
        with pytest.raises(SpecError, match="supported:.*cl-bcd"):
            parse_spec(write(tmp_path, bad))

    def test_unknown_key_is_line_anchored(self, tmp_path):
        bad = MINI + "mystery_knob = 3\n"
        with pytest.raises(SpecError, match=r":11: key 'mystery_knob'"):
            parse_spec(write(tmp_path, bad))

    def test_duplicate_key_rejected(self, tmp_path):
        bad = MINI + "n = 11\n"
        with pytest.raises(SpecError, match="already set"):
            parse_spec(write(tmp_path, bad))

    def test_bad_value_names_key(self, tmp_path):
        bad = MINI.replace("n = 10", "n = ten")
        with pytest.raises(SpecError, match="key 'n'"):
            parse_spec(write(tmp_path, bad))

    def test_trials_zero_rejected(self, tmp_path):
        bad = MINI.replace("trials = 6", "trials = 0")
        with pytest.raises(SpecError, match="trials"):
            parse_spec(write(tmp_path, bad))

    def test_method_override_applies(self, tmp_path):
        cfg = MINI + "method.cl-omp.max_iter = 7\n"
        spec = parse_spec(write(tmp_path, cfg))
        by = {m.tag: m for m in spec.methods}
        assert by["cl-omp"].max_iter == 7
        assert by["somp"].max_iter == 500

    def test_override_for_absent_method_rejected(self, tmp_path):
        cfg = MINI + "method.iaa.tol = 1e-3\n"
        with pytest.raises(SpecError, match="not in the run"):
            parse_spec(write(tmp_path, cfg))

    def test_output_dir_key(self, tmp_path):
        spec = parse_spec(write(tmp_path, MINI + "output_dir = out/bench\n"))
        assert spec.output_dir == "out/bench"
        assert parse_spec(write(tmp_path, MINI, "d.cfg")).output_dir == "results"

    def test_doa_spec_round_trip(self, tmp_path):
        cfg = """\
kind = ula-doa
n = 12
m = 361
l = 20
k = 1
snr_db = 0
true_doas_deg = -24.8
methods = cl-omp
trials = 2
"""
        spec = parse_spec(write(tmp_path, cfg))
        assert spec.scenario.peak is True
        assert spec.scenario.true_doas_deg == (-24.8,)

    @pytest.mark.parametrize("cfg", SHIPPED_CONFIGS, ids=lambda p: p.name)
    def test_shipped_configs_validate(self, cfg):
        spec = parse_spec(cfg)
        assert spec.methods
        assert spec.scenario.trials >= 100  # full-scale experiments


class TestRunExperiment:
    def test_outputs_and_reproducibility(self, tmp_path):
        spec = parse_spec(write(tmp_path, MINI))
        for sub in ("a", "b"):
            assert run_experiment(spec, tmp_path / sub, threads=1 if sub == "a" else 3) == 0
        csv_a = (tmp_path / "a" / "results.csv").read_bytes()
        csv_b = (tmp_path / "b" / "results.csv").read_bytes()
        assert csv_a == csv_b
        lines = csv_a.decode().strip().splitlines()
        assert lines[0].startswith("method,snr_db,trials,per")
        assert len(lines) == 1 + 2 * 2  # header + methods x snrs
        meta = json.loads((tmp_path / "a" / "meta.json").read_text())
        assert meta["seed"] == 21
        assert meta["scenario"]["n_atoms"] == 30
        assert "wall_time_s" in meta
        results = json.loads((tmp_path / "a" / "results.json").read_text())
        assert len(results) == 4
        assert all(r["mean_runtime_s"] is None for r in results)

    def test_timings_flag_populates_runtime(self, tmp_path):
        spec = parse_spec(write(tmp_path, MINI))
        run_experiment(spec, tmp_path / "timed", threads=1, timings=True)
        rows = (tmp_path / "timed" / "results.csv").read_text().strip().splitlines()[1:]
        assert all(row.rsplit(",", 1)[1] != "" for row in rows)

    def test_csv_only_emit(self, tmp_path):
        spec = parse_spec(write(tmp_path, MINI + "emit = csv\n"))
        run_experiment(spec, tmp_path / "csvonly")
        assert (tmp_path / "csvonly" / "results.csv").exists()
        assert not (tmp_path / "csvonly" / "results.json").exists()
        assert (tmp_path / "csvonly" / "meta.json").exists()


class TestMain:
    def test_validate_ok(self, tmp_path, capsys):
        cfg = write(tmp_path, MINI)
        assert main(["validate", "--config", str(cfg)]) == 0
        assert "ok" in capsys.readouterr().out

    def test_validate_bad_config(self, tmp_path, capsys):
        cfg = write(tmp_path, MINI.replace("k = 2", "k = 10"))
        assert main(["validate", "--config", str(cfg)]) == 2
        assert "error:" in capsys.readouterr().err

    def test_list_methods(self, capsys):
        assert main(["list-methods"]) == 0
        out = capsys.readouterr().out
        for tag in ("cl-bcd", "cl-omp", "somp", "music"):
            assert tag in out

    def test_run_with_overrides(self, tmp_path):
        cfg = write(tmp_path, MINI)
        out = tmp_path / "run_out"
        assert main(
            ["run", "--config", str(cfg), "--out", str(out), "--seed", "99", "--trials", "3"]
        ) == 0
        meta = json.loads((out / "meta.json").read_text())
        assert meta["seed"] == 99
        assert meta["scenario"]["trials"] == 3

    def test_run_trials_zero_rejected(self, tmp_path, capsys):
        cfg = write(tmp_path, MINI)
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "x"), "--trials", "0"]) == 2
        assert "trials" in capsys.readouterr().err
