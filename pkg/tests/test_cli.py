import csv
import json
from pathlib import Path

import pytest

from nohair import cli
from nohair.report import ENTANGLE_COLUMNS, RESULT_COLUMNS

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL = {"restarts": 4, "samples": 16, "pivot_samples": 4, "pivot_restarts": 4}


def run(tmp_path, command, config, *extra, name="out"):
    cfg = tmp_path / f"{name}.json"
    cfg.write_text(json.dumps(config))
    out = tmp_path / name
    code = cli.main([command, "--config", str(cfg), "--out", str(out), "--quiet", *extra])
    return code, out


def rows(out):
    with open(out / "results.csv", newline="") as fh:
        return list(csv.DictReader(fh))


class TestConfig:
    def test_unknown_key(self, tmp_path):
        code, _ = run(tmp_path, "verify", {"n_models": 2, "tolerence": 1e-6})
        assert code == cli.EXIT_CONFIG

    @pytest.mark.parametrize(
        "bad",
        [{"tolerance": 0}, {"restarts": 0}, {"n_models": "3"}, {"dim_bh": []}, {"model": "bogus"}, {"seed": -1}],
    )
    def test_invalid_values(self, tmp_path, bad):
        assert run(tmp_path, "verify", bad)[0] == cli.EXIT_CONFIG

    def test_not_json(self, tmp_path):
        cfg = tmp_path / "x.json"
        cfg.write_text("{nope")
        assert cli.main(["verify", "--config", str(cfg), "--quiet"]) == cli.EXIT_CONFIG

    def test_missing_file(self, tmp_path):
        assert cli.main(["verify", "--config", str(tmp_path / "none.json"), "--quiet"]) == cli.EXIT_CONFIG

    def test_bad_flag(self):
        assert cli.main(["verify"]) == cli.EXIT_CONFIG

    def test_seed_override(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"seed": 1}))
        assert cli.load_config("verify", cfg, seed=99).seed == 99

    @pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
    def test_presets_parse(self, path):
        command = path.stem.split("_")[0]
        command = "verify" if command in ("campaign", "ideal") else command
        assert cli.load_config(command, path).seed >= 0


class TestVerify:
    def test_ideal_smoke_preset(self, tmp_path):
        out = tmp_path / "smoke"
        code = cli.main(["verify", "--config", str(CONFIGS / "ideal_smoke.json"), "--out", str(out), "--quiet", "--workers", "1"])
        assert code == cli.EXIT_OK
        got = rows(out)
        assert len(got) == 10
        assert all(r["verdict"] == "pass" for r in got)
        assert all(float(r["eps_upper"]) <= 1e-8 for r in got)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["verdicts"] == {"pass": 10, "fail": 0, "indeterminate": 0}
        assert manifest["stream_ids"] == list(range(10))

    def test_outputs(self, tmp_path):
        code, out = run(tmp_path, "verify", {"n_models": 3, "seed": 42, **SMALL}, "--workers", "1")
        assert code == cli.EXIT_OK
        header = (out / "results.csv").read_text().splitlines()[0]
        assert header == ",".join(RESULT_COLUMNS)
        dat = (out / "frontier.dat").read_text().splitlines()
        assert len(dat) == 3 and all(len(line.split(" ")) == 2 for line in dat)
        svg = (out / "frontier.svg").read_text()
        assert svg.startswith("<svg") and "polyline" in svg and svg.count("<circle") == 3
        manifest = json.loads((out / "manifest.json").read_text())
        for key in ("config", "tool_version", "duration_s", "stream_ids", "verdicts"):
            assert key in manifest
        assert sum(manifest["verdicts"].values()) == 3

    def test_deterministic_across_workers(self, tmp_path):
        cfg = {"n_models": 10, "seed": 42, "dim_f": [2], "dim_bh": [2], **SMALL}
        _, a = run(tmp_path, "verify", cfg, "--workers", "1", name="a")
        _, b = run(tmp_path, "verify", cfg, "--workers", "1", name="b")
        _, c = run(tmp_path, "verify", cfg, "--workers", "3", name="c")
        ref = (a / "results.csv").read_bytes()
        assert ref == (b / "results.csv").read_bytes() == (c / "results.csv").read_bytes()
        assert (a / "frontier.dat").read_bytes() == (c / "frontier.dat").read_bytes()

    def test_stream_id_regenerates_row(self, tmp_path):
        cfg = {"n_models": 4, "seed": 11, **SMALL}
        _, out = run(tmp_path, "verify", cfg, "--workers", "1")
        parsed = cli.parse_config("verify", cfg)
        third = rows(out)[2]
        again = cli.verify_instance(parsed, int(third["stream_id"]))
        assert third["eps_upper"] == repr(again["eps_upper"])

    def test_failure_exit_code(self, tmp_path, monkeypatch):
        def failing(cfg, k):
            row = dict.fromkeys(RESULT_COLUMNS, 0.0)
            row.update(verdict="fail", stream_id=k)
            return row

        monkeypatch.setattr(cli, "verify_instance", failing)
        assert run(tmp_path, "verify", {"n_models": 2}, "--workers", "1")[0] == cli.EXIT_FAIL


class TestSweep:
    def test_zero_param_excluded(self, tmp_path):
        code, out = run(tmp_path, "sweep", {"family": "dephasing", "params": [0.0, 0.001, 0.003, 0.01, 0.03, 0.1], **SMALL}, "--workers", "1")
        assert code == cli.EXIT_OK
        got = rows(out)
        assert float(got[0]["eps_upper"]) <= 1e-8
        fit = json.loads((out / "fit.json").read_text())
        assert fit["excluded_params"] == [0.0]
        assert len(fit["fitted_params"]) == 5
        for key in ("slope", "intercept", "r_squared"):
            assert isinstance(fit[key], float)

    def test_too_few_points(self, tmp_path):
        code, out = run(tmp_path, "sweep", {"family": "depolarizing", "params": [0.0, 0.01, 0.1], **SMALL}, "--workers", "1")
        assert code == cli.EXIT_DATA
        assert (out / "results.csv").exists() and not (out / "fit.json").exists()

    @pytest.mark.parametrize("bad", [{"family": "erasure", "params": [0.1]}, {"family": "dephasing", "params": []}, {"family": "dephasing", "params": [1.5]}])
    def test_bad_grid(self, tmp_path, bad):
        assert run(tmp_path, "sweep", bad)[0] == cli.EXIT_CONFIG


class TestEntangle:
    def test_ideal_preset(self, tmp_path):
        out = tmp_path / "ent"
        code = cli.main(["entangle", "--config", str(CONFIGS / "entangle_ideal.json"), "--out", str(out), "--quiet"])
        assert code == cli.EXIT_OK
        got = rows(out)
        assert list(got[0]) == list(ENTANGLE_COLUMNS)
        cross = [r for r in got if r["lambdas_a"] != r["lambdas_b"]]
        assert len(cross) == 1
        assert float(cross[0]["der"]) == pytest.approx(0.5, abs=1e-9)
        assert float(cross[0]["rhs"]) == pytest.approx(0.5, abs=1e-9)
        assert all(r["verdict"] == "pass" for r in got)

    def test_random_instances(self, tmp_path):
        cfg = {"n_models": 4, "dim_bh": [2, 4], "spectra": [[0.5, 0.5], [0.9, 0.1]], "random_pairs": 2, **SMALL}
        code, out = run(tmp_path, "entangle", cfg, "--workers", "1")
        assert code == cli.EXIT_OK
        assert len(rows(out)) == 4 * 5

    @pytest.mark.parametrize("bad", [{"spectra": []}, {"spectra": [[0.5, 0.6]]}, {"spectra": [[0.2, 0.3, 0.5]]}])
    def test_bad_spectra(self, tmp_path, bad):
        assert run(tmp_path, "entangle", bad)[0] == cli.EXIT_CONFIG


class TestDiamond:
    def test_identical(self, tmp_path):
        spec = {"family": "dephasing", "dim": 2, "param": 0.3}
        code, out = run(tmp_path, "diamond", {"a": spec, "b": spec})
        res = json.loads((out / "diamond.json").read_text())
        assert code == cli.EXIT_OK and res["certified"]
        assert res["upper"] <= 1e-12

    def test_depolarizing_preset(self, tmp_path):
        out = tmp_path / "dia"
        assert cli.main(["diamond", "--config", str(CONFIGS / "diamond_depolarizing.json"), "--out", str(out), "--quiet"]) == 0
        res = json.loads((out / "diamond.json").read_text())
        assert res["lower"] == pytest.approx(0.375, abs=1e-6)
        assert res["upper"] == pytest.approx(0.375, abs=1e-6)
        assert res["certified"] and len(res["witness_state"]) == 4

    def test_explicit_kraus(self, tmp_path):
        x = [[0, 1], [1, 0]]
        code, out = run(tmp_path, "diamond", {"a": {"kraus": [x]}, "b": {"identity": 2}})
        assert code == 0
        assert json.loads((out / "diamond.json").read_text())["lower"] == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize(
        "a",
        [{"kraus": [[[1, 0], [0, 1]], [[1, 0], [0, 1]]]}, {"kraus": []}, {"kraus": [[["a", 0], [0, 1]]]}, {"name": "x"}],
    )
    def test_malformed(self, tmp_path, a):
        assert run(tmp_path, "diamond", {"a": a, "b": {"identity": 2}})[0] == cli.EXIT_CONFIG

    def test_mismatched_spaces(self, tmp_path):
        assert run(tmp_path, "diamond", {"a": {"identity": 2}, "b": {"identity": 3}})[0] == cli.EXIT_CONFIG
