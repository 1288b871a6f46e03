import json

import numpy as np
import pytest

from convexsym import (builtin_suite_configs, comparison_matrix_configs,
                       run_comparison, run_suite, write_builtin_suite)
from convexsym.errors import ConfigError


def disk_config(nx=65, **extra):
    cfg = {"domain": {"shape": "disk", "radius": 1.0, "nx": nx},
           "gauge": "euclidean", "f": "const:1", "label": "disk"}
    cfg.update(extra)
    return cfg


def square_config(nx=65, **extra):
    cfg = {"domain": {"shape": "square", "side": 1.0, "nx": nx},
           "gauge": "euclidean", "f": "const:1", "label": "square"}
    cfg.update(extra)
    return cfg


class TestRunComparison:
    def test_disk_torsion_equality(self):
        rep = run_comparison(disk_config(129))
        assert rep.verdict == "PASS"
        assert rep.equality
        assert rep.sup_gap <= 1e-3
        assert all(g["pass"] for g in rep.gradient_rows)

    def test_square_strict_inequality(self):
        rep = run_comparison(square_config(65))
        assert rep.verdict == "PASS"
        assert not rep.equality
        # strict Talenti-type gap well above grid error at mid-measures
        mid = (rep.s > 0.2 * rep.measure) & (rep.s < 0.6 * rep.measure)
        assert np.min((rep.vstar - rep.ustar)[mid]) > 0.0
        assert rep.sup_gap > 3e-3

    def test_theorem2_constant_drift_path(self):
        rep = run_comparison(square_config(65, drift={"B": "const:1", "sign": "-1"},
                                           drift_mode="constant", drift_beta=1.0))
        assert rep.verdict == "PASS"
        assert rep.drift_mode == "constant"

    def test_rejected_instance(self):
        rep = run_comparison(disk_config(33, flux={"matrix": [[0.5, 0], [0, 0.5]]}))
        assert rep.verdict == "REJECTED"
        assert not rep.certification["ok"]

    def test_bad_drift_mode(self):
        with pytest.raises(ConfigError):
            run_comparison(disk_config(33, drift_mode="adaptive"))

    def test_theorem2_consistency_with_pseudo_path(self):
        base = square_config(65, drift={"B": "const:1", "sign": "-1"})
        rep1 = run_comparison(dict(base))
        rep2 = run_comparison(dict(base, drift_mode="constant", drift_beta=1.0))
        assert rep1.verdict == rep2.verdict == "PASS"
        assert np.max(np.abs(rep1.vstar - rep2.vstar)) <= 1e-8

    def test_verdict_monotone_under_refinement(self):
        coarse = run_comparison(disk_config(33))
        fine = run_comparison(disk_config(65))
        assert coarse.verdict == fine.verdict == "PASS"
        assert min(fine.margin_min, 0.0) >= min(coarse.margin_min, 0.0) - 1e-12

    def test_report_determinism(self):
        a = run_comparison(square_config(33)).to_dict()
        b = run_comparison(square_config(33)).to_dict()
        assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


class TestSuite:
    def test_empty_directory(self, tmp_path):
        rows = run_suite(tmp_path, out_dir=tmp_path / "out")
        assert rows == []
        assert (tmp_path / "out" / "summary.csv").exists()

    def test_builtin_suite_all_pass(self, tmp_path):
        paths = write_builtin_suite(tmp_path, nx=65)
        assert len(paths) == 6
        rows = run_suite(tmp_path, out_dir=tmp_path / "out")
        assert len(rows) == 6
        assert all(r["verdict"] == "PASS" for r in rows)
        for p in paths:
            assert (tmp_path / "out" / f"{p.stem}.report.json").exists()
            assert (tmp_path / "out" / f"{p.stem}.curves.csv").exists()

    def test_violating_instance_marked_rejected(self, tmp_path):
        with open(tmp_path / "bad.json", "w") as f:
            json.dump(disk_config(33, flux={"matrix": [[0.5, 0], [0, 0.5]]},
                                  label="bad"), f)
        with open(tmp_path / "good.json", "w") as f:
            json.dump(disk_config(33, label="good"), f)
        rows = run_suite(tmp_path)
        verdicts = {r["label"]: r["verdict"] for r in rows}
        assert verdicts == {"bad": "REJECTED", "good": "PASS"}

    def test_broken_config_marked_failed(self, tmp_path):
        (tmp_path / "broken.json").write_text('{"domain": {"shape": "disk"}}')
        rows = run_suite(tmp_path)
        assert rows[0]["verdict"] == "FAILED"
        assert rows[0]["error"]

    def test_matrix_configs_cover_cross_product(self):
        cfgs = comparison_matrix_configs(65)
        assert len(cfgs) == 12
        assert {c.split("-")[0] for c in cfgs} == {"disk", "square", "ellipse", "lshape"}
        assert {c.split("-")[1] for c in cfgs} == {"none", "const", "bump"}

    def test_builtin_configs_schema(self):
        cfgs = builtin_suite_configs(129)
        assert len(cfgs) == 6
        assert cfgs["square-const"]["drift_mode"] == "constant"
        for cfg in cfgs.values():
            assert "domain" in cfg and "gauge" in cfg
