import json
import os

import jsonschema
import numpy as np
import pytest

from peridyn.cli import main

DOCS = os.path.join(os.path.dirname(__file__), "..", "docs")

FAST = ["--quad", "4,6"]
FAST_DELTAS = ["--delta-series", "0.04,0.02,0.01"]


def load_schema(name):
    with open(os.path.join(DOCS, name)) as f:
        return json.load(f)


def validate(path, schema_name):
    with open(path) as f:
        payload = json.load(f)
    jsonschema.validate(payload, load_schema(schema_name))


class TestExitCodes:
    def test_moments_ok(self, tmp_path):
        assert main(["moments", "--out", str(tmp_path)]) == 0
        validate(tmp_path / "moments.json", "oracle_study_schema.json")

    def test_kdelta_ok(self, tmp_path):
        assert main(["kdelta", "--out", str(tmp_path), "--normal", "0.6,0,0.8"]) == 0
        validate(tmp_path / "kdelta.json", "oracle_study_schema.json")

    def test_unknown_config_key_is_config_error(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text('{"study": "moments", "bogus": 1}')
        assert main(["moments", "--config", str(cfg)]) == 2

    def test_bad_material_spec(self, tmp_path):
        assert main(["blowup", "--out", str(tmp_path),
                     "--material", "cubic:1,2,3"]) == 2

    def test_bad_field_name(self, tmp_path):
        assert main(["blowup", "--out", str(tmp_path), "--field", "nope"]) == 2

    def test_mismatched_config_study(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text('{"study": "moments"}')
        assert main(["kdelta", "--config", str(cfg)]) == 2

    def test_zero_normal_rejected(self, tmp_path):
        assert main(["kdelta", "--out", str(tmp_path), "--normal", "0,0,0"]) == 2

    def test_bad_delta_series(self, tmp_path):
        assert main(["blowup", "--out", str(tmp_path),
                     "--delta-series", "0.01,0.02"]) == 2

    def test_missing_config_file(self):
        assert main(["moments", "--config", "/nonexistent/x.json"]) == 2

    def test_failing_check_exits_one(self, tmp_path):
        # the zero-traction patch star limit is the documented red case
        rc = main(["star", "--field", "patch_jump_zero_traction",
                   "--out", str(tmp_path), *FAST, *FAST_DELTAS])
        assert rc == 1


class TestStudyOutputs:
    def test_star_gradient_jump(self, tmp_path):
        rc = main(["star", "--out", str(tmp_path), *FAST, *FAST_DELTAS])
        assert rc == 0
        validate(tmp_path / "star.json", "report_schema.json")
        with open(tmp_path / "star.json") as f:
            rep = json.load(f)
        assert np.allclose(rep["limit_estimate"], [0.0, 0.0, -135.0 / 32.0],
                           atol=0.05)

    def test_natural_patch(self, tmp_path):
        rc = main(["natural", "--out", str(tmp_path), *FAST, *FAST_DELTAS])
        assert rc == 0
        validate(tmp_path / "natural.json", "report_schema.json")

    def test_blowup_patch(self, tmp_path):
        rc = main(["blowup", "--out", str(tmp_path), *FAST, *FAST_DELTAS])
        assert rc == 0
        validate(tmp_path / "blowup.json", "report_schema.json")

    def test_blowup_bounded_branch(self, tmp_path):
        # smooth field over a fictitious equal-phase interface: no blow-up,
        # the embedded check asserts boundedness instead of the -1 rate
        rc = main(["blowup", "--out", str(tmp_path), "--field", "trig_smooth",
                   "--material", "two-phase:1,1,1,1", *FAST, *FAST_DELTAS])
        assert rc == 0

    def test_converge_trig(self, tmp_path):
        rc = main(["converge", "--out", str(tmp_path), *FAST,
                   "--delta-series", "0.1,0.05,0.025"])
        assert rc == 0
        validate(tmp_path / "converge.json", "report_schema.json")
        header = (tmp_path / "converge.csv").read_text().splitlines()[0]
        assert header == "delta,point_id,vx,vy,vz,err_p"

    def test_solve_linear(self, tmp_path):
        rc = main(["solve", "--out", str(tmp_path), "--field", "linear"])
        assert rc == 0
        validate(tmp_path / "solve_report.json", "solve_report_schema.json")
        header = (tmp_path / "solution.csv").read_text().splitlines()[0]
        assert header == "x,y,z,ux,uy,uz,tag"

    def test_solve_config_file(self, tmp_path):
        cfg = tmp_path / "solve.json"
        cfg.write_text(json.dumps({
            "study": "solve", "field": "constant", "h": 0.125, "ratio": 2.0,
            "box": [[-0.5, -0.5, -0.5], [0.5, 0.5, 0.5]],
        }))
        rc = main(["solve", "--config", str(cfg), "--out", str(tmp_path)])
        assert rc == 0

    def test_flag_overrides_config(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"study": "kdelta", "normal": [1.0, 0.0, 0.0]}))
        rc = main(["kdelta", "--config", str(cfg), "--out", str(tmp_path),
                   "--normal", "0,0,1"])
        assert rc == 0
        with open(tmp_path / "kdelta.json") as f:
            assert json.load(f)["normal"] == [0.0, 0.0, 1.0]


class TestDeterminism:
    @pytest.mark.parametrize("argv,csvs", [
        (["moments"], ["moments.csv"]),
        (["kdelta"], ["kdelta.csv"]),
        (["converge", *FAST, "--delta-series", "0.05,0.025,0.0125"], ["converge.csv"]),
        (["blowup", *FAST, *FAST_DELTAS], ["blowup.csv"]),
        (["natural", *FAST, *FAST_DELTAS], ["natural.csv"]),
        (["star", *FAST, *FAST_DELTAS], ["star.csv"]),
        (["solve", "--field", "linear"], ["solution.csv"]),
    ])
    def test_byte_identical_across_thread_counts(self, argv, csvs, tmp_path):
        outs = []
        for threads, sub in (("1", "a"), ("8", "b")):
            out = tmp_path / sub
            main([*argv, "--out", str(out), "--threads", threads])
            outs.append([(out / c).read_bytes() for c in csvs])
        assert outs[0] == outs[1]

    def test_env_thread_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("PERIDYN_THREADS", "3")
        rc = main(["kdelta", "--out", str(tmp_path)])
        assert rc == 0
