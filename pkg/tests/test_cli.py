import json

import jsonschema
import numpy as np
import pytest

from phasecat import GridSpec, Potential
from phasecat.cli import RunConfig, load_config, main
from phasecat.errors import ValidationError
from phasecat.forward_scattering import read_potential_csv, write_potential_csv

SMALL = GridSpec(-20.0, 20.0, 1024)


def _schema(name):
    from importlib import resources

    with resources.files("phasecat.schema").joinpath(name).open() as fh:
        return json.load(fh)


@pytest.fixture()
def sech2_csv(tmp_path):
    p = tmp_path / "sech2.csv"
    write_potential_csv(p, Potential.from_callable(SMALL, lambda x: -2.0 / np.cosh(x) ** 2))
    return str(p)


@pytest.fixture()
def zero_csv(tmp_path):
    p = tmp_path / "zero.csv"
    write_potential_csv(p, Potential.from_samples(SMALL, np.zeros(SMALL.n_points)))
    return str(p)


class TestRunConfig:
    def test_defaults(self):
        cfg = RunConfig()
        assert cfg.n_k % 2 == 0
        assert cfg.seed == 0

    def test_invalid(self):
        with pytest.raises(ValidationError):
            RunConfig(ode_tol=-1.0)
        with pytest.raises(ValidationError):
            RunConfig(n_k=3)

    def test_config_file_and_flag_precedence(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps({"k_max": 6.0, "n_k": 64}))
        cfg = load_config(str(p), {"n_k": 32})
        assert cfg.k_max == 6.0
        assert cfg.n_k == 32  # flag wins

    def test_unknown_key(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps({"bogus": 1}))
        with pytest.raises(ValidationError):
            load_config(str(p), {})


class TestFamilyCommand:
    def test_outputs_and_schema(self, tmp_path):
        out = tmp_path / "fam"
        rc = main(["family", "--n", "1,2,4", "--x-min", "-40", "--x-max", "40",
                   "--grid-n", "4096", "--out", str(out)])
        assert rc == 0
        report = json.loads((out / "family_report.json").read_text())
        jsonschema.validate(report, _schema("catastrophe_report.schema.json"))
        assert report["verdict"] in ("catastrophe_trend", "stable")
        assert (out / "family_report.csv").exists()
        for n in (1, 2, 4):
            assert (out / f"family_member_{n:03d}.csv").exists()
        assert (out / "family_report.png").exists()

    def test_deterministic_rerun(self, tmp_path):
        out = tmp_path / "fam"
        args = ["family", "--n", "1,2", "--x-min", "-40", "--x-max", "40",
                "--grid-n", "4096", "--out", str(out), "--no-plot"]
        assert main(args) == 0
        first = (out / "family_report.json").read_bytes()
        assert main(args) == 0
        assert (out / "family_report.json").read_bytes() == first

    def test_no_plot(self, tmp_path):
        out = tmp_path / "fam"
        main(["family", "--n", "1", "--x-min", "-40", "--x-max", "40",
              "--grid-n", "4096", "--out", str(out), "--no-plot"])
        assert not (out / "family_report.png").exists()

    def test_bad_n_list(self, tmp_path):
        assert main(["family", "--n", "x,y", "--out", str(tmp_path)]) == 1


class TestForwardCommand:
    def test_zero_potential(self, tmp_path, zero_csv):
        out = tmp_path / "fwd"
        rc = main(["forward", zero_csv, "--n-k", "32", "--k-max", "6",
                   "--out", str(out), "--no-plot"])
        assert rc == 0
        d = json.loads((out / "scattering.json").read_text())
        jsonschema.validate(d, _schema("scattering_data.schema.json"))
        s11 = np.asarray(d["s11"])
        assert np.max(np.abs(s11[:, 0] - 1.0)) < 1e-12
        assert np.max(np.abs(s11[:, 1])) < 1e-12

    def test_sech2(self, tmp_path, sech2_csv):
        out = tmp_path / "fwd"
        rc = main(["forward", sech2_csv, "--n-k", "64", "--k-max", "8",
                   "--out", str(out), "--no-plot"])
        assert rc == 0
        d = json.loads((out / "scattering.json").read_text())
        assert len(d["bound_states"]) == 1
        assert d["bound_states"][0]["kappa"] == pytest.approx(1.0, abs=1e-3)

    def test_malformed_csv_exit1(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("x,q\n0.0,1.0\n1.0,zz\n")
        rc = main(["forward", str(p), "--out", str(tmp_path)])
        assert rc == 1

    def test_missing_file_exit1(self, tmp_path):
        assert main(["forward", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 1


class TestInvertCommand:
    def test_round_trip(self, tmp_path, sech2_csv):
        fwd = tmp_path / "fwd"
        assert main(["forward", sech2_csv, "--n-k", "64", "--k-max", "8",
                     "--out", str(fwd), "--no-plot"]) == 0
        inv = tmp_path / "inv"
        assert main(["invert", str(fwd / "scattering.json"), "--out", str(inv),
                     "--no-plot"]) == 0
        q = read_potential_csv(inv / "potential.csv")
        x = q.spec.x()
        assert np.max(np.abs(q.values - (-2.0 / np.cosh(x) ** 2))) < 1e-2 * 2.0

    def test_empty_scattering_gives_zero(self, tmp_path):
        k = [-1.5, -0.5, 0.5, 1.5]
        one = [[1.0, 0.0]] * 4
        zero = [[0.0, 0.0]] * 4
        p = tmp_path / "sd.json"
        p.write_text(json.dumps({"k": k, "s11": one, "s12": zero, "s21": zero,
                                 "s22": one, "bound_states": []}))
        out = tmp_path / "inv"
        assert main(["invert", str(p), "--out", str(out), "--no-plot"]) == 0
        q = read_potential_csv(out / "potential.csv")
        assert np.max(np.abs(q.values)) < 1e-10

    def test_invalid_json_exit1(self, tmp_path):
        p = tmp_path / "sd.json"
        p.write_text("{not json")
        assert main(["invert", str(p), "--out", str(tmp_path)]) == 1


class TestAccumulateCommand:
    def test_single_order_stable(self, tmp_path):
        out = tmp_path / "acc"
        assert main(["accumulate", "--n-max", "1", "--out", str(out), "--no-plot"]) == 0
        d = json.loads((out / "accumulation_report.json").read_text())
        jsonschema.validate(d, _schema("catastrophe_report.schema.json"))
        assert d["verdict"] == "stable"

    def test_trend(self, tmp_path):
        out = tmp_path / "acc"
        assert main(["accumulate", "--n-max", "32", "--out", str(out), "--no-plot"]) == 0
        d = json.loads((out / "accumulation_report.json").read_text())
        assert d["verdict"] == "catastrophe_trend"

    def test_bad_e_inf_exit1(self, tmp_path):
        assert main(["accumulate", "--n-max", "4", "--e-inf", "0",
                     "--out", str(tmp_path)]) == 1


class TestUvCommand:
    def test_zero_potential_all_zero(self, tmp_path, zero_csv):
        out = tmp_path / "uv"
        rc = main(["uv", zero_csv, "--n-k", "32", "--k-max", "6",
                   "--out", str(out), "--no-plot"])
        assert rc == 0
        d = json.loads((out / "phase_system.json").read_text())
        jsonschema.validate(d, _schema("phase_system.schema.json"))
        for key in ("phi", "u", "v", "r12", "r21"):
            assert np.max(np.abs(np.asarray(d[key]))) == 0.0

    def test_degenerate_phase_exit2(self, tmp_path, sech2_csv):
        rc = main(["uv", sech2_csv, "--n-k", "32", "--k-max", "6",
                   "--singular-tol", "10", "--out", str(tmp_path), "--no-plot"])
        assert rc == 2

    def test_weak_gaussian_fields(self, tmp_path):
        p = tmp_path / "g.csv"
        write_potential_csv(p, Potential.from_callable(SMALL, lambda x: 0.1 * np.exp(-(x**2))))
        out = tmp_path / "uv"
        rc = main(["uv", str(p), "--n-k", "64", "--k-max", "8",
                   "--out", str(out), "--no-plot"])
        assert rc == 0
        d = json.loads((out / "phase_system.json").read_text())
        assert "bound_report" in d
        assert d["bound_report"]["rhs_integral"] > 0


class TestArgparseContract:
    def test_unknown_flag_exit1(self):
        with pytest.raises(SystemExit) as exc:
            main(["family", "--n", "1", "--bogus"])
        assert exc.value.code == 1

    def test_missing_subcommand_exit1(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 1
