"""End-to-end CLI tests, run in process through main()."""

import json

import numpy as np
import pytest

from nambudyn.cli import main


def write_config(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def base_config(**extra):
    cfg = {
        "system": {"single": {"dim": 2}},
        "hamiltonian": {"named": "sigma_x"},
        "initial_state": {"named": "mixed_random"},
        "integrator": {"dt": 0.01, "t_end": 0.5, "record_every": 5},
    }
    cfg.update(extra)
    return cfg


def test_run_ok(tmp_path, capsys):
    cfg = write_config(tmp_path, base_config())
    assert main(["run", cfg, "--out", str(tmp_path), "--seed", "7"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("ok: casimir drift")
    assert "flags none" in out
    csv = (tmp_path / "scenario.csv").read_text()
    assert csv.split("\n")[0] == "t,C1,C2,C3,C4,C5,eig1,eig2,flags"
    payload = json.loads((tmp_path / "scenario.json").read_text())
    assert payload["times"][0] == 0.0


def test_run_energy_observable(tmp_path):
    cfg = write_config(
        tmp_path, base_config(outputs={"observables": ["energy"]})
    )
    assert main(["run", cfg, "--out", str(tmp_path), "--seed", "7"]) == 0
    header = (tmp_path / "scenario.csv").read_text().split("\n")[0]
    assert "energy_sub1" in header.split(",")


def test_run_is_byte_deterministic(tmp_path):
    cfg = write_config(tmp_path, base_config())
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert main(["run", cfg, "--out", str(a), "--seed", "3"]) == 0
    assert main(["run", cfg, "--out", str(b), "--seed", "3"]) == 0
    assert (a / "scenario.csv").read_bytes() == (b / "scenario.csv").read_bytes()
    assert (a / "scenario.json").read_bytes() == (b / "scenario.json").read_bytes()


def test_run_matrix_literal_arity_five(tmp_path, capsys):
    sigma_y = [[[0, 0], [0, -1]], [[0, 1], [0, 0]]]
    cfg = write_config(
        tmp_path,
        base_config(
            hamiltonian=[{"named": "sigma_x"}, {"matrix": sigma_y}],
            bracket={"arity": 5},
            integrator={"dt": 0.01, "t_end": 0.2},
        ),
    )
    assert main(["run", cfg, "--out", str(tmp_path), "--seed", "1"]) == 0
    assert capsys.readouterr().out.startswith("ok:")


def test_run_composite_with_energies(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "system": {"composite": {"dims": [2, 2]}},
            "hamiltonian": [{"named": "sigma_x"}, {"named": "sigma_z"}],
            "initial_state": {"named": "singlet"},
            "integrator": {"dt": 0.02, "t_end": 0.2},
            "outputs": {"observables": ["energy"]},
        },
    )
    assert main(["run", cfg, "--out", str(tmp_path)]) == 0
    header = (tmp_path / "scenario.csv").read_text().split("\n")[0].split(",")
    assert "energy_sub1" in header and "energy_sub2" in header


def test_run_grid_catalog(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        {
            "system": {"single": {"grid": {"n_points": 8, "length": 6.2832}}},
            "hamiltonian": {
                "catalog": {"kind": "abs2", "coefficient": 1.2},
                "linear": {"named": "grid_kinetic_potential"},
            },
            "initial_state": {"named": "pure_random"},
            "integrator": {"dt": 0.005, "t_end": 0.1},
        },
    )
    assert main(["run", cfg, "--out", str(tmp_path), "--seed", "2"]) == 0
    assert capsys.readouterr().out.startswith("ok:")


def test_validate_only_writes_nothing(tmp_path, capsys):
    cfg = write_config(tmp_path, base_config())
    assert main(["run", cfg, "--validate-only", "--out", str(tmp_path)]) == 0
    assert "config valid" in capsys.readouterr().out
    assert not (tmp_path / "scenario.csv").exists()


# -- config rejection -------------------------------------------------------------

def run_expecting_2(tmp_path, capsys, payload):
    cfg = write_config(tmp_path, payload)
    code = main(["run", cfg, "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert code == 2
    assert err.startswith("error:")
    return err


def test_even_arity_rejected(tmp_path, capsys):
    err = run_expecting_2(tmp_path, capsys, base_config(bracket={"arity": 4}))
    assert "even arity 4 rejected" in err


def test_unknown_key_rejected(tmp_path, capsys):
    err = run_expecting_2(tmp_path, capsys, base_config(junk=1))
    assert "junk" in err


def test_system_must_be_single_xor_composite(tmp_path, capsys):
    bad = base_config()
    bad["system"] = {
        "single": {"dim": 2},
        "composite": {"dims": [2, 2]},
    }
    err = run_expecting_2(tmp_path, capsys, bad)
    assert "exactly one" in err


def test_hamiltonian_count_must_match_arity(tmp_path, capsys):
    err = run_expecting_2(tmp_path, capsys, base_config(bracket={"arity": 5}))
    assert "hamiltonian" in err.lower()


def test_catalog_needs_arity_three(tmp_path, capsys):
    payload = {
        "system": {"single": {"grid": {"n_points": 8, "length": 6.2832}}},
        "hamiltonian": {"catalog": {"kind": "abs2"}},
        "initial_state": {"named": "pure_random"},
        "bracket": {"arity": 5},
    }
    run_expecting_2(tmp_path, capsys, payload)


def test_named_state_dim_checked(tmp_path, capsys):
    bad = base_config(initial_state={"named": "singlet"})
    err = run_expecting_2(tmp_path, capsys, bad)
    assert "singlet" in err


def test_sigma_needs_dim_two(tmp_path, capsys):
    bad = base_config()
    bad["system"] = {"single": {"dim": 3}}
    err = run_expecting_2(tmp_path, capsys, bad)
    assert "sigma_x" in err


def test_missing_config_file(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.json")]) == 2
    assert "cannot read config" in capsys.readouterr().err


def test_invalid_json_config(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["run", str(path)]) == 2
    assert "not valid JSON" in capsys.readouterr().err


def test_numeric_blowup_exits_3(tmp_path, capsys):
    cfg = write_config(
        tmp_path,
        base_config(
            entropy={"terms": [{"orders": [3], "coefficient": 0.3333333333333333}]},
            integrator={"dt": 1e6, "t_end": 1e7},
        ),
    )
    with np.errstate(over="ignore", invalid="ignore"):
        code = main(["run", cfg, "--out", str(tmp_path)])
    assert code == 3
    assert "numeric failure" in capsys.readouterr().err


# -- demo and identities subcommands ----------------------------------------------

def test_demo_duality(tmp_path, capsys):
    assert main(["demo", "duality", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("demo duality:")
    payload = json.loads((tmp_path / "demo_duality.json").read_text())
    assert payload["max_defect"] < 1e-11


def test_demo_unknown_name(tmp_path, capsys):
    assert main(["demo", "nope", "--out", str(tmp_path)]) == 2
    assert "error:" in capsys.readouterr().err


def test_demo_out_dir_from_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("NAMBU_DYN_OUT", str(tmp_path))
    assert main(["demo", "tensor_identities"]) == 0
    assert (tmp_path / "demo_tensor_identities.json").exists()


def test_identities_command(capsys):
    assert main(["identities", "--dim", "3"]) == 0
    out = capsys.readouterr().out
    assert "max defect" in out
    assert out.count("dim 3") == 7


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith("nambudyn ")
