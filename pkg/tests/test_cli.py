import csv
import io
import json
import pathlib

import numpy as np
import pytest

from relqm import cli, entangle, prob
from relqm.cli import main

SCENARIOS = pathlib.Path(__file__).resolve().parent.parent / "scenarios"


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_bell_incoherent_probability(capsys):
    code, out, _ = run(capsys, "prob", "--scenario", str(SCENARIOS / "bell.json"), "--mode", "incoherent",
                       "--outcome", "0")
    assert code == 0
    assert out == "quantity,value\np,0.5\n"


def test_bell_coherent_is_refused(capsys):
    code, out, err = run(capsys, "prob", "--scenario", str(SCENARIOS / "bell.json"), "--mode", "coherent",
                         "--outcome", "0")
    assert code == 2
    assert out == ""
    assert err.startswith("EntangledState: entanglement entropy H(R) = 0.693147")


def test_product_entropy(capsys):
    code, out, _ = run(capsys, "entropy", "--scenario", str(SCENARIOS / "product.json"))
    assert code == 0
    assert float(rows(out)[1][1]) < 1e-10


def test_tol_flag_controls_the_gate(capsys):
    path = str(SCENARIOS / "bell.json")
    code, out, _ = run(capsys, "prob", "--scenario", path, "--mode", "coherent", "--outcome", "1", "--tol", "1.0")
    assert code == 0 and rows(out)[1] == ["p", "0.5"]


def test_joint_and_transition_modes(capsys):
    sc = cli.load_scenario(str(SCENARIOS / "product.json"))
    R = cli.relational_of(sc)
    code, out, _ = run(capsys, "prob", "--scenario", str(SCENARIOS / "product.json"), "--mode", "joint",
                       "--outcome", "1", "--app-index", "2")
    assert code == 0 and float(rows(out)[1][1]) == prob.prob_joint(R, 1, 2)
    code, out, _ = run(capsys, "prob", "--scenario", str(SCENARIOS / "product.json"), "--mode", "transition")
    assert code == 0
    assert float(rows(out)[1][1]) == prob.prob_transition(cli.relational_of(sc, "target_matrix"), R)
    code, _, err = run(capsys, "prob", "--scenario", str(SCENARIOS / "bell.json"), "--mode", "transition")
    assert code == 1 and "target_matrix" in err


def test_schmidt_csv_matches_library(capsys):
    sc = cli.load_scenario(str(SCENARIOS / "product.json"))
    sd = entangle.schmidt(cli.relational_of(sc))
    code, out, _ = run(capsys, "schmidt", "--scenario", str(SCENARIOS / "product.json"))
    assert code == 0
    table = rows(out)
    assert table[0] == ["factor", "i", "j", "re", "im"]
    for factor, i, j, re, im in table[1:]:
        i, j = int(i), int(j)
        if factor == "s":
            assert float(re) == sd.singulars[i]
        else:
            z = getattr(sd, factor)[i, j]
            assert (float(re), float(im)) == (z.real, z.imag)


def test_evolve_times_ascending(capsys, tmp_path):
    sc = json.loads((SCENARIOS / "evolution.json").read_text())
    sc["times"] = [1.0, 0.0]
    path = tmp_path / "ev.json"
    path.write_text(json.dumps(sc))
    code, out, _ = run(capsys, "evolve", "--scenario", str(path))
    assert code == 0
    ts = [float(r[0]) for r in rows(out)[1:]]
    assert ts == sorted(ts)


def test_json_round_trip_is_bit_exact(capsys, tmp_path):
    for command, name in (("evolve", "evolution"), ("pathint", "pathint-coupled"), ("schmidt", "bell")):
        first = tmp_path / f"{name}.out.json"
        second = tmp_path / f"{name}.again.json"
        assert main([command, "--scenario", str(SCENARIOS / f"{name}.json"), "--format", "json",
                     "--out", str(first)]) == 0
        assert main([command, "--scenario", str(first), "--format", "json", "--out", str(second)]) == 0
        assert json.loads(first.read_text()) == json.loads(second.read_text())
        csv_a = tmp_path / "a.csv"
        csv_b = tmp_path / "b.csv"
        main([command, "--scenario", str(SCENARIOS / f"{name}.json"), "--out", str(csv_a)])
        main([command, "--scenario", str(first), "--out", str(csv_b)])
        assert csv_a.read_bytes() == csv_b.read_bytes()


def test_hbar_override_is_echoed(capsys, tmp_path):
    out = tmp_path / "o.json"
    assert main(["evolve", "--scenario", str(SCENARIOS / "evolution.json"), "--hbar", "2.0", "--format", "json",
                 "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["hbar"] == 2.0
    assert doc["results"]["steps"][1]["t"] == 0.5
    # hbar = 2 at t = 1 equals hbar = 1 at t = 0.5
    _, ref, _ = run(capsys, "evolve", "--scenario", str(SCENARIOS / "evolution.json"), "--format", "json")
    ref = json.loads(ref)
    halves = {s["t"]: s for s in ref["results"]["steps"]}
    np.testing.assert_allclose(doc["results"]["steps"][2]["matrix"], halves[0.5]["matrix"], atol=1e-14)


@pytest.mark.parametrize(
    "payload,needle",
    [
        ('{"kind": "Matrix", "system_dim": 2}', "field <root>: 'apparatus_dim' is a required property"),
        ('{"kind": "Matrix", "system_dim": 1, "apparatus_dim": 1, "matrix": [[[1.0]]]}', "field matrix/0/0"),
        ('{"kind": "Matrix", "system_dim": 2, "apparatus_dim": 1, "matrix": [[[1, 0]]]}', "field matrix: shape 1x1"),
        ('{"kind": "Bogus"}', "field kind"),
        ('{"kind": "Matrix",\n  "system_dim": }', "line 2, column 17"),
        ('{"kind": "PathIntegral", "lattice": {"x_min": 0, "x_max": 1, "n_points": 4, "n_slices": 1, "dt": 0.1,'
         ' "start_s": 4, "start_a": 0}, "action": {}}', "field lattice/start_s"),
    ],
)
def test_schema_errors_exit_one(capsys, tmp_path, payload, needle):
    path = tmp_path / "bad.json"
    path.write_text(payload)
    code, out, err = run(capsys, "entropy", "--scenario", str(path))
    assert code == 1
    assert out == ""
    assert needle in err


def test_missing_file_and_wrong_kind(capsys, tmp_path):
    code, _, err = run(capsys, "entropy", "--scenario", str(tmp_path / "nope.json"))
    assert code == 1 and "cannot read" in err
    code, _, err = run(capsys, "evolve", "--scenario", str(SCENARIOS / "bell.json"))
    assert code == 1 and "kind" in err
    code, _, err = run(capsys, "prob", "--scenario", str(SCENARIOS / "bell.json"), "--mode", "joint",
                       "--outcome", "0")
    assert code == 1


def test_bad_flag_exits_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["prob", "--scenario", "x.json", "--mode", "sideways"])
    assert exc.value.code == 1


def test_non_hermitian_hamiltonian_is_a_domain_error(capsys, tmp_path):
    sc = json.loads((SCENARIOS / "evolution.json").read_text())
    sc["hamiltonian_s"][0][1] = [0.5, 0.3]
    path = tmp_path / "nh.json"
    path.write_text(json.dumps(sc))
    code, _, err = run(capsys, "evolve", "--scenario", str(path))
    assert code == 2 and "not Hermitian" in err


def test_outcome_out_of_range(capsys):
    code, _, err = run(capsys, "prob", "--scenario", str(SCENARIOS / "bell.json"), "--outcome", "5")
    assert code == 1 and "out of range" in err
