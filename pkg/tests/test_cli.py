import json

import numpy as np
import pytest

from enscomp import bounds, cli, reference
from enscomp.errors import EnsembleParseError, ValidationError


def write_ensemble(tmp_path, e, name="ens.json"):
    path = tmp_path / name
    cli.save_ensemble(e, str(path))
    return str(path)


def test_load_ensemble_roundtrip(tmp_path):
    path = write_ensemble(tmp_path, reference.zero_plus_pair())
    e = cli.load_ensemble(path)
    assert len(e) == 2
    assert e.dim == 2
    assert abs(e.probs.sum() - 1.0) < 1e-12


def test_load_ensemble_bad_probability_sum(tmp_path):
    path = tmp_path / "bad.json"
    payload = {
        "probs": [0.5, 0.4],
        "factor_dims": [2],
        "states": [
            [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
            [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
        ],
    }
    path.write_text(json.dumps(payload))
    with pytest.raises(ValidationError, match="probability sum"):
        cli.load_ensemble(str(path))


def test_load_ensemble_names_bad_state(tmp_path):
    path = tmp_path / "bad.json"
    payload = {
        "probs": [0.5, 0.5],
        "factor_dims": [2],
        "states": [
            [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
            [[[0.5, 0.0], [0.5, 0.0]], [[0.0, 0.0], [0.5, 0.0]]],  # not Hermitian
        ],
    }
    path.write_text(json.dumps(payload))
    with pytest.raises(ValidationError, match="state 1"):
        cli.load_ensemble(str(path))


def test_load_ensemble_parse_error(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    with pytest.raises(EnsembleParseError):
        cli.load_ensemble(str(path))
    with pytest.raises(EnsembleParseError):
        cli.load_ensemble(str(tmp_path / "missing.json"))


def test_analyze_values(tmp_path, capsys):
    path = write_ensemble(tmp_path, reference.orthogonal_pair())
    assert cli.main(["analyze", path, "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    rows = {(r[0], r[1]): r[2] for r in doc["rows"]}
    assert abs(rows[("ensemble_entropy", "")] - 2.0) < 1e-9
    assert abs(rows[("holevo_quantity", "")] - 1.0) < 1e-9
    assert rows[("state_support_dim", 0)] == 2


def test_analyze_csv_shape(tmp_path, capsys):
    path = write_ensemble(tmp_path, reference.biased_qubit())
    assert cli.main(["analyze", path]) == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    header_idx = next(i for i, l in enumerate(lines) if not l.startswith("#"))
    assert lines[header_idx] == "quantity,index,value"
    assert any(l.startswith("# seed=") for l in lines[:header_idx])
    assert any(l.startswith("# tool=enscomp") for l in lines[:header_idx])


def test_minimize_and_simulate_ep_pipeline(tmp_path, capsys):
    path = write_ensemble(tmp_path, reference.orthogonal_pair())
    out = tmp_path / "minimize.csv"
    code = cli.main([
        "minimize", path, "--ancilla-dim", "2", "--purifier-dim", "2",
        "--multistarts", "4", "--max-iters", "300", "--seed", "7",
        "--out", str(out),
    ])
    assert code == 0
    sidecar = tmp_path / "minimize.csv.assignment.json"
    assert sidecar.exists()
    best = json.loads(sidecar.read_text())["best_entropy"]
    assert abs(best - 1.0) < 1e-3

    code = cli.main([
        "simulate-ep", path, "--k", "3", "--eps", "0.05",
        "--assignment", str(sidecar),
        "--seed", "7", "--format", "json",
    ])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    row = doc["rows"][0]
    assert row[2] <= 1.2  # rate
    assert row[3] >= 0.95  # fidelity


def test_simulate_assignment_file_roundtrip(tmp_path):
    from enscomp import extopt
    e = reference.orthogonal_pair()
    asn = extopt.trivial_assignment(e, 2, 2)
    payload = cli.assignment_to_payload(asn)
    back = cli.assignment_from_payload(payload)
    assert back.ancilla_dim == 2 and back.purifier_dim == 2
    for p, q in zip(asn.params, back.params):
        assert np.array_equal(p, q)


def test_simulate_js_byte_identical(tmp_path):
    path = write_ensemble(tmp_path, reference.zero_plus_pair())
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        code = cli.main([
            "simulate-js", path, "--n", "6", "--dim-cap", "14",
            "--sampling", "mc", "--samples", "60", "--seed", "3",
            "--out", str(out),
        ])
        assert code == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert (tmp_path / "a.csv.meta.json").exists()


def test_sweep_rows(tmp_path, capsys):
    path = write_ensemble(tmp_path, reference.zero_plus_pair())
    code = cli.main([
        "sweep", path, "--protocol", "js", "--values", "2,4",
        "--eps", "0.1", "--seed", "1",
    ])
    assert code == 0
    lines = [
        l for l in capsys.readouterr().out.strip().splitlines()
        if not l.startswith("#")
    ]
    assert lines[0] == "n,channel_dim,rate,avg_fidelity,stderr,seed"
    assert len(lines) == 3
    assert lines[1].split(",")[0] == "2"
    assert lines[2].split(",")[0] == "4"


def test_exit_codes(tmp_path, capsys, monkeypatch):
    # usage error -> 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["analyze"])
    assert exc.value.code == 1
    # parse error -> 1
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert cli.main(["analyze", str(bad)]) == 1
    # validation error -> 2
    payload = {
        "probs": [0.7, 0.2],
        "factor_dims": [2],
        "states": [
            [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
            [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]],
        ],
    }
    bad2 = tmp_path / "bad2.json"
    bad2.write_text(json.dumps(payload))
    assert cli.main(["analyze", str(bad2)]) == 2
    # resource guard -> 4
    path = write_ensemble(tmp_path, reference.orthogonal_pair())
    assert cli.main(["simulate-js", path, "--n", "9", "--eps", "0.1"]) == 4
    # bound violation -> 3 (forced through a monkeypatched report)
    violated = bounds.BoundReport("forced", lhs=1.0, rhs=0.0, satisfied=False, slack=-1.0)
    monkeypatch.setattr(cli, "_simulate_reports", lambda e, res: [violated])
    assert cli.main(["simulate-js", path, "--n", "2", "--eps", "0.1"]) == 3
    capsys.readouterr()


def test_high_fidelity_run_emits_satisfied_holevo_report(tmp_path, capsys):
    path = write_ensemble(tmp_path, reference.zero_plus_pair())
    code = cli.main([
        "simulate-js", path, "--n", "6", "--eps", "0.002",
        "--sampling", "exact", "--format", "json",
    ])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["rows"][0][3] >= 0.99
    assert len(doc["bounds"]) == 1
    assert doc["bounds"][0]["satisfied"] is True
