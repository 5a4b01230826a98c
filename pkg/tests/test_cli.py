import json

import pytest

from heckepairs.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_pair_verify_default_passes(capsys):
    code, out, _ = run(capsys, "pair", "verify")
    assert code == 0
    assert "0 fail" in out


def test_pair_verify_heisenberg(capsys, tmp_path):
    cfg = tmp_path / "heis.json"
    cfg.write_text(json.dumps({"family": "heisenberg"}))
    code, out, _ = run(capsys, "pair", "verify", "--config", str(cfg))
    assert code == 0
    assert "0 fail, 0 inconclusive" in out


def test_pair_verify_quad_torus(capsys, tmp_path):
    cfg = tmp_path / "quad.json"
    cfg.write_text(json.dumps({"family": "planar", "Q_kind": "quad_torus",
                               "d": 2}))
    code, out, _ = run(capsys, "pair", "verify", "--config", str(cfg))
    assert code == 0


def test_malformed_config_exits_2(capsys, tmp_path):
    cfg = tmp_path / "broken.json"
    cfg.write_text("{not json")
    code, _, err = run(capsys, "pair", "verify", "--config", str(cfg))
    assert code == 2
    assert "not valid JSON" in err


def test_bad_family_config_exits_2(capsys, tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text(json.dumps({"family": "nope"}))
    code, _, err = run(capsys, "pair", "verify", "--config", str(cfg))
    assert code == 2


def test_config_dir_env(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "pair.json"
    cfg.write_text(json.dumps({"family": "heisenberg"}))
    monkeypatch.setenv("HECKEPAIRS_CONFIG_DIR", str(tmp_path))
    code, _, _ = run(capsys, "dcoset", "--config", "pair.json",
                     "--element", "1/2")
    assert code == 0


def test_report_bytes_deterministic(capsys, tmp_path):
    out1, out2 = tmp_path / "r1.jsonl", tmp_path / "r2.jsonl"
    assert main(["pair", "verify", "--seed", "7", "--out", str(out1)]) == 0
    capsys.readouterr()
    assert main(["pair", "verify", "--seed", "7", "--out", str(out2)]) == 0
    capsys.readouterr()
    assert out1.read_bytes() == out2.read_bytes()


def test_dcoset_identity(capsys):
    code, out, _ = run(capsys, "dcoset", "--element", "(0,0)")
    assert code == 0
    record = json.loads(out.splitlines()[1])
    assert record["outputs"]["L"] == 1
    assert record["outputs"]["delta"] == "1"


def test_dcoset_diag2(capsys):
    code, out, _ = run(capsys, "dcoset", "--element", "[[2,0],[0,1]]")
    assert code == 0
    record = json.loads(out.splitlines()[1])
    assert record["outputs"]["L"] == 6
    assert record["outputs"]["L_inverse"] == 3
    assert record["outputs"]["delta"] == "2"
    assert len(record["outputs"]["left_reps"]) == 6


def test_dcoset_pure_translation(capsys):
    code, out, _ = run(capsys, "dcoset", "--element", "(1/2,0)")
    assert code == 0
    record = json.loads(out.splitlines()[1])
    assert record["outputs"]["L"] == 3


def test_dcoset_bound_inconclusive(capsys):
    code, out, _ = run(capsys, "dcoset", "--element", "[[4,0],[0,1]]",
                       "--bound-cosets", "3")
    assert code == 3


def test_dcoset_bad_element(capsys):
    code, _, err = run(capsys, "dcoset", "--element", "garbage")
    assert code == 2


def test_hecke_mul_unit(capsys, tmp_path):
    unit = {"terms": [{"rep": {"n": ["0", "0"], "q": [["1", "0"], ["0", "1"]]},
                       "coeff": "1"}]}
    f = {"terms": [{"rep": {"n": ["0", "0"], "q": [["2", "0"], ["0", "1"]]},
                    "coeff": "1"}]}
    fp, gp = tmp_path / "f.json", tmp_path / "g.json"
    fp.write_text(json.dumps(f))
    gp.write_text(json.dumps(unit))
    code, out, _ = run(capsys, "hecke", "mul", "--f", str(fp), "--g", str(gp))
    assert code == 0
    records = [json.loads(line) for line in out.splitlines()[1:-2]]
    by_name = {r["name"]: r for r in records}
    prod = by_name["hecke.product"]["outputs"]["f*g"]
    assert prod == by_name["hecke.product"]["inputs"]["f"]
    assert by_name["hecke.assoc"]["outputs"]["equal"] is True


def test_hecke_mul_self(capsys, tmp_path):
    f = {"terms": [{"rep": {"n": ["0", "0"], "q": [["2", "0"], ["0", "1"]]},
                    "coeff": "1"}]}
    fp = tmp_path / "f.json"
    fp.write_text(json.dumps(f))
    code, out, _ = run(capsys, "hecke", "mul", "--f", str(fp), "--g", str(fp))
    assert code == 0
    records = [json.loads(line) for line in out.splitlines()[1:-2]]
    by_name = {r["name"]: r for r in records}
    assert len(by_name["hecke.product"]["outputs"]["f*g"]["terms"]) >= 2


def test_tower_empty_seed(capsys):
    code, out, _ = run(capsys, "tower", "build")
    assert code == 0
    records = [json.loads(line) for line in out.splitlines()[1:-2]]
    assert len(records) == 1
    assert records[0]["outputs"]["order"] == 1


def test_tower_two_stages(capsys):
    code, out, _ = run(capsys, "tower", "build", "--seed",
                       "[[2,0],[0,1]];[[4,0],[0,1]]")
    assert code == 0
    records = [json.loads(line) for line in out.splitlines()[1:-2]]
    by_name = {r["name"]: r for r in records}
    for name, rec in by_name.items():
        if name.startswith("tower.stage_"):
            o = rec["outputs"]
            assert o["order"] == o["m_index"] * o["r_index"]
    assert by_name["tower.connect_2_1"]["outputs"]["surjective"] is True
    assert by_name["tower.triangle_2_0"]["outputs"]["commutes"] is True


def test_tower_rejects_heisenberg_config(capsys, tmp_path):
    cfg = tmp_path / "heis.json"
    cfg.write_text(json.dumps({"family": "heisenberg"}))
    code, _, err = run(capsys, "tower", "build", "--config", str(cfg),
                       "--seed", "[[2,0],[0,1]]")
    assert code == 1


def test_gl2_decompose_examples(capsys):
    code, out, _ = run(capsys, "gl2", "decompose", "--p", "2",
                       "--matrix", "[[1,1/2],[0,1]]")
    assert code == 0
    record = json.loads(out.splitlines()[1])
    assert record["outputs"]["t"] == "[[1/2,0],[1,2]]"
    assert record["outputs"]["k"] == "[[2,1],[-1,0]]"


def test_gl2_decompose_global(capsys):
    code, out, _ = run(capsys, "gl2", "decompose",
                       "--matrix", "[[1,1/6],[0,1]]")
    assert code == 0


def test_gl2_decompose_rejects_bad_det(capsys):
    code, out, _ = run(capsys, "gl2", "decompose", "--p", "2",
                       "--matrix", "[[3,0],[0,1]]")
    assert code == 1


def test_quad_units_cli(capsys):
    code, out, _ = run(capsys, "quad", "units", "--d", "2", "--mod", "17")
    assert code == 0
    record = json.loads(out.splitlines()[1])
    assert record["outputs"]["proper"] is True
    assert record["outputs"]["full_size"] == 256
    assert record["outputs"]["image_size"] == 16


def test_heis_orbit_cli(capsys):
    code, out, _ = run(capsys, "heis", "orbit", "--mod", "6", "--z", "2",
                       "--w", "1")
    assert code == 0
    record = json.loads(out.splitlines()[1])
    assert record["outputs"]["orbit"] == [[2, 1], [2, 3], [2, 5]]


def test_usage_error_exit_2(capsys):
    assert main(["bogus"]) == 2
