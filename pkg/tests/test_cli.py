import json

import pytest

from ucpoly import cli

K1 = {"T": 4, "L": 2, "ell": 2, "Cmin": 1, "Cmax": 3, "Vbar": 2, "V": 2}
GEN = {"T": 4, "L": 1, "ell": 1, "Cmin": 1, "Cmax": 3, "Vbar": "3/2", "V": 1}


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_check_instance_rejects_bad_ordering(tmp_path, capsys):
    bad = write(tmp_path, "bad.json", {**GEN, "Cmin": 3, "Cmax": 5, "Vbar": 2})
    code, _, err = run(capsys, "check-instance", bad)
    assert code == 2 and "Cmin < Vbar" in err


def test_check_instance_reports_regime(tmp_path, capsys):
    code, out, _ = run(capsys, "check-instance", write(tmp_path, "g.json", GEN), "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["regime"] == "SUBHULL" and doc["grid"][:3] == [0, 1, "3/2"]


def test_unreadable_inputs(tmp_path, capsys):
    assert run(capsys, "check-instance", str(tmp_path / "missing.json"))[0] == 2
    (tmp_path / "junk.json").write_text("{")
    assert run(capsys, "check-instance", str(tmp_path / "junk.json"))[0] == 2
    inst = write(tmp_path, "k1.json", K1)
    code, _, err = run(capsys, "verify-hull", inst, "--which", "q-k1", "--exclude", "F99")
    assert code == 2 and "unknown family" in err


def test_verify_hull_json(tmp_path, capsys):
    code, out, _ = run(capsys, "verify-hull", write(tmp_path, "k1.json", K1), "--which", "q-k1",
                       "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["status"] == "confirmed" and doc["counts"]["vertices"] == 53


def test_verify_hull_negative_control_exits_1(tmp_path, capsys):
    code, out, _ = run(capsys, "verify-hull", write(tmp_path, "k1.json", K1), "--which", "q-k1",
                       "--exclude", "F2")
    assert code == 1 and out.startswith("refuted")


def test_facets_exit_codes(tmp_path, capsys):
    g = write(tmp_path, "g.json", GEN)
    code, out, _ = run(capsys, "facets", g, "--family", "F9")
    assert code == 0 and len(out.splitlines()) == 3
    # the F2 members are not facets of P^U (they are not even valid there)
    code, _, _ = run(capsys, "facets", write(tmp_path, "k1.json", K1), "--family", "F2",
                     "--variant", "up")
    assert code == 1


def test_generate_member_and_hull(tmp_path, capsys):
    k1 = write(tmp_path, "k1.json", K1)
    code, out, _ = run(capsys, "generate", k1, "--family", "F2", "--t", "4")
    assert code == 0 and out.startswith("F2[t=4]")
    code, out, _ = run(capsys, "generate", k1, "--hull", "q-k1", "--format", "json")
    rows = json.loads(out)
    assert sum(r["tag"].startswith("F2") for r in rows) == 4
    code, _, err = run(capsys, "generate", write(tmp_path, "g.json", GEN), "--family", "F2", "--t", "1")
    assert code == 2


def test_enumerate_feeds_separate(tmp_path, capsys):
    g = write(tmp_path, "g.json", GEN)
    code, out, _ = run(capsys, "enumerate", g, "--variant", "up", "--format", "json")
    pts = json.loads(out)
    assert code == 0 and len(pts) == 97
    for k in (0, 40, 96):
        pt = write(tmp_path, f"p{k}.json", pts[k])
        code, out, _ = run(capsys, "separate", g, "--point", pt, "--variant", "up")
        assert code == 0 and out.strip() == "no violated member"


def test_separate_finds_violation(tmp_path, capsys):
    pt = write(tmp_path, "p.json", {"x": [4, 3, 3, 3], "y": [1, 1, 1, 1], "u": [0, 0, 0]})
    code, out, _ = run(capsys, "separate", write(tmp_path, "k1.json", K1), "--point", pt,
                       "--format", "json")
    res = json.loads(out)
    assert code == 1 and [r["tag"] for r in res] == ["F2[t=1]"] and res[0]["violation"] == 1


def test_cutloop(tmp_path, capsys):
    k1 = write(tmp_path, "k1.json", K1)
    obj = write(tmp_path, "obj.json", {"x1": 1, "x2": 1, "y1": -1})
    code, out, _ = run(capsys, "cutloop", k1, "--objective", obj, "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["gap"] == 0
    bad = write(tmp_path, "bad.json", {"z9": 1})
    assert run(capsys, "cutloop", k1, "--objective", bad)[0] == 2


def test_json_output_is_byte_identical(tmp_path, capsys):
    g = write(tmp_path, "g.json", GEN)
    argv = ("verify-hull", g, "--which", "q-up", "--objectives", "20", "--format", "json")
    first = run(capsys, *argv)
    assert first == run(capsys, *argv)


def test_report_empty_suite(tmp_path, capsys):
    code, out, _ = run(capsys, "report", write(tmp_path, "s.json", {"entries": []}),
                       "--format", "json")
    assert code == 0 and json.loads(out)["summary"] == {"confirmed": 0, "refuted": 0, "skipped": 0}


def test_report_one_negative_control(tmp_path, capsys):
    write(tmp_path, "k1.json", K1)
    suite = {"entries": [{"instance": "k1.json", "claims": ["hull:q-k1", "hull:q-k1:minus=F2"]},
                         {"instance": GEN, "claims": ["grid:up"]}]}
    code, out, _ = run(capsys, "report", write(tmp_path, "s.json", suite), "--format", "json")
    doc = json.loads(out)
    assert code == 1 and not doc["ok"]
    refuted = [e for e in doc["results"] if any(r["status"] == "refuted" for r in e["reports"])]
    assert [e["claim"] for e in refuted] == ["hull:q-k1:minus=F2"]
    assert doc["summary"] == {"confirmed": 2, "refuted": 1, "skipped": 0}


def test_report_missing_instance(tmp_path, capsys):
    suite = write(tmp_path, "s.json", {"entries": [{"instance": "nope.json", "claims": ["base"]}]})
    assert run(capsys, "report", suite)[0] == 2


def test_literal_readings_flag(tmp_path, capsys):
    i = write(tmp_path, "i.json", {"T": 3, "L": 2, "ell": 1, "Cmin": 1, "Cmax": 3, "Vbar": "3/2", "V": 1})
    _, repaired, _ = run(capsys, "generate", i, "--family", "F10", "--t", "1", "--m", "1")
    _, literal, _ = run(capsys, "generate", i, "--family", "F10", "--t", "1", "--m", "1",
                        "--literal-readings")
    assert repaired != literal
    assert run(capsys, "generate", i, "--reading", "nonsense")[0] == 2


def test_unknown_subcommand():
    with pytest.raises(SystemExit):
        cli.main(["frobnicate"])
