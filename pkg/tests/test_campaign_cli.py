import json

import pytest

from ascentlab.campaign import (
    ExperimentSpec,
    InputError,
    dump_records,
    exit_code,
    parse_seeds,
    run_experiment,
)
from ascentlab.cli import main
from ascentlab.generators import gen_star
from ascentlab.vcsp import parse_instance, write_instance


def star_spec(**kw):
    data = {
        "instances": [{"generator": "star", "n": n} for n in (2, 6, 10)],
        "policies": ["ordered"],
        "order": "desc-index",
    }
    data.update(kw)
    return ExperimentSpec.from_dict(data)


def test_star_campaign_lengths():
    records, summary = run_experiment(star_spec())
    assert [r["length"] for r in records] == [13, 61, 141]
    assert all(r["verified"] and r["bounds"] is None for r in records)
    assert exit_code(summary) == 0


def test_parse_seeds():
    assert parse_seeds("3..5") == [3, 4, 5]
    assert parse_seeds(7) == [7]
    assert parse_seeds([1, 2]) == [1, 2]
    with pytest.raises(InputError):
        parse_seeds("5..3")


@pytest.mark.parametrize("bad", [
    {"policies": ["x"]},
    {"decomposition": "magic"},
    {"colour": "red"},
])
def test_spec_validation(bad):
    with pytest.raises(InputError):
        star_spec(**bad)


def random_spec():
    return ExperimentSpec.from_dict({
        "instances": [{"generator": "random", "n": 8, "v": 3, "p": 0.4, "w": 6, "seed": "0..3"}],
        "policies": ["ordered", "step-steepest-ordered", "random"],
        "seeds": "0..2",
        "decomposition": "dfs",
        "start": "random",
    })


def test_rerun_byte_identical_and_thread_independent():
    a = dump_records(*run_experiment(random_spec(), threads=1))
    b = dump_records(*run_experiment(random_spec(), threads=1))
    c = dump_records(*run_experiment(random_spec(), threads=4))
    assert a == b == c
    lines = a.splitlines()
    assert len(lines) == 4 * 3 * 3 + 1
    summary = json.loads(lines[-1])
    assert summary["summary"] and summary["bound_violations"] == 0
    recs = [json.loads(x) for x in lines[:-1]]
    for r in recs:
        assert (r["bounds"] is not None) == (r["policy"] != "random")
        assert "wall_time" not in r


def test_record_timing_optional():
    spec = star_spec(record_timing=True)
    records, _ = run_experiment(spec)
    assert all("wall_time" in r for r in records)


def test_budget_overrun_counts_as_violation():
    spec = ExperimentSpec.from_dict({
        "instances": [{"generator": "star", "n": 4}],
        "policies": ["ordered"],
        "max_steps": 3,
    })
    records, summary = run_experiment(spec)
    assert records[0]["bounds"] == "violated" and records[0]["error"]
    assert exit_code(summary) == 1


def test_missing_instance_file(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    out = tmp_path / "out.jsonl"
    spec.write_text(json.dumps({"instances": [{"path": str(tmp_path / "nope.vcsp")}]}))
    assert main(["campaign", "--spec", str(spec), "--output", str(out)]) == 2
    assert not out.exists()
    assert capsys.readouterr().out == ""


def test_missing_spec_file(tmp_path):
    assert main(["campaign", "--spec", str(tmp_path / "none.json")]) == 2


def test_campaign_cli_with_series(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"instances": [{"generator": "star", "n": 2}], "order": "desc-index"}))
    out = tmp_path / "out.jsonl"
    series = tmp_path / "series"
    assert main(["campaign", "--spec", str(spec), "--output", str(out), "--emit-series", str(series)]) == 0
    rec = json.loads(out.read_text().splitlines()[0])
    assert rec["length"] == 13
    (csv,) = series.iterdir()
    rows = csv.read_text().splitlines()
    assert rows[0] == "step,var,old,new,fitness" and len(rows) == 15


def test_generate_and_parse(tmp_path, capsys):
    assert main(["generate", "star", "--n", "3"]) == 0
    text = capsys.readouterr().out
    assert parse_instance(text).domains == gen_star(3).domains
    path = tmp_path / "r.vcsp"
    assert main(["generate", "recursive", "--n", "2", "--d", "2", "--output", str(path)]) == 0
    assert "w=" in path.read_text().splitlines()[0] or any("w" in l for l in path.read_text().splitlines() if l.startswith("#"))
    assert main(["generate", "snake-blocks", "--blocks", "2", "--d", "2"]) == 0
    assert main(["generate", "random", "--n", "5", "--seed", "1"]) == 0


@pytest.fixture
def star_file(tmp_path):
    p = tmp_path / "star.vcsp"
    p.write_text(write_instance(gen_star(10)))
    return p


def test_ascend_and_verify(tmp_path, star_file, capsys):
    series = tmp_path / "trace.csv"
    rc = main(["ascend", "--input", str(star_file), "--policy", "ordered", "--order", "desc-index",
               "--emit-series", str(series)])
    assert rc == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["length"] == 141 and rec["verified"]
    assert main(["verify", "--input", str(star_file), "--trace", str(series), "--order", "desc-index"]) == 0
    assert "ascent: pass" in capsys.readouterr().out
    # the same trace is not ordered by the decomposition
    assert main(["verify", "--input", str(star_file), "--trace", str(series), "--order", "tdd", "--exact-td"]) == 1


def test_ascend_tdd_reports_bounds(star_file, capsys):
    assert main(["ascend", "--input", str(star_file), "--policy", "step-steepest-ordered",
                 "--seeds", "0..2", "--start", "random", "--exact-td"]) == 0
    recs = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert [r["seed"] for r in recs] == [0, 1, 2]
    assert all(r["bounds"] == "ok" and r["treedepth"] == 1 for r in recs)


def test_ascend_budget_exit(star_file, capsys):
    assert main(["ascend", "--input", str(star_file), "--max-steps", "2"]) == 1


def test_decompose(star_file, capsys):
    assert main(["decompose", "--input", str(star_file), "--exact-td"]) == 0
    # 21 vertices is over the exact cap, so the heuristic takes over and says so
    out = capsys.readouterr().out
    assert out.splitlines()[:2] == ["# mode dfs", "TDD 1"]


def test_smooth_cli(tmp_path, star_file, capsys):
    out = tmp_path / "s.vcsp"
    assert main(["smooth", "--input", str(star_file), "--var", "21", "--output", str(out)]) == 0
    assert 21 not in parse_instance(out.read_text()).domains
    assert main(["smooth", "--input", str(star_file), "--var", "99"]) == 2


def test_enumerate_cli(tmp_path, capsys):
    p = tmp_path / "s.vcsp"
    p.write_text(write_instance(gen_star(2)))
    assert main(["enumerate", "--input", str(p)]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert rec["min_length"] <= 13 <= rec["max_length"]


def test_bad_instance_file(tmp_path, capsys):
    p = tmp_path / "bad.vcsp"
    p.write_text("VCSP 1\nVAR 1 2\nCON 1 2\nVAL 0 1\n")
    assert main(["ascend", "--input", str(p)]) == 2
    assert "line" in capsys.readouterr().err
