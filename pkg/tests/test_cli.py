import json
from fractions import Fraction
from importlib import resources

import jsonschema
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lindep.cli import JobSpec, ParseError, emit_job, main, parse_curve, parse_job, parse_point, run

SCHEMA = json.loads(resources.files("lindep").joinpath("schema/result.schema.json").read_text())


def validate(doc):
    jsonschema.validate(doc, SCHEMA)


def invoke(capsys, argv):
    code = main(argv)
    out = capsys.readouterr()
    doc = json.loads(out.out)
    validate(doc)
    return code, doc, out


def test_parse_curve_forms():
    assert parse_curve("17") == (0, 17)
    assert parse_curve(17) == (0, 17)
    assert parse_curve("-1,0") == (-1, 0)
    assert parse_curve([-1, 0]) == (-1, 0)
    assert parse_curve({"a": -1, "b": 0}) == (-1, 0)
    with pytest.raises(ParseError):
        parse_curve("1/2")
    with pytest.raises(ParseError):
        parse_curve([1, 2, 3])


def test_parse_point_forms():
    assert parse_point("inf", "p") is None
    assert parse_point(["1/4", "-33/8"], "p") == (Fraction(1, 4), Fraction(-33, 8))
    assert parse_point("4,9", "p") == (4, 9)
    with pytest.raises(ParseError, match="zero denominator"):
        parse_point(["3/0", "1"], "p")
    with pytest.raises(ParseError):
        parse_point([1.5, 2], "p")


def test_parse_job_checks_membership():
    job = parse_job({"mode": "ec-detect", "curve": "17", "target": [4, 9], "gens": [[-2, 3], [2, 5]]})
    assert job.curve == (0, 17) and job.target == (4, 9)
    with pytest.raises(ParseError) as info:
        parse_job({"mode": "ec-detect", "curve": "17", "target": [4, 8], "gens": [[-2, 3]]})
    assert info.value.path == "target"
    with pytest.raises(ParseError) as info:
        parse_job({"mode": "ec-detect", "curve": "17", "target": [4, 9], "gens": [[-2, 3], [2, 6]]})
    assert info.value.path == "gens[1]"


def test_parse_job_rejects_unknowns():
    with pytest.raises(ParseError):
        parse_job({"mode": "nope"})
    with pytest.raises(ParseError):
        parse_job({"mode": "torsion", "curve": "17", "config": {"speed": 3}})
    with pytest.raises(ParseError, match="curve"):
        parse_job({"mode": "torsion", "curve": [0, 0]})


JOBS = [
    {"mode": "ec-detect", "curve": [0, 17], "target": ["4", "9"], "gens": [["-2", "3"], ["2", "5"]]},
    {"mode": "ec-detect", "curve": [0, 17], "target": "inf", "gens": [], "config": {"seed": 3}},
    {"mode": "mul-detect", "target": "-8/27", "gens": ["-2/3"]},
    {"mode": "witness", "curve": [0, 17], "points": [["-2", "3"], ["2", "5"]],
     "query": {"I": [1], "J": [2], "l": 2, "M": 2}, "config": {"prime_bound": 500}},
    {"mode": "local-report", "curve": [-1, 0], "points": [["0", "0"]], "prime": 5},
    {"mode": "torsion", "curve": [0, 1]},
]


@pytest.mark.parametrize("doc", JOBS)
def test_job_round_trip(doc):
    job = parse_job(doc)
    assert emit_job(job) == doc
    assert parse_job(emit_job(job)) == job


rationals = st.fractions(max_denominator=50).filter(lambda q: q != 0)


@settings(max_examples=50, deadline=None)
@given(rationals, st.lists(rationals, max_size=4), st.integers(0, 2**31))
def test_mul_job_round_trip(x, gens, seed):
    job = JobSpec("mul-detect", target=x, gens=tuple(gens), config={"seed": seed})
    assert parse_job(emit_job(job)) == job


@pytest.mark.parametrize("doc", JOBS)
def test_run_documents_validate(doc):
    code, out = run(parse_job(doc))
    assert code == 0
    validate(out)


def test_ec_detect_cli(capsys):
    code, doc, out = invoke(capsys, ["ec-detect", "--curve", "17", "--target", "4,9", "--gen=-2,3", "--gen", "2,5"])
    assert code == 0
    assert doc["verdict"] == "dependent" and doc["coefficients"] == [1, -1]
    assert "dependent" in out.err


def test_independent_cli(capsys):
    code, doc, _ = invoke(capsys, ["ec-detect", "--curve", "17", "--target", "2,5", "--gen=-2,3", "--json-only"])
    assert code == 0 and doc["verdict"] == "independent"
    assert doc["witness_prime"] == doc["local_detail"]["prime"]


def test_bad_input_exit_code(capsys):
    code, doc, _ = invoke(capsys, ["ec-detect", "--curve", "17", "--target", "4,8", "--gen=-2,3"])
    assert code == 2 and doc["error"]["kind"] == "parse"
    code, doc, _ = invoke(capsys, ["mul-detect", "--target", "3/0", "--gen", "2"])
    assert code == 2
    code, doc, _ = invoke(capsys, ["mul-detect", "--target", "2", "--gen=-1"])
    assert code == 2 and doc["error"]["kind"] == "input"
    code, doc, _ = invoke(capsys, ["ec-detect", "--curve", "17", "--target", "4,9", "--prime-bound", "0"])
    assert code == 2


def test_run_from_file(tmp_path, capsys):
    path = tmp_path / "job.json"
    path.write_text(json.dumps(JOBS[2]))
    code, doc, _ = invoke(capsys, ["run", str(path)])
    assert code == 0 and doc["coefficients"] == [3]
    code, doc, _ = invoke(capsys, ["run", str(tmp_path / "missing.json")])
    assert code == 2


def test_flags_override_job_config(tmp_path, capsys):
    path = tmp_path / "job.json"
    path.write_text(json.dumps(JOBS[1]))
    _, doc, _ = invoke(capsys, ["ec-detect", "--job", str(path), "--seed", "9"])
    assert doc["seed"] == 9


def test_witness_and_torsion_cli(capsys):
    code, doc, _ = invoke(capsys, ["witness", "--curve", "17", "--point=-2,3", "--point", "2,5",
                                   "-I", "1", "-J", "2", "-l", "2", "-M", "2", "--prime-bound", "2000"])
    assert code == 0 and doc["matched"] == len(doc["matches"]) >= 1
    code, doc, _ = invoke(capsys, ["torsion", "--curve", "0,1"])
    assert doc["order"] == 6
    code, doc, _ = invoke(capsys, ["local-report", "--curve=-1,0", "--point", "0,0", "--prime", "7"])
    assert doc["report"]["status"] == "ok"


def test_same_seed_byte_identical(capsys):
    argv = ["ec-detect", "--curve", "17", "--target", "52,375", "--gen=-2,3", "--gen", "2,5", "--seed", "4"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)
    assert capsys.readouterr().out == first


def test_timing_only_on_request(capsys):
    _, doc, _ = invoke(capsys, ["torsion", "--curve", "17", "--timing"])
    assert doc["timing"]["seconds"] >= 0
    _, doc, _ = invoke(capsys, ["torsion", "--curve", "17"])
    assert doc["timing"] is None
