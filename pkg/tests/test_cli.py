import json

import pytest

from rwrange.cli import run
from rwrange.graph_enum import enumerate_balanced


def _lines(capsys):
    return capsys.readouterr().out.strip().splitlines()


def test_enumerate_matches_library(capsys):
    assert run(["enumerate", "--r", "3", "--h", "2,2,2", "--no-timestamp"]) == 0
    lines = _lines(capsys)
    header = json.loads(lines[0])
    assert header["config"]["command"] == "enumerate"
    body = [json.loads(x) for x in lines[1:]]
    assert [b["rows"] for b in body] == [[list(r) for r in F.rows] for F in enumerate_balanced(3, (2, 2, 2))]


def test_charfn_at_zero_without_cache(capsys):
    assert run(["charfn", "--which", "brownian", "--t", "0", "--rmax", "4", "--format", "json"]) == 0
    rec = json.loads(_lines(capsys)[-1])
    assert (rec["re"], rec["im"]) == (1.0, 0.0)


def test_charfn_missing_cache_exit(capsys, tmp_path):
    code = run(["charfn", "--which", "brownian", "--t", "0.5", "--rmax", "4", "--cache-dir", str(tmp_path)])
    assert code == 3
    assert "[3, 4]" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["nonsense"],
    ["enumerate", "--r", "3"],
    ["enumerate", "--r", "x", "--h", "1,1,1"],
    ["charfn", "--rmax", "9"],
    ["moments", "--k", "1", "--n", "100", "--M", "99"],
    ["oracle", "--n", "9", "--exact", "--which", "non-restricted"],
])
def test_usage_errors(argv, capsys):
    assert run(argv) == 2


def test_crosscheck_gf(capsys):
    assert run(["crosscheck", "--suite", "gf", "--Lmax", "10", "--no-timestamp"]) == 0
    out = "\n".join(_lines(capsys))
    assert "FAIL" not in out and "PASS" in out


def _rerun(argv, path):
    outs = []
    for _ in range(2):
        assert run(argv + ["--out", str(path)]) == 0
        outs.append(path.read_bytes())
    return outs


def test_reruns_are_byte_identical(tmp_path):
    argv = ["oracle", "--n", "20", "--samples", "500", "--seed", "5", "--which", "closed", "--no-timestamp"]
    a, b = _rerun(argv, tmp_path / "o.csv")
    assert a == b and a.startswith(b"# config:")


def test_timestamp_line_only_difference(tmp_path):
    a, b = (x.decode().splitlines() for x in _rerun(["weights", "--r", "2", "--h", "2,2"], tmp_path / "w.csv"))
    diff = [i for i, (x, y) in enumerate(zip(a, b)) if x != y]
    assert len(a) == len(b) and len(diff) <= 1
    assert all("timestamp" in a[i] for i in diff)


def test_integral_cache_flow(tmp_path, capsys):
    base = ["--budget", "2000", "--seed", "11", "--cache-dir", str(tmp_path), "--no-timestamp"]
    assert run(["moments", "--which", "closed", "--k", "1,1,1", "--n", "1000", "--M", "3"] + base) == 3
    assert run(["integrals", "--r", "3", "--M", "3"] + base) == 0
    assert list(tmp_path.iterdir())
    capsys.readouterr()
    assert run(["moments", "--which", "closed", "--k", "1,1,1", "--n", "1000", "--M", "3"] + base) == 0
    assert len(_lines(capsys)) > 1


def test_moments_first_order(capsys):
    assert run(["moments", "--which", "unrestricted", "--k", "2", "--n", "1000", "--M", "3", "--no-timestamp"]) == 0
    out = _lines(capsys)
    assert out[0].startswith("# config:")


def test_oracle_exact(capsys):
    assert run(["oracle", "--n", "3", "--exact", "--which", "closed", "--k", "1", "--no-timestamp"]) == 0
    rows = [l for l in _lines(capsys) if not l.startswith("#")]
    assert rows[0] == "n,walks,k,sum,mean"
    assert rows[1].split(",")[:4] == ["3", "400", "1", "1056"]
