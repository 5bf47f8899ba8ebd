import json
import subprocess
import sys

import numpy as np
import pytest

from wavesyn.cli import EXIT_GUARD, EXIT_INVALID, EXIT_OK, EXIT_PARSE, run


@pytest.fixture
def files(tmp_path):
    def write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    return write


def _run(capsys, *argv):
    code = run(list(argv))
    out = capsys.readouterr()
    doc = json.loads(out.out) if code == EXIT_OK and out.out else None
    return code, doc, out.err


def test_transform(capsys, files):
    code, doc, _ = _run(capsys, "transform", "--input", files("x.txt", "1,2,3,7"))
    assert code == EXIT_OK
    assert doc["coefficients"] == [3.25, -1.75, -0.5, -2.0]
    assert list(doc) == ["params", "coefficients"]


def test_transform_constant_and_one_per_line(capsys, files):
    _, doc, _ = _run(capsys, "transform", "--input", files("x.txt", "5\n5\n5\n5\n"))
    assert doc["coefficients"] == [5.0, 0.0, 0.0, 0.0]


def test_transform_bad_length(capsys, files):
    code, _, err = _run(capsys, "transform", "--input", files("x.txt", "1,2,3"))
    assert code == EXIT_INVALID and "power of two" in err


def test_parse_errors(capsys, files):
    assert _run(capsys, "transform", "--input", files("x.txt", "1,two,3,4"))[0] == EXIT_PARSE
    assert _run(capsys, "transform", "--input", "/nonexistent/file")[0] == EXIT_PARSE
    assert _run(capsys, "extended", "--input", files("m.txt", "1 2\n3\n"))[0] == EXIT_PARSE
    with pytest.raises(SystemExit) as exc:
        run(["synopsis", "--budget", "many"])
    assert exc.value.code == EXIT_PARSE


def test_validation_errors(capsys, files):
    x = files("x.txt", "1,2,3,7")
    assert _run(capsys, "synopsis", "--input", x, "--budget", "-1")[0] == EXIT_INVALID
    assert _run(capsys, "synopsis", "--input", x, "--metric", "l0")[0] == EXIT_INVALID
    assert _run(capsys, "synopsis", "--input", x, "--mode", "unrestricted", "--epsilon", "0")[0] == EXIT_INVALID
    w = files("w.txt", "1,1,-1,1")
    assert _run(capsys, "synopsis", "--input", x, "--weights", w)[0] == EXIT_INVALID
    assert _run(capsys, "histogram", "--input", x, "--budget", "0")[0] == EXIT_INVALID


def test_grid_guard(capsys, files):
    x = files("x.txt", ",".join(str(i) for i in range(1, 65)))
    code, _, err = _run(
        capsys, "synopsis", "--input", x, "--mode", "unrestricted", "--metric", "l1", "--epsilon", "0.01"
    )
    assert code == EXIT_GUARD and "epsilon" in err


def test_weighted_restricted_synopsis(capsys, files):
    x, w = files("x.txt", "1,2,3,7"), files("w.txt", "0.5,0.5,1.5,1.5")
    code, doc, _ = _run(capsys, "synopsis", "--input", x, "--weights", w, "--budget", "1", "--stats")
    assert code == EXIT_OK
    assert list(doc) == ["params", "picks", "error", "stats"]
    assert doc["error"]["objective"] == pytest.approx(5.78, abs=0.01)
    assert doc["error"]["metric"] == "l2"
    assert set(doc["stats"]["solve"]) == {"node_visits", "minplus_ops", "peak_live_entries"}


def test_unrestricted_synopsis(capsys, files):
    x = files("x.txt", "1,2,3,7")
    code, doc, _ = _run(
        capsys, "synopsis", "--input", x, "--mode", "unrestricted", "--metric", "l1", "-B", "1", "--epsilon", "0.1"
    )
    assert code == EXIT_OK
    assert doc["error"]["objective"] <= 7.7
    assert doc["params"]["epsilon"] == 0.1


def test_zero_budget_synopsis(capsys, files):
    code, doc, _ = _run(capsys, "synopsis", "--input", files("x.txt", "1,2,3,7"), "--budget", "0")
    assert doc["picks"] == []
    assert doc["error"]["objective"] == pytest.approx(np.sqrt(63))


def test_evaluate_examples(capsys, files):
    x, w = files("x.txt", "1,2,3,7"), files("w.txt", "0.5,0.5,1.5,1.5")
    syn = files("s.json", json.dumps({"picks": [[0, 4.65]]}))
    _, doc, _ = _run(capsys, "evaluate", "--input", x, "--weights", w, "--synopsis", syn)
    assert doc["error"]["l2"] == pytest.approx(4.87, abs=0.01)
    empty = files("e.json", json.dumps({"picks": []}))
    _, doc, _ = _run(capsys, "evaluate", "--input", x, "--metric", "linf", "--synopsis", empty)
    assert doc["error"]["objective"] == 7
    full = files("f.json", json.dumps({"picks": [[0, 3.25], [1, -1.75], [2, -0.5], [3, -2]]}))
    _, doc, _ = _run(capsys, "evaluate", "--input", x, "--synopsis", full)
    assert doc["error"]["objective"] == 0


def test_evaluate_rejects_bad_documents(capsys, files):
    x = files("x.txt", "1,2,3,7")
    assert _run(capsys, "evaluate", "--input", x, "--synopsis", files("s.json", "{"))[0] == EXIT_PARSE
    bad = files("b.json", json.dumps({"picks": [[9, 1.0]]}))
    assert _run(capsys, "evaluate", "--input", x, "--synopsis", bad)[0] == EXIT_INVALID


@pytest.mark.parametrize("mode,extra", [("restricted", []), ("unrestricted", ["--epsilon", "4"])])
@pytest.mark.parametrize("metric", ["l1", "l2", "linf"])
def test_synopsis_round_trip(capsys, files, mode, extra, metric):
    vals = np.random.default_rng(7).normal(size=16).round(3)
    x = files("x.txt", "\n".join(map(str, vals)))
    w = files("w.txt", ",".join(map(str, np.linspace(0.5, 2, 16))))
    out = files("syn.json", "")
    argv = ["synopsis", "--input", x, "--weights", w, "--metric", metric, "-B", "3", "--mode", mode, *extra]
    assert run(argv + ["--output", out]) == EXIT_OK
    first = json.loads(open(out).read())
    code, doc, _ = _run(capsys, "evaluate", "--input", x, "--weights", w, "--metric", metric, "--synopsis", out)
    assert code == EXIT_OK
    assert doc["error"]["objective"] == pytest.approx(first["error"]["objective"], rel=1e-9, abs=1e-9)


def test_histogram(capsys, files):
    x = files("x.txt", "1,2,3,4")
    _, doc, _ = _run(capsys, "histogram", "--input", x, "-B", "2", "--stats")
    assert doc["error"]["sse"] == pytest.approx(1.0)
    assert doc["buckets"] == [{"start": 1, "end": 2, "mean": 1.5}, {"start": 3, "end": 4, "mean": 3.5}]
    assert doc["stats"]["cell_evals"] > 0
    _, doc, _ = _run(capsys, "histogram", "--input", x, "-B", "1")
    assert doc["error"]["sse"] == pytest.approx(5.0)
    _, doc, _ = _run(capsys, "histogram", "--input", x, "-B", "4")
    assert doc["error"]["sse"] == 0


def test_histogram_any_length(capsys, files):
    code, doc, _ = _run(capsys, "histogram", "--input", files("x.txt", "1,1,1,9,9"), "-B", "2")
    assert code == EXIT_OK and doc["error"]["sse"] == 0


def test_extended(capsys, files):
    data = files("m.txt", "1 0\n2 0\n3 4\n7 4\n")
    code, doc, _ = _run(capsys, "extended", "--input", data, "-B", "3", "--header-cost", "1", "--stats")
    assert code == EXIT_OK
    assert list(doc) == ["params", "allocation", "error", "stats"]
    # the average in both dimensions: cost 1 + 2, energy 4 * (3.25^2 + 2^2)
    assert doc["allocation"] == [{"index": 0, "dims": [0, 1], "values": [3.25, 2.0]}]
    assert doc["error"]["profit"] == pytest.approx(58.25)
    assert doc["error"]["cost"] == 3


def test_extended_zero_budget(capsys, files):
    _, doc, _ = _run(capsys, "extended", "--input", files("m.txt", "1 0\n2 0\n3 4\n7 4\n"), "-B", "0")
    assert doc["allocation"] == [] and doc["error"]["profit"] == 0


def test_output_is_deterministic(files):
    x = files("x.txt", ",".join(map(str, np.random.default_rng(3).normal(size=32).round(4))))
    outs = []
    for i in range(2):
        out = files(f"o{i}.json", "")
        assert run(["synopsis", "--input", x, "-B", "5", "--metric", "l1", "--stats", "--output", out]) == 0
        outs.append(open(out, "rb").read())
    assert outs[0] == outs[1]


def test_stdin_and_module_entry():
    proc = subprocess.run(
        [sys.executable, "-m", "wavesyn", "transform"], input="1,2,3,7", capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["coefficients"] == [3.25, -1.75, -0.5, -2.0]
