import csv
import io
import json

import pytest

from tritail.cli import RunConfig, main, normalized_exponent, run_sweep


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def parse_csv(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_tail_exact(capsys):
    rc, out, _ = run(capsys, "tail", "--method", "exact", "--n", "3", "--p", "0.5", "--threshold", "1")
    assert rc == 0
    d = json.loads(out)
    assert d["result"]["p_hat"] == 0.125
    assert d["config"]["threshold"] == 1.0


def test_tail_csv_columns(capsys):
    rc, out, _ = run(capsys, "tail", "--method", "plain", "--n", "5", "--p", "0.5", "--threshold", "2",
                     "--samples", "2000", "--seed", "3", "--csv")
    assert rc == 0
    rows = parse_csv(out)
    assert list(rows[0]) == ["method", "n", "p", "threshold", "p_hat", "ci_low", "ci_high", "samples", "seed",
                             "tilt_q", "ess"]
    assert out.startswith("# config: ")


def test_decompose(capsys):
    rc, out, _ = run(capsys, "decompose", "--n", "10", "--p", "0.4", "--epsilon", "0.5", "--seed", "7")
    assert rc == 0
    d = json.loads(out)["decomposition"]
    assert d["T"] <= d["T_prime"] + d["T0"] + d["T1"] + d["T2"] + d["T3"]


def test_decompose_graph_file(capsys, tmp_path):
    path = tmp_path / "k4.txt"
    path.write_text("n=4\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n")
    rc, out, _ = run(capsys, "decompose", "--graph", str(path), "--p", "0.5", "--epsilon", "1")
    assert rc == 0 and json.loads(out)["decomposition"]["T"] == 4


def test_bounds(capsys):
    rc, out, _ = run(capsys, "bounds", "--name", "binomial_tail", "--t", "10", "--lambda", "1")
    assert rc == 0
    row = parse_csv(out)[0]
    assert row["bound_name"] == "binomial_tail"
    assert float(row["prob_bound"]) == pytest.approx(0.3**10, rel=1e-9)
    rc, out, _ = run(capsys, "bounds", "--name", "matching_tail", "--t", "12", "--m", "1", "--n", "8", "--p", "0.25")
    assert float(parse_csv(out)[0]["prob_bound"]) == pytest.approx(8.0**-4, rel=1e-9)


def test_events(capsys):
    rc, out, _ = run(capsys, "events", "--n", "8", "--p", "0.5", "--epsilon", "0.5", "--samples", "5")
    assert rc == 0
    rows = parse_csv(out)
    assert len(rows) == 5
    assert {"E1", "E2", "E3", "E4", "class_count"} <= set(rows[0])


def test_verify_conditions(capsys):
    rc, out, _ = run(capsys, "verify-conditions", "--n", "7", "--p", "0.5", "--epsilon", "1",
                     "--samples", "10", "--independence-n", "4")
    assert rc == 0
    d = json.loads(out)
    assert d["passed"] and d["independence"]["gap"] <= 1e-12


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["tail", "--bogus"])
    assert exc.value.code != 0
    assert "usage" in capsys.readouterr().err
    rc, _, err = run(capsys, "tail", "--method", "exact", "--n", "9", "--p", "0.5", "--threshold", "1")
    assert rc != 0 and err


def test_sweep_single_exact_row():
    rows, errors = run_sweep(RunConfig(n=[4], p=[0.5], methods=["exact"], thresholds=[1]))
    assert not errors and len(rows) == 1
    assert rows[0]["p_hat"] == 0.359375


def test_sweep_rejects_empty_methods():
    with pytest.raises(ValueError):
        RunConfig(n=[4], p=[0.5], methods=[]).validate()
    with pytest.raises(ValueError):
        RunConfig(n=[4], p=[1.5], methods=["exact"]).validate()


def test_sweep_row_errors_do_not_stop_the_run():
    rows, errors = run_sweep(RunConfig(n=[4, 9], p=[0.5], methods=["exact"], thresholds=[1]))
    assert len(rows) == 2 and rows[0]["error"] == ""
    assert [e["index"] for e in errors] == [1]


def test_sweep_bytes_deterministic(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"n": [6, 12], "p": [0.3], "epsilon": [1.0], "methods": ["plain", "tilted"],
                               "samples": 3000, "master_seed": 11}))
    outs = []
    for threads in ("1", "2"):
        rc, out, _ = run(capsys, "sweep", "--config", str(cfg), "--threads", threads)
        assert rc == 0
        outs.append(out)
    assert outs[0] == outs[1]
    header = json.loads(outs[0].splitlines()[0].removeprefix("# config: "))
    assert header["master_seed"] == 11
    rc, out, _ = run(capsys, "sweep", "--config", str(cfg), "--samples", "100")
    assert json.loads(out.splitlines()[0].removeprefix("# config: "))["samples"] == 100


def test_normalized_exponent():
    assert normalized_exponent(0.0, 10, 0.1) == float("inf")
    assert normalized_exponent(1.0, 10, 0.1) == 0.0


def test_sweep_exit_code_reflects_row_errors(capsys):
    rc, out, err = run(capsys, "sweep", "--n", "4", "9", "--p", "0.5", "--methods", "exact", "--thresholds", "1")
    assert rc == 1
    assert "row 1" in err
    assert len(parse_csv(out)) == 2
