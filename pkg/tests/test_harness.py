import pytest

from circuitdiag.harness import ConfigError, bench_run, load_config

BASE = """
seed: 11
budget: {seconds_per_scenario: 30, simplify: true}
circuits:
  - name: paperlike_fig1
  - gen: {n: 6, p: 0, i: 3, seed: 2}
scenarios: {cardinality: 1, count: 6, seed: 5}
strategies:
  - {heuristic: fp, mode: flat}
  - {heuristic: fp, mode: hierarchical}
  - {heuristic: random, mode: flat}
  - {heuristic: ew, mode: flat, pruning: true}
report: {times: false}
"""


def test_load_config_validates():
    cfg = load_config(BASE)
    assert len(cfg["strategies"]) == 4
    with pytest.raises(ConfigError, match="missing"):
        load_config("seed: 1\n")
    with pytest.raises(ConfigError, match="heuristic"):
        load_config(BASE.replace("random", "psychic"))
    with pytest.raises(ConfigError, match="YAML"):
        load_config("a: [unclosed")


def test_bench_run_report_shape():
    report = bench_run(load_config(BASE))
    assert report.sound
    rows = report.rows
    assert rows, "expected at least one cell"
    for r in rows:
        assert r["solved"] <= r["scenarios"]
        if r["solved"]:
            assert r["mean_cost"] != ""
        assert r["soundness_failures"] == 0
    csv_text = report.to_csv()
    assert csv_text.splitlines()[0].startswith("circuit,")
    assert "mean_time_s" not in csv_text
    text = report.to_text()
    assert "paperlike_fig1" in text


def test_bench_run_deterministic_bytes():
    a = bench_run(load_config(BASE)).to_csv()
    b = bench_run(load_config(BASE)).to_csv()
    assert a == b


def test_bench_zero_scenarios_empty_report():
    cfg = load_config(BASE.replace("count: 6", "count: 0"))
    report = bench_run(cfg)
    assert report.rows == []
    assert report.to_csv().count("\n") == 1  # header only


def test_times_column_togglable():
    cfg = load_config(BASE.replace("times: false", "times: true"))
    report = bench_run(cfg)
    assert "mean_time_s" in report.to_csv()


def test_fp_beats_random_on_this_sample():
    report = bench_run(load_config(BASE))
    by = {(r["heuristic"], r["mode"], r["circuit"]): r for r in report.rows}
    fp = by.get(("fp", "flat", "paperlike_fig1"))
    rnd = by.get(("random", "flat", "paperlike_fig1"))
    assert fp and rnd and fp["solved"] and rnd["solved"]
    assert fp["mean_cost"] <= rnd["mean_cost"]
