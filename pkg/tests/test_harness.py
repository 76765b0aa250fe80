import math

import pytest

from starsketch.generators import DistributionFamily, sample_stream, write_stream
from starsketch.harness import (
    ExperimentPlan,
    ResultRow,
    SandwichViolationError,
    StreamSource,
    _check_sandwich,
    derive_seed,
    load_plan,
    parse_plan,
    parse_source,
    read_results,
    run_plan,
    run_plan_to_dir,
    sweep_summary,
    write_results,
)
from starsketch.divergence import get_divergence

TINY_PLAN = """
# uniform against a skewed stream, small scale
pair = uniform | zipf(alpha=1)
pair = uniform | uniform
divergences = js, bhattacharyya
k = 8, 16
t = 2
trials = 2
m = 2000
n = 100
seed = 7
"""


class TestPlanParsing:
    def test_grammar(self):
        plan = parse_plan(TINY_PLAN)
        assert len(plan.pairs) == 2
        assert plan.divergences == ["js", "bhattacharyya"]
        assert plan.k_values == [8, 16]
        assert plan.t_values == [2]
        assert plan.trials == 2
        assert plan.m == 2000 and plan.n == 100
        assert plan.master_seed == 7
        assert plan.alpha == 0.0

    def test_defaults(self):
        plan = parse_plan("pair = uniform | poisson\n")
        assert plan.k_values == [200] and plan.t_values == [4]
        assert plan.m == 200_000 and plan.n == 4000
        assert plan.divergences == ["js"]

    def test_rejects_missing_pair(self):
        with pytest.raises(ValueError):
            parse_plan("divergences = js\n")

    def test_rejects_bad_pair_line(self):
        with pytest.raises(ValueError):
            parse_plan("pair = uniform\n")

    def test_rejects_unknown_divergence(self):
        with pytest.raises(KeyError):
            parse_plan("pair = uniform | uniform\ndivergences = renyi\n")

    def test_rejects_bad_syntax(self):
        with pytest.raises(ValueError):
            parse_plan("pair = uniform | uniform\njust some words\n")

    def test_file_source(self, tmp_path):
        stream = tmp_path / "a.stream"
        write_stream(str(stream), sample_stream(DistributionFamily.uniform(50), 100, 1), 50, "x")
        src = parse_source("file:a.stream", 50, base_dir=str(tmp_path))
        assert not src.synthetic
        assert src.label() == "file:a.stream"
        with pytest.raises(FileNotFoundError):
            parse_source("file:missing.stream", 50, base_dir=str(tmp_path))

    def test_load_plan_resolves_relative_sources(self, tmp_path):
        stream = tmp_path / "trace.stream"
        write_stream(str(stream), sample_stream(DistributionFamily.uniform(50), 100, 1), 50, "x")
        plan_file = tmp_path / "plan.txt"
        plan_file.write_text("pair = file:trace.stream | uniform\nn = 50\nm = 100\n")
        plan = load_plan(str(plan_file))
        assert plan.pairs[0][0].path == str(stream)


def test_derive_seed_stable_and_distinct():
    assert derive_seed(1, "stream", 0, 0, 0) == derive_seed(1, "stream", 0, 0, 0)
    seeds = {derive_seed(1, "stream", i, j, t) for i in range(4) for j in range(2) for t in range(8)}
    assert len(seeds) == 64


class TestRunPlan:
    def test_row_grid(self):
        plan = parse_plan(TINY_PLAN)
        rows = run_plan(plan)
        assert len(rows) == 2 * 2 * 2 * 1 * 2  # pairs * phis * k * t * trials
        keys = [(r.pair, r.phi, r.k, r.t, r.trial) for r in rows]
        assert keys == sorted(keys)
        assert len(set(keys)) == len(keys)

    def test_sketch_below_reference(self):
        rows = run_plan(parse_plan(TINY_PLAN))
        for r in rows:
            if r.phi == "js" and not r.infinite:
                assert r.sketch <= r.ref + 1e-12

    def test_same_distribution_pair_near_zero(self):
        rows = run_plan(parse_plan(TINY_PLAN))
        same = [r for r in rows if r.pair == "uniform|uniform" and r.phi == "js"]
        assert same
        for r in same:
            assert r.ref < 0.05
            assert r.sketch < 0.05

    def test_determinism(self, tmp_path):
        plan_a = parse_plan(TINY_PLAN)
        plan_b = parse_plan(TINY_PLAN)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_results(run_plan(plan_a), str(a))
        write_results(run_plan(plan_b), str(b))
        assert a.read_bytes() == b.read_bytes()

    def test_file_sources(self, tmp_path):
        s1 = tmp_path / "one.stream"
        s2 = tmp_path / "two.stream"
        write_stream(str(s1), sample_stream(DistributionFamily.uniform(64), 500, 1), 64, "u")
        write_stream(str(s2), sample_stream(DistributionFamily.zipf(64, 1.0), 700, 2), 64, "z")
        plan_text = f"pair = file:one.stream | file:two.stream\ndivergences = js\nk = 8\nt = 2\n"
        plan = parse_plan(plan_text, base_dir=str(tmp_path))
        rows = run_plan(plan)
        assert len(rows) == 1
        assert math.isfinite(rows[0].ref)
        assert rows[0].sketch <= rows[0].ref + 1e-12


class TestSandwichCheck:
    def _row(self, ref, sketch):
        return ResultRow(pair="p", phi="js", k=4, t=2, trial=0, family_seed=1,
                         ref=ref, sketch=sketch, build_seconds=0.0, query_seconds=0.0)

    def test_passes_below(self):
        _check_sandwich(get_divergence("js"), self._row(0.5, 0.3))

    def test_infinite_reference_allows_anything(self):
        _check_sandwich(get_divergence("kl"), self._row(math.inf, 5.0))

    def test_violation_raises(self):
        with pytest.raises(SandwichViolationError):
            _check_sandwich(get_divergence("js"), self._row(0.3, 0.5))
        with pytest.raises(SandwichViolationError):
            _check_sandwich(get_divergence("kl"), self._row(0.3, math.inf))


class TestSummary:
    def test_single_trial(self):
        rows = [ResultRow("p", "js", 4, 2, 0, 1, ref=0.5, sketch=0.4,
                          build_seconds=0.0, query_seconds=0.0)]
        (s,) = sweep_summary(rows)
        assert s.trials == 1
        assert s.mean_ref == 0.5
        assert s.mean_abs_error == pytest.approx(0.1)
        assert s.stdev_abs_error == 0.0
        assert s.infinite_rows == 0

    def test_infinite_rows_separated(self):
        rows = [
            ResultRow("p", "kl", 4, 2, 0, 1, ref=math.inf, sketch=0.4, build_seconds=0, query_seconds=0),
            ResultRow("p", "kl", 4, 2, 1, 2, ref=1.0, sketch=0.5, build_seconds=0, query_seconds=0),
        ]
        (s,) = sweep_summary(rows)
        assert s.infinite_rows == 1
        assert s.mean_ref == 1.0
        assert s.mean_abs_error == pytest.approx(0.5)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            sweep_summary([])

    def test_groups_sorted(self):
        plan = parse_plan(TINY_PLAN)
        summaries = sweep_summary(run_plan(plan))
        keys = [(s.pair, s.phi, s.k, s.t) for s in summaries]
        assert keys == sorted(keys)
        assert all(s.trials == 2 for s in summaries)


def test_results_roundtrip(tmp_path):
    rows = run_plan(parse_plan("pair = uniform | binomial\ndivergences = js,kl\nk = 8\nt = 2\nm = 1000\nn = 50\n"))
    path = tmp_path / "rows.csv"
    write_results(rows, str(path))
    loaded = read_results(str(path))
    assert len(loaded) == len(rows)
    for a, b in zip(loaded, rows):
        assert (a.pair, a.phi, a.k, a.t, a.trial, a.family_seed) == \
               (b.pair, b.phi, b.k, b.t, b.trial, b.family_seed)
        assert a.ref == b.ref and a.sketch == b.sketch


def test_run_plan_to_dir(tmp_path):
    plan = parse_plan(TINY_PLAN)
    out = tmp_path / "results"
    rows = run_plan_to_dir(plan, str(out), TINY_PLAN)
    for name in ("results.csv", "summary.csv", "timings.csv", "manifest.txt"):
        assert (out / name).exists()
    manifest = (out / "manifest.txt").read_text()
    assert "master_seed = 7" in manifest
    assert "pair = uniform | zipf(alpha=1)" in manifest
    timings = (out / "timings.csv").read_text().splitlines()
    assert timings[0].startswith("pair,phi,k,t,trial,build_seconds")
    assert len(timings) == len(rows) + 1


def test_plan_validation():
    src = StreamSource(family=DistributionFamily.uniform(10))
    with pytest.raises(ValueError):
        ExperimentPlan(pairs=[], divergences=["js"], k_values=[4], t_values=[2])
    with pytest.raises(ValueError):
        ExperimentPlan(pairs=[(src, src)], divergences=["js"], k_values=[0], t_values=[2])
    with pytest.raises(ValueError):
        ExperimentPlan(pairs=[(src, src)], divergences=["js"], k_values=[4], t_values=[2], trials=0)
    with pytest.raises(ValueError):
        StreamSource()
