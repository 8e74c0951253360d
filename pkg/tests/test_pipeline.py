import io
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from conftest import make_matrix
from matrices import random_matrix
from genesift import (
    ChannelPairMatrix,
    ExpressionMatrix,
    PIPELINE_STAGES,
    PipelineConfig,
    StageError,
    render_summary,
    run_pipeline,
    run_stage,
)
from genesift.filters import filter_cv
from genesift.naive import naive_pipeline

SIX = make_matrix(
    [
        [1.5, 1.6, 1.4, 1.55, 1.45, 1.5],      # survives
        [0.1, -0.1, 0.2, -0.2, 0.0, 0.05],     # noise: fails the t-test
        [0.6, 0.7, 0.5, 0.65, 0.55, 0.6],      # significant but under two-fold
        [-2.0, -2.1, -1.9, -2.05, -1.95, -2.0],  # survives (down-regulated)
        [5.0, -3.0, 5.0, -3.0, 5.0, 2.0],      # alternating sign: fails the t-test, or the CV cut without it
        [1.5, np.nan, np.nan, np.nan, 1.5, 1.5],  # half missing
    ],
    missing=[[False] * 6] * 5 + [[False, True, True, True, False, False]],
)


def test_six_gene_fixture():
    result = run_pipeline(SIX)
    assert result.final.gene_ids == ("g0", "g3")
    nv = naive_pipeline(SIX)
    assert nv.final_ids == ["g0", "g3"]
    assert result.stage("missing").dropped_ids == ["g5"]
    assert result.stage("significance").dropped_ids == ["g1", "g4"]
    assert result.stage("fold_change").dropped_ids == ["g2"]
    assert result.stage("cv").dropped_ids == []
    assert [g for g, _ in result.cv_table] == ["g0", "g3"]


def test_six_gene_fixture_without_t_test():
    result = run_pipeline(SIX, PipelineConfig(significance_enabled=False))
    assert result.final.gene_ids == ("g0", "g3")
    assert result.stage("fold_change").dropped_ids == ["g1", "g2"]
    assert result.stage("cv").dropped_ids == ["g4"]


@pytest.mark.parametrize("enabled,stage", [(True, "significance"), (False, "fold_change")])
def test_all_constant_zero(enabled, stage):
    m = make_matrix(np.zeros((4, 5)))
    result = run_pipeline(m, PipelineConfig(significance_enabled=enabled))
    assert result.final.n_genes == 0
    assert result.stage(stage).dropped_ids == ["g0", "g1", "g2", "g3"]


def test_empty_input():
    result = run_pipeline(ExpressionMatrix([], ["a", "b", "c"], []))
    assert len(result.stages) == 7
    assert [r.stage_name for r in result.stages] == list(PIPELINE_STAGES)
    assert result.final.n_genes == 0 and result.cv_table == ()


def test_bookkeeping_and_shrinkage():
    rng = np.random.default_rng(21)
    for _ in range(100):
        m = random_matrix(rng)
        result = run_pipeline(m)
        assert result.stages[0].genes_in == m.n_genes
        for a, b in zip(result.stages, result.stages[1:]):
            assert a.genes_out == b.genes_in
            assert b.genes_out <= b.genes_in
        for r in result.stages:
            assert r.genes_out == r.genes_in - len(r.dropped)
            if r.stage_name in ("normalize", "logsigmoid"):
                assert r.genes_in == r.genes_out
        assert [g for g, _ in result.cv_table] == list(result.final.gene_ids)
        assert all(cv < 36 for _, cv in result.cv_table)


def test_run_stage_matches_pipeline():
    cfg = PipelineConfig()
    rng = np.random.default_rng(3)
    m = random_matrix(rng, max_genes=40)
    current = m
    result = run_pipeline(m, cfg)
    for stage, report in zip(PIPELINE_STAGES, result.stages):
        outcome = run_stage(current, stage, cfg)
        assert outcome.report == report
        current = outcome.kept
    assert current == result.final


def test_run_stage_cv_equals_filter():
    m = make_matrix([[0.5, 0.6, 0.7], [0.1, 0.9, 0.5]])
    out = run_stage(m, "cv", PipelineConfig())
    assert out == filter_cv(m, 36.0)[0]


def test_run_stage_logsigmoid_and_unknown():
    m = make_matrix([[0.5, -0.6, 0.7]])
    rep = run_stage(m, "logsigmoid", PipelineConfig()).report
    assert rep.genes_in == rep.genes_out == 1
    with pytest.raises(ValueError, match="unknown stage"):
        run_stage(m, "cluster", PipelineConfig())


def test_stage_errors_are_wrapped():
    with pytest.raises(StageError, match="significance") as exc:
        run_pipeline(make_matrix([[1.0], [2.0]]))
    assert exc.value.stage == "significance"


def test_mode_mismatch():
    ch = ChannelPairMatrix(["a"], ["s0", "s1"], [[1.0, 2.0]], [[1.0, 1.0]])
    with pytest.raises(StageError, match="normalize"):
        run_pipeline(ch, PipelineConfig())
    with pytest.raises(StageError):
        run_pipeline(make_matrix([[1.0, 2.0]]), PipelineConfig(input_mode="two_channel"))


@pytest.mark.parametrize("lowess", [False, True])
def test_two_channel_input(lowess):
    rng = np.random.default_rng(17)
    n, m = 60, 6
    green = rng.uniform(100, 2000, (n, m))
    ratio = np.ones((n, m))
    ratio[:5] = 8.0  # three log2 units up in five genes
    ratio[5:] = 2 ** rng.normal(0, 0.3, (n - 5, m))
    red = green * ratio
    ch = ChannelPairMatrix([f"g{i}" for i in range(n)], [f"s{j}" for j in range(m)], red, green)
    cfg = PipelineConfig(input_mode="two_channel", lowess_enabled=lowess, lowess_frac=0.5)
    result = run_pipeline(ch, cfg)
    assert result.stages[0].stage_name == "normalize"
    assert result.stages[0].genes_in == result.stages[0].genes_out == n
    assert set(result.final.gene_ids) <= {f"g{i}" for i in range(5)}
    if not lowess:
        assert set(result.final.gene_ids) == {f"g{i}" for i in range(5)}


def _serialize(result, cfg):
    buf = io.StringIO()
    render_summary(result, buf, cfg)
    return buf.getvalue()


def test_deterministic_across_runs_and_threads():
    rng = np.random.default_rng(99)
    m = random_matrix(rng, max_genes=50)
    cfg = PipelineConfig()
    first = _serialize(run_pipeline(m, cfg), cfg)
    with ThreadPoolExecutor(max_workers=4) as pool:
        outs = list(pool.map(lambda _: _serialize(run_pipeline(m, cfg), cfg), range(8)))
    assert all(o == first for o in outs)
