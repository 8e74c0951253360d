import math

import numpy as np
import pytest
from scipy import stats as sps

from conftest import make_matrix
from matrices import random_matrix
from genesift import (
    ExpressionMatrix,
    dedupe_replicates,
    filter_cv,
    filter_fold_change,
    filter_missing,
    filter_significance,
)
from genesift.filters import FilterError


def ten(n_missing):
    mask = np.zeros((1, 10), bool)
    mask[0, :n_missing] = True
    return make_matrix(np.arange(1.0, 11.0), missing=mask)


class TestMissing:
    def test_forty_percent_kept_and_filled(self):
        out = filter_missing(ten(4), 0.4)
        assert out.kept.n_genes == 1
        assert out.kept.values[0, :4].tolist() == [0.0] * 4
        assert out.kept.values[0, 4:].tolist() == list(np.arange(5.0, 11.0))
        assert not out.kept.missing.any()

    def test_fifty_percent_dropped(self):
        out = filter_missing(ten(5), 0.4)
        assert out.kept.n_genes == 0
        assert out.report.dropped == (("g0", "missing > 0.4"),)

    def test_identity_without_missing(self):
        m = make_matrix([[1.0, 2.0], [3.0, 4.0]])
        out = filter_missing(m, 0.4)
        assert out.kept == m and out.report.dropped == ()


class TestSignificance:
    def test_disabled_is_identity(self):
        m = make_matrix([[0.0, 0.0, 0.0], [0.1, -0.1, 0.0]])
        out = filter_significance(m, 0.05, enabled=False)
        assert out.kept == m and out.report.genes_in == out.report.genes_out == 2

    def test_strong_signal_kept(self):
        row = [3, 3.1, 2.9, 3, 3.05, 2.95]
        # scipy's one-sample t-test as the oracle: p ~ 2e-9
        assert sps.ttest_1samp(row, 0).pvalue < 1e-6
        assert filter_significance(make_matrix(row), 0.05).kept.n_genes == 1

    def test_noise_dropped(self):
        row = [0.1, -0.1, 0.05, -0.05, 0.02, -0.02]
        assert sps.ttest_1samp(row, 0).pvalue > 0.5
        out = filter_significance(make_matrix(row), 0.05)
        assert out.kept.n_genes == 0 and out.report.dropped[0][1] == "p > 0.05"

    def test_constant_rows(self):
        out = filter_significance(make_matrix([[0.0] * 4, [2.0] * 4, [-1.5] * 4]), 0.05)
        assert out.kept.gene_ids == ("g1", "g2")
        assert out.report.dropped == (("g0", "constant zero"),)

    @pytest.mark.parametrize("seed", range(5))
    def test_agrees_with_scipy(self, seed):
        rng = np.random.default_rng(seed)
        rows = rng.normal(rng.uniform(-1, 1, (40, 1)), 1.0, (40, 8))
        out = filter_significance(make_matrix(rows), 0.05)
        expected = [f"g{i}" for i in range(40) if sps.ttest_1samp(rows[i], 0).pvalue <= 0.05]
        assert list(out.kept.gene_ids) == expected

    def test_needs_two_columns(self):
        with pytest.raises(FilterError, match="2 time points"):
            filter_significance(make_matrix([[1.0]]), 0.05)

    def test_rejects_masked_cells(self):
        with pytest.raises(FilterError):
            filter_significance(make_matrix([[1.0, 2.0, 3.0]], missing=[[True, False, False]]))


class TestReplicates:
    m = make_matrix([[1, 2], [3, 4], [9, 9]], ids=["g1", "g1", "g2"])

    def test_mean(self):
        out = dedupe_replicates(self.m, "mean")
        assert out.kept.gene_ids == ("g1", "g2")
        assert out.kept.values.tolist() == [[2.0, 3.0], [9.0, 9.0]]
        assert out.report.dropped == (("g1", "replicate merged"),)

    def test_first(self):
        out = dedupe_replicates(self.m, "first")
        assert out.kept.values.tolist() == [[1.0, 2.0], [9.0, 9.0]]

    def test_drop_all(self):
        out = dedupe_replicates(self.m, "drop_all")
        assert out.kept.gene_ids == ("g2",)
        assert out.report.genes_out == 1 and len(out.report.dropped) == 2

    @pytest.mark.parametrize("policy", ["mean", "first", "drop_all"])
    def test_unique_is_identity(self, policy):
        m = make_matrix([[1, 2], [3, 4]])
        assert dedupe_replicates(m, policy).kept == m

    def test_position_of_first_occurrence(self):
        m = make_matrix([[0, 0], [1, 1], [2, 2], [3, 3]], ids=["a", "b", "a", "c"])
        out = dedupe_replicates(m, "mean")
        assert out.kept.gene_ids == ("a", "b", "c")
        assert out.kept.values[0].tolist() == [1.0, 1.0]


class TestFoldChange:
    def test_boundary_inclusive(self):
        assert filter_fold_change(make_matrix([0.5, 1.5, 1.0]), 1.0).kept.n_genes == 1
        assert filter_fold_change(make_matrix([-0.5, -1.5, -1.0]), 1.0).kept.n_genes == 1

    def test_small_mean_dropped(self):
        out = filter_fold_change(make_matrix([0.4, 0.5, 0.6]), 1.0)
        assert out.kept.n_genes == 0 and out.report.dropped == (("g0", "abs mean < 1"),)

    def test_down_regulated_kept(self):
        assert filter_fold_change(make_matrix([-1.5, -1.1, -1.3]), 1.0).kept.n_genes == 1

    def test_permutation_invariant(self):
        rng = np.random.default_rng(0)
        rows = rng.normal(0, 2, (50, 6))
        base = filter_fold_change(make_matrix(rows), 1.0).kept.gene_ids
        perm = filter_fold_change(make_matrix(rng.permuted(rows, axis=1)), 1.0).kept.gene_ids
        assert base == perm


def two_point_row(cv_percent, center=0.5):
    # sample SD of {a, b} is |a - b| / sqrt(2); solve SD / mean = cv
    half = math.sqrt(2) * cv_percent / 100 * center / 2
    return [center - half, center + half]


class TestCV:
    def test_constant_kept(self):
        out, table = filter_cv(make_matrix([0.3, 0.3, 0.3]), 36)
        assert out.kept.n_genes == 1 and table == [("g0", 0.0)]

    def test_forty_percent_dropped(self):
        row = two_point_row(40.0)
        out, table = filter_cv(make_matrix(row), 36)
        assert out.kept.n_genes == 0 and table == []
        assert out.report.dropped == (("g0", "cv >= 36"),)

    def test_strict_boundary(self):
        # dyadic row with CV of exactly 50%: mean 0.5, sample SD 0.25
        row = [0.25, 0.5, 0.75]
        assert filter_cv(make_matrix(row), 50.0)[0].kept.n_genes == 0
        assert filter_cv(make_matrix(row), 50.000001)[0].kept.n_genes == 1

    def test_marker_table_rows_kept(self, marker_table):
        m = make_matrix([two_point_row(cv) for _, cv in marker_table], ids=[g for g, _ in marker_table])
        out, table = filter_cv(m, 36.0)
        assert out.kept.n_genes == 48
        for (g, cv), (g2, cv2) in zip(marker_table, table):
            assert g == g2 and cv2 == pytest.approx(cv, abs=1e-9)

    def test_population_mode(self):
        _, table = filter_cv(make_matrix([1.0, 2.0, 3.0]), 100, "population")
        assert table[0][1] == pytest.approx(math.sqrt(2 / 3) / 2 * 100)

    def test_scale_invariant_verdicts(self):
        rng = np.random.default_rng(4)
        rows = rng.uniform(0.05, 0.95, (60, 7))
        c = rng.uniform(0.1, 1.0, (60, 1))
        a = filter_cv(make_matrix(rows), 36)[0].kept.gene_ids
        b = filter_cv(make_matrix(rows * c), 36)[0].kept.gene_ids
        assert a == b

    def test_needs_two_columns(self):
        with pytest.raises(FilterError):
            filter_cv(make_matrix([[0.5]]), 36)


def _filled(m):
    return filter_missing(m, 1.0).kept


def _squashed(m):
    m = _filled(m)
    return ExpressionMatrix(m.gene_ids, m.sample_labels, 1 / (1 + np.exp(-m.values)))


# (name, input preparation, filter under test)
FILTERS = [
    ("missing", lambda m: m, lambda m: filter_missing(m, 0.4)),
    ("significance", _filled, lambda m: filter_significance(m, 0.05)),
    ("replicates_mean", lambda m: m, lambda m: dedupe_replicates(m, "mean")),
    ("replicates_first", lambda m: m, lambda m: dedupe_replicates(m, "first")),
    ("replicates_drop", lambda m: m, lambda m: dedupe_replicates(m, "drop_all")),
    ("fold_change", _filled, lambda m: filter_fold_change(m, 1.0)),
    ("cv", _squashed, lambda m: filter_cv(m, 36)[0]),
]


@pytest.mark.parametrize("name,prepare,apply", FILTERS, ids=[f[0] for f in FILTERS])
def test_filter_laws(name, prepare, apply):
    rng = np.random.default_rng(123)
    for _ in range(300):
        m = prepare(random_matrix(rng, boundary=False))
        out = apply(m)
        kept, report = out.kept, out.report
        assert report.genes_in == m.n_genes
        assert report.genes_out == kept.n_genes == m.n_genes - len(report.dropped)
        # every input row is either kept or listed once among the drops
        assert sorted(kept.gene_ids + tuple(report.dropped_ids)) == sorted(m.gene_ids) or name == "replicates_mean"
        it = iter(m.gene_ids)
        assert all(g in it for g in kept.gene_ids)
        assert apply(kept).kept == kept


def test_partition_law_unique_ids():
    rng = np.random.default_rng(7)
    for _ in range(300):
        m = random_matrix(rng, duplicates=False, boundary=False)
        for out in (filter_missing(m, 0.4), dedupe_replicates(m, "drop_all")):
            kept, dropped = list(out.kept.gene_ids), out.report.dropped_ids
            assert sorted(kept + dropped) == sorted(m.gene_ids)
            assert set(kept).isdisjoint(dropped)


def test_missing_output_mask_clear_and_dedupe_unique():
    rng = np.random.default_rng(8)
    for _ in range(100):
        m = random_matrix(rng)
        assert not filter_missing(m, 0.4).kept.missing.any()
        for policy in ("mean", "first", "drop_all"):
            ids = dedupe_replicates(m, policy).kept.gene_ids
            assert len(set(ids)) == len(ids)
