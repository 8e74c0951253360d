import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from genesift import ChannelPairMatrix, ExpressionMatrix, ParseError, TableSchema, parse_table, write_table


def parse(text, **kw):
    return parse_table(io.StringIO(text), **kw)


def test_one_missing_cell():
    m = parse("id\ta\tb\tc\td\ng1\t1\t2\tNA\t4\ng2\t5\t6\t7\t8\n")
    assert m.shape == (2, 4)
    assert m.sample_labels == ("a", "b", "c", "d")
    assert m.missing.sum() == 1 and m.missing[0, 2]


def test_wrong_field_count_names_line():
    with pytest.raises(ParseError, match="line 3") as exc:
        parse("id\ta\tb\tc\td\ng1\t1\t2\t3\t4\ng2\t1\t2\n")
    assert exc.value.line == 3


def test_empty_and_duplicate_labels():
    with pytest.raises(ParseError, match="empty"):
        parse("")
    with pytest.raises(ParseError, match="duplicate sample labels"):
        parse("id\tx\tx\ng\t1\t2\n")


def test_marker_table_ids_in_order(marker_table_text, marker_table):
    m = parse(marker_table_text)
    assert m.shape == (48, 1)
    assert list(m.gene_ids) == [g for g, _ in marker_table]
    assert m.values[:, 0].tolist() == [c for _, c in marker_table]


def test_unparseable_cells_become_missing(caplog):
    m = parse("id\ta\tb\ng\tfoo\tinf\nh\tnull\t\n")
    assert m.missing.all()
    assert "unparseable" in caplog.text


def test_no_header_and_crlf():
    m = parse("g1,1,2\r\ng2,3,4\r\n", schema=TableSchema(delimiter=",", has_header=False))
    assert m.sample_labels == ("t0", "t1")
    assert m.values.tolist() == [[1.0, 2.0], [3.0, 4.0]]


def test_named_columns():
    text = "desc\tname\tx\ty\nfoo\tg1\t1\t2\n"
    m = parse(text, schema=TableSchema(id_column="name", value_columns=["y"]))
    assert m.gene_ids == ("g1",) and m.sample_labels == ("y",) and m.values.tolist() == [[2.0]]


def test_two_channel():
    text = "id\tr1\tg1\tr2\tg2\nA\t4\t1\t1\tNA\nB\t2\t2\t0\t3\n"
    schema = TableSchema(value_columns=[("r1", "g1"), ("r2", "g2")])
    c = parse(text, schema=schema, mode="two_channel")
    assert isinstance(c, ChannelPairMatrix)
    assert c.sample_labels == ("r1", "r2")
    assert c.missing.tolist() == [[False, True], [False, False]]
    assert c.red[1, 1] == 0.0
    with pytest.raises(ParseError, match="negative"):
        parse("id\tr\tg\nA\t-1\t1\n", schema=TableSchema(value_columns=[("r", "g")]), mode="two_channel")


def test_schema_invariants():
    with pytest.raises(ValueError):
        TableSchema(value_columns=[])
    with pytest.raises(ValueError):
        TableSchema(id_column=1, value_columns=[1, 2])


def test_write_empty_matrix():
    sink = io.StringIO()
    write_table(ExpressionMatrix([], ["t0", "t1"], []), sink)
    assert sink.getvalue() == "id\tt0\tt1\n"
    assert parse(sink.getvalue()).shape == (0, 2)


def test_write_one_cell():
    sink = io.StringIO()
    write_table(ExpressionMatrix(["g1"], ["t0"], [[0.5]]), sink)
    assert sink.getvalue() == "id\tt0\ng1\t0.5\n"


def test_write_masked_cell():
    m = ExpressionMatrix(["g1"], ["t0", "t1"], [[1.0, 0.0]], [[False, True]])
    sink = io.StringIO()
    write_table(m, sink)
    assert sink.getvalue() == "id\tt0\tt1\ng1\t1.0\tNA\n"
    assert parse(sink.getvalue()) == m


def test_write_rejects_delimiter_in_id():
    with pytest.raises(ValueError):
        write_table(ExpressionMatrix(["a\tb"], ["t0"], [[1.0]]), io.StringIO())


ids = st.text(alphabet="ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789-_.", min_size=1, max_size=10)


@st.composite
def matrices(draw):
    n = draw(st.integers(0, 30))
    m = draw(st.integers(1, 12))
    gene_ids = draw(st.lists(ids, min_size=n, max_size=n))
    labels = draw(st.lists(ids, min_size=m, max_size=m, unique=True))
    values = draw(
        st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=n * m, max_size=n * m)
    )
    # about 10% of cells missing
    missing = draw(st.lists(st.integers(0, 9).map(lambda k: k == 0), min_size=n * m, max_size=n * m))
    return ExpressionMatrix(gene_ids, labels, np.reshape(values, (n, m)), np.reshape(missing, (n, m)))


@settings(max_examples=500, deadline=None)
@given(matrices())
def test_round_trip(m):
    sink = io.StringIO()
    write_table(m, sink)
    back = parse(sink.getvalue())
    assert back == m
    assert back.n_genes == m.n_genes
