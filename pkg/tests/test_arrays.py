import pytest
from hypothesis import given, strategies as st

from strictform.arrays import (
    INDEPENDENT,
    INVERSE_LIMIT,
    AmalgamationChain,
    ArrayWindow,
    Rectangle,
    SymbolError,
    amalgamate,
    extract_rectangle,
    lift_binary,
    read_arr,
    replace_cells,
    shift,
    validate_window,
    window_to_rectangle,
    write_arr,
)
from strictform.markers import MarkerSystem

binary_words = st.text(alphabet="01", min_size=4, max_size=12)


def canonical_window(cells, mode=INVERSE_LIMIT):
    return ArrayWindow(AmalgamationChain.canonical(len(cells)), 0,
                       tuple(tuple(r) for r in cells), mode)


class TestAmalgamationChain:
    def test_canonical_sizes(self):
        chain = AmalgamationChain.canonical(4)
        assert chain.alphabet_sizes == (2, 4, 8, 16)

    def test_amalgamate_examples(self):
        chain = AmalgamationChain.canonical(3)
        assert amalgamate(chain, 1, 1) == 1
        assert amalgamate(chain, 2, 4) == 2
        assert amalgamate(chain, 2, 5) == 3

    def test_canonical_preimages(self):
        # each row-k symbol s has exactly the preimages {2s-1, 2s}
        chain = AmalgamationChain.canonical(4)
        for k in range(1, 4):
            for s in range(1, 2**k + 1):
                pre = [m for m in range(1, 2 ** (k + 1) + 1)
                       if amalgamate(chain, k, m) == s]
                assert pre == [2 * s - 1, 2 * s]

    def test_symbol_out_of_range(self):
        chain = AmalgamationChain.canonical(2)
        with pytest.raises(SymbolError):
            amalgamate(chain, 1, 5)

    def test_non_surjective_map_rejected(self):
        with pytest.raises(ValueError):
            AmalgamationChain((2, 4), ((1, 1, 1, 1),))


class TestValidateWindow:
    def test_valid_column(self):
        assert validate_window(canonical_window([[1], [2], [3]]))

    def test_invalid_column(self):
        assert not validate_window(canonical_window([[1], [2], [5]]))

    def test_independent_mode_unconstrained(self):
        w = canonical_window([[1], [2], [5]], INDEPENDENT)
        assert validate_window(w)

    def test_out_of_alphabet_cell(self):
        assert not validate_window(canonical_window([[3], [1], [1]],
                                                    INDEPENDENT))


class TestShift:
    def test_identity(self):
        w = canonical_window([[1, 2]])
        assert shift(w, 0) == w

    def test_inverse(self):
        w = canonical_window([[1, 2]])
        assert shift(shift(w, 3), -3) == w

    def test_origin_moves(self):
        w = canonical_window([[1, 2]])
        assert shift(w, 1).origin == w.origin - 1

    @given(binary_words, st.integers(-20, 20))
    def test_extract_commutes_with_shift(self, word, t):
        w = lift_binary(word, 2)
        lo, hi = w.origin, w.origin + w.columns - 1
        a = extract_rectangle(w, 2, lo, hi)
        b = extract_rectangle(shift(w, t), 2, lo - t, hi - t)
        assert a == b


class TestLiftBinary:
    def test_single_column_01(self):
        w = lift_binary("01", 2)
        assert w.columns == 1 and w.column(0) == (1, 2)

    def test_single_column_11(self):
        w = lift_binary("11", 2)
        assert w.column(0) == (2, 4)

    def test_three_rows(self):
        w = lift_binary("0100", 3)
        assert w.columns == 2
        assert w.column(0) == (1, 2, 3)

    def test_word_too_short(self):
        with pytest.raises(ValueError):
            lift_binary("01", 3)

    def test_non_binary_rejected(self):
        with pytest.raises(ValueError):
            lift_binary("012", 2)

    def test_always_inverse_limit_valid_exhaustive(self):
        # all binary words up to length 10, all row counts up to 4
        for n in range(4, 11):
            for v in range(2**n):
                word = format(v, f"0{n}b")
                for rows in range(1, 5):
                    assert validate_window(lift_binary(word, rows))


class TestExtractRectangle:
    def test_full_window_identity(self):
        w = lift_binary("0110", 2)
        rect = window_to_rectangle(w)
        assert rect.cells == w.cells

    def test_single_cell(self):
        w = lift_binary("0110", 2)
        rect = extract_rectangle(w, 1, 1, 1)
        assert rect.rows == 1 and rect.width == 1
        assert rect.cells == ((2,),)

    def test_marker_flags_copied(self):
        w = lift_binary("010010", 2)
        ms = MarkerSystem(((0, 3), (3,)), (3, 3), 0, 4)
        rect = extract_rectangle(w, 2, 0, 4, ms)
        assert rect.marks[0] == (True, False, False, True, False)
        assert rect.marks[1] == (False, False, False, True, False)

    def test_range_violation(self):
        w = lift_binary("0110", 2)
        with pytest.raises(ValueError):
            extract_rectangle(w, 2, 0, 99)


class TestRectangle:
    def test_equality_includes_flags(self):
        a = Rectangle.from_rows([[1, 1]])
        b = Rectangle.from_rows([[1, 1]], [[False, True]])
        assert a != b
        assert a == b.without_marks()

    def test_sub(self):
        r = Rectangle.from_rows([[1, 2, 1], [3, 4, 3]])
        s = r.sub(1, 1, 2)
        assert s.cells == ((2, 1),)

    def test_from_word(self):
        assert Rectangle.from_word("121").cells == ((1, 2, 1),)

    def test_ragged_rejected(self):
        with pytest.raises(ValueError):
            Rectangle(((1, 2), (1,)), ((False, False), (False,)))


class TestReplaceCells:
    def test_rows_above_unchanged(self):
        w = lift_binary("010010", 3)
        block = Rectangle.from_rows([[2, 2], [1, 1]])
        out = replace_cells(w, 2, 1, block, INDEPENDENT)
        assert out.cells[2] == w.cells[2]
        assert out.cells[0][1:3] == (2, 2)
        assert out.cells[1][1:3] == (1, 1)


class TestArrFormat:
    def test_roundtrip_plain(self, tmp_path):
        w = lift_binary("0110100", 3)
        p = tmp_path / "a.arr"
        write_arr(p, w)
        back, ms = read_arr(p)
        assert back == w and ms is None

    def test_roundtrip_with_markers(self, tmp_path):
        w = lift_binary("0110100", 2)
        ms = MarkerSystem(((0, 3, 5), (0, 5)), (3, 5), 0, 5)
        p = tmp_path / "a.arr"
        write_arr(p, w, ms)
        back, ms2 = read_arr(p)
        assert back == w
        assert ms2.positions == ms.positions

    @given(binary_words)
    def test_roundtrip_random(self, word):
        import tempfile
        from pathlib import Path

        w = lift_binary(word, 2)
        with tempfile.TemporaryDirectory() as d:
            p = Path(d) / "w.arr"
            write_arr(p, w)
            back, _ = read_arr(p)
        assert back == w
