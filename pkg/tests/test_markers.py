import pytest
from hypothesis import given, settings, strategies as st

from strictform.markers import (
    InsufficientRoom,
    MarkerSystem,
    NoDecomposition,
    build_marker_system,
    check_balanced,
    check_congruency,
    check_two_gaps,
    decompose_gap,
    read_mrk,
    repair_congruency,
    subdivide_gap,
    write_mrk,
)


def row_system(positions, l, lo=None, hi=None):
    lo = positions[0] if lo is None else lo
    hi = positions[-1] if hi is None else hi
    return MarkerSystem((tuple(positions),), (l,), lo, hi)


class TestDecomposeGap:
    def test_unique_solution(self):
        d = decompose_gap(7, 3)
        assert (d.a, d.b) == (1, 1)

    def test_best_ratio_among_eight(self):
        d = decompose_gap(100, 3)
        assert (d.a, d.b) == (16, 13)

    def test_no_positive_solution(self):
        with pytest.raises(NoDecomposition):
            decompose_gap(12, 3)

    def test_exact_total(self):
        for l in range(2, 7):
            for p in range(2 * l + 1, 9 * l * l + 50):
                try:
                    d = decompose_gap(p, l)
                except NoDecomposition:
                    continue
                assert d.a * l + d.b * (l + 1) == p
                assert d.a >= 1 and d.b >= 1

    def test_min_share_above_threshold(self):
        for l in range(2, 7):
            for p in range(9 * l * l, 9 * l * l + 60):
                d = decompose_gap(p, l)
                assert 3 * min(d.a * l, d.b * (l + 1)) >= p


class TestSubdivideGap:
    def test_short_split(self):
        assert subdivide_gap(0, 7, 3) == [3]

    def test_ten(self):
        assert subdivide_gap(0, 10, 3) == [3, 6]

    def test_propagates(self):
        with pytest.raises(NoDecomposition):
            subdivide_gap(0, 12, 3)

    def test_all_gaps_two_sized(self):
        cuts = subdivide_gap(5, 5 + 100, 3)
        ps = [5] + cuts + [105]
        assert all(b - a in (3, 4) for a, b in zip(ps, ps[1:]))


class TestPredicates:
    def test_two_gaps_true(self):
        ms = row_system([0, 3, 7, 10, 13, 17], 3)
        assert check_two_gaps(ms, 1)

    def test_two_gaps_false(self):
        assert not check_two_gaps(row_system([0, 3, 8], 3), 1)

    def test_two_gaps_vacuous(self):
        assert check_two_gaps(row_system([5], 3), 1)

    def test_balanced_alternating(self):
        # every 17-window fully contains >= 2 gaps of each length,
        # 2 >= 17/9 and 2 >= 17/12
        ps = [0]
        for i in range(30):
            ps.append(ps[-1] + (3 if i % 2 == 0 else 4))
        assert check_balanced(row_system(ps, 3), 1, 17)

    def test_unbalanced_all_short(self):
        ps = list(range(0, 90, 3))
        assert not check_balanced(row_system(ps, 3), 1, 17)

    def test_unbalanced_all_long(self):
        ps = list(range(0, 120, 4))
        assert not check_balanced(row_system(ps, 3), 1, 17)

    def test_balanced_window_too_short(self):
        with pytest.raises(ValueError):
            check_balanced(row_system([0, 3, 6], 3), 1, 5)

    def test_congruency_subset(self):
        ms = MarkerSystem(((0, 3, 6, 9, 12), (0, 12)), (3, 12), 0, 12)
        assert check_congruency(ms)

    def test_congruency_violated(self):
        ms = MarkerSystem(((0, 3, 6), (5,)), (3, 5), 0, 6)
        assert not check_congruency(ms)

    def test_congruency_single_row(self):
        assert check_congruency(row_system([0, 3], 3))


class TestRepairCongruency:
    def test_identity_when_present(self):
        ps = (0, 3, 6, 9)
        assert repair_congruency(ps, 6, 3) == ps

    def test_inserts_target(self):
        # the worked example: all gaps 3 over [0,30], target 7
        ps = tuple(range(0, 33, 3))
        out = repair_congruency(ps, 7, 3)
        assert 7 in out
        assert all(b - a in (3, 4) for a, b in zip(out, out[1:]))
        assert out[:3] == (0, 3, 7)

    def test_locality_bound(self):
        l = 3
        ps = tuple(range(0, 300, 3))
        out = repair_congruency(ps, 100, l)
        moved = set(ps) ^ set(out)
        assert all(abs(p - 100) <= 9 * l * l + l for p in moved)

    def test_idempotent(self):
        ps = tuple(range(0, 60, 3))
        once = repair_congruency(ps, 7, 3)
        assert repair_congruency(once, 7, 3) == once

    def test_insufficient_room(self):
        with pytest.raises(InsufficientRoom):
            repair_congruency((0, 3), 100, 3)

    def test_untouched_outside(self):
        ps = tuple(range(0, 300, 3))
        out = repair_congruency(ps, 100, 3)
        far = [p for p in ps if abs(p - 100) > 9 * 9 + 3]
        assert all(p in out for p in far)


class TestBuildMarkerSystem:
    def test_single_row_example(self):
        ms = build_marker_system(20, 0, (3,))
        gaps = [b - a for a, b in zip(ms.row(1), ms.row(1)[1:])]
        assert set(gaps) <= {3, 4}
        assert ms.row(1)[0] == 0 and ms.row(1)[-1] == 20

    def test_two_rows_congruent(self):
        # 703 = 4*100 + 3*101, so the top row decomposes
        ms = build_marker_system(703, 0, (3, 100))
        assert check_congruency(ms)
        assert check_two_gaps(ms, 1) and check_two_gaps(ms, 2)

    def test_bad_sequence_rejected(self):
        with pytest.raises(ValueError):
            build_marker_system(100, 0, (3, 12))

    def test_balanced_certified_windows(self):
        # 2703 = 15*150 + 3*151 exceeds the row-1 certified window
        ms = build_marker_system(2703, 0, (4, 150))
        for k in range(1, ms.row_count + 1):
            assert check_balanced(ms, k, ms.balance_windows[k - 1])

    @settings(deadline=None, max_examples=25)
    @given(st.integers(2, 6), st.integers(0, 3), st.data())
    def test_randomized_configs(self, l1, origin, data):
        gaps = [l1]
        if data.draw(st.booleans()):
            gaps.append(9 * l1 * l1 + data.draw(st.integers(0, 20)))
        top = gaps[-1]
        a = data.draw(st.integers(2, 20))
        b = data.draw(st.integers(2, 20))
        n = a * top + b * (top + 1)
        ms = build_marker_system(n, origin, tuple(gaps))
        assert check_congruency(ms)
        for k in range(1, ms.row_count + 1):
            assert check_two_gaps(ms, k)
            assert check_balanced(ms, k, ms.balance_windows[k - 1])


class TestMrkFormat:
    def test_roundtrip(self, tmp_path):
        ms = build_marker_system(200, 0, (3,))
        p = tmp_path / "m.mrk"
        write_mrk(p, ms)
        back = read_mrk(p, ms.gaps, ms.lo, ms.hi)
        assert back.positions == ms.positions
