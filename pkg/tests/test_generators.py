import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from strictform.generators import (
    CHACON_RULES,
    GeneratorSpec,
    HorizonExhausted,
    bernoulli_window,
    chacon_oracle,
    full_shift_oracle,
    parse_spec,
    periodic_oracle,
    substitution_oracle,
    sturmian_oracle,
    sturmian_word,
)
from strictform.measures import cesaro_spread

F = Fraction
GOLDEN = F(309017, 500000)  # rational stand-in for 1/phi


def assert_factor_closed(oracle, n):
    longer = set(oracle.words(n + 1))
    shorter = set(oracle.words(n))
    for w in longer:
        assert w[:-1] in shorter and w[1:] in shorter


class TestPeriodicOracle:
    def test_words_of_12(self):
        assert set(periodic_oracle("12").words(2)) == {"12", "21"}

    def test_constant(self):
        assert set(periodic_oracle("1").words(4)) == {"1111"}

    def test_cyclic_shifts(self):
        assert set(periodic_oracle("112").words(3)) == {"112", "121", "211"}

    def test_factor_closed(self):
        assert_factor_closed(periodic_oracle("1121221"), 5)

    def test_horizon_enforced(self):
        o = periodic_oracle("12", horizon=8)
        with pytest.raises(HorizonExhausted):
            o.contains("121212121")


class TestFullShiftOracle:
    def test_word_count(self):
        assert len(list(full_shift_oracle(2).words(3))) == 8

    def test_membership(self):
        o = full_shift_oracle(2)
        assert o.contains("121")
        assert not o.contains("131")


class TestSturmian:
    def test_frozen_golden_prefix(self):
        # independent evaluation of the floor formula gives 01011
        assert sturmian_word(GOLDEN, F(0), 5) == "01011"

    def test_matches_direct_floor_formula(self):
        a, r = F(7040, 10007), F(1, 3)
        expect = "".join(
            str(math.floor((i + 1) * a + r) - math.floor(i * a + r))
            for i in range(40)
        )
        assert sturmian_word(a, r, 40) == expect

    def test_near_zero_alpha(self):
        assert sturmian_word(F(1, 1000), F(0), 10) == "0" * 10

    def test_denominator_too_small(self):
        with pytest.raises(ValueError):
            sturmian_word(F(2, 5), F(0), 10)

    def test_complement_symmetry(self):
        n = 60
        w = sturmian_word(GOLDEN, F(0), n)
        wc = sturmian_word(1 - GOLDEN, F(0), n)
        flipped = "".join("1" if c == "0" else "0" for c in w)
        # boundary effects allowed at a bounded number of positions
        diffs = sum(1 for a, b in zip(wc, flipped) if a != b)
        assert diffs <= 2

    def test_complexity_n_plus_one(self):
        # the unique-ergodicity signature: exactly n+1 factors of length n
        o = sturmian_oracle(GOLDEN, F(0), 16)
        for n in range(1, 13):
            assert len(list(o.words(n))) == n + 1

    def test_factor_closed(self):
        assert_factor_closed(sturmian_oracle(GOLDEN, F(0), 10), 6)

    def test_cesaro_decay_envelope(self):
        w = sturmian_word(GOLDEN, F(0), 4096)
        spreads = [cesaro_spread(w, "1", n) for n in (8, 16, 32, 64, 128)]
        assert all(b <= a for a, b in zip(spreads, spreads[1:]))
        assert spreads[-1] < spreads[0]


class TestSubstitution:
    def test_chacon_square(self):
        assert chacon_oracle(2).text == "0010001010010"

    def test_identity_rule(self):
        o = substitution_oracle({"3": "3"}, "3", 5)
        assert set(o.words(1)) == {"3"}

    def test_factor_closed(self):
        assert_factor_closed(chacon_oracle(4), 6)

    def test_erasing_rejected(self):
        with pytest.raises(ValueError):
            substitution_oracle({"0": "", "1": "1"}, "0", 3)


class TestBernoulli:
    def test_deterministic(self):
        a = bernoulli_window(F(1, 2), 42, 64)
        b = bernoulli_window(F(1, 2), 42, 64)
        assert a == b

    def test_bit_stable_reference(self):
        # frozen from an independent splitmix64 implementation
        assert bernoulli_window(F(1, 2), 42, 16) == "0111101010110001"

    def test_seeds_differ(self):
        assert bernoulli_window(F(1, 2), 1, 64) != bernoulli_window(F(1, 2), 2, 64)

    def test_fair_coin_frequency(self):
        w = bernoulli_window(F(1, 2), 7, 10**5)
        ones = w.count("1")
        assert abs(F(ones, 10**5) - F(1, 2)) < F(1, 100)

    def test_p_out_of_range(self):
        with pytest.raises(ValueError):
            bernoulli_window(F(1), 0, 4)


class TestParseSpec:
    def test_periodic(self):
        spec = parse_spec("periodic:112")
        assert spec.word(6) == "112112"

    def test_sturmian_with_rho(self):
        spec = parse_spec("sturmian:309017/500000:rho=1/3")
        assert spec.alpha == GOLDEN and spec.rho == F(1, 3)

    def test_chacon(self):
        assert parse_spec("chacon").word(13) == "0010001010010"

    def test_bernoulli(self):
        spec = parse_spec("bernoulli:1/2:seed=42")
        assert spec.word(16) == "0111101010110001"

    def test_full(self):
        o = parse_spec("full:2").oracle(10)
        assert o.contains("12")

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            parse_spec("weird:1")

    def test_bad_option(self):
        with pytest.raises(ValueError):
            parse_spec("sturmian:1/3:phase=2")

    @given(st.sampled_from(["periodic:12", "chacon", "bernoulli:1/3:seed=5"]),
           st.integers(8, 40))
    def test_word_prefix_stability(self, spec_str, n):
        spec = parse_spec(spec_str)
        assert spec.word(n + 5)[:n] == spec.word(n)
