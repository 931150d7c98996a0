"""Growth bounds: pulled-back entry sizes and their supremum."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from expray import (
    generator_address,
    golden_mean_address,
    growth_bounds,
    infinite_address,
    parse_address,
)
from expray.exceptions import AddressStructureError, DepthCapExhausted

TWO_PI = 2.0 * math.pi


def pulled(value: float, times: int) -> float:
    """Oracle: apply the inverse growth map t -> log(1 + t) repeatedly."""
    for _ in range(times):
        value = math.log1p(value)
    return value


def brute_force_sup(entries, extra_depth=60):
    """Oracle: largest pulled term over an explicit entry list."""
    return max(pulled(TWO_PI * abs(e), k) for k, e in enumerate(entries[:extra_depth]))


def test_all_zero_address_has_zero_growth():
    gb = growth_bounds(parse_address("(0)"))
    assert gb.t_star == 0.0
    assert gb.t_limsup == 0.0
    assert gb.exp_bounded


def test_first_entry_term_is_not_pulled_back():
    # the k = 1 term is the raw 2*pi*|entry|; for (1) that dominates
    gb = growth_bounds(parse_address("(1)"))
    assert gb.t_star == pytest.approx(TWO_PI, rel=1e-15)
    assert gb.t_limsup == 0.0


def test_zero_one_address_growth():
    # entry 1 is 0 (term 0), entry 2 is 1 pulled back once: log(1 + 2*pi)
    gb = growth_bounds(parse_address("0,(1)"))
    assert gb.t_star == pytest.approx(math.log1p(TWO_PI), rel=1e-15)
    assert gb.t_limsup == 0.0
    assert gb.exp_bounded


def test_leading_entry_dominates():
    gb = growth_bounds(parse_address("3,(1)"))
    assert gb.t_star == pytest.approx(3 * TWO_PI, rel=1e-15)


def test_golden_mean_growth():
    gb = growth_bounds(golden_mean_address(64))
    assert gb.t_star == pytest.approx(TWO_PI, rel=1e-15)
    assert gb.exp_bounded


@given(
    st.lists(st.integers(min_value=-9, max_value=9), min_size=0, max_size=5).map(tuple),
    st.lists(st.integers(min_value=-9, max_value=9), min_size=1, max_size=5).map(tuple),
)
def test_growth_matches_brute_force(prefix, cycle):
    a = infinite_address(prefix, cycle)
    gb = growth_bounds(a)
    period = len(prefix) + len(cycle)
    entries = a.entries(period + 60)
    assert gb.t_star == pytest.approx(brute_force_sup(entries, period + 60), abs=1e-15)
    assert gb.t_limsup == 0.0
    assert gb.exp_bounded
    # sup of pulled terms never exceeds the raw first-position ceiling
    bound = max(abs(e) for e in entries)
    assert 0.0 <= gb.t_star <= TWO_PI * bound + 1e-12


def test_intermediate_address_has_no_growth_bounds():
    with pytest.raises(AddressStructureError):
        growth_bounds(parse_address("1/2,inf"))


def test_generator_without_declared_bound_is_undecidable():
    a = generator_address(lambda k: k * k, cap=256)
    with pytest.raises(DepthCapExhausted):
        growth_bounds(a)


def test_generator_with_declared_bound_is_exact():
    a = generator_address(lambda k: (-1) ** k, cap=256, entry_bound=1)
    gb = growth_bounds(a)
    assert gb.t_star == pytest.approx(TWO_PI, rel=1e-15)
    assert gb.exp_bounded


def test_generator_overflow_terms_decide_unboundedness():
    # tower-sized entries make even the pulled terms infinite
    def tower(k: int) -> int:
        return 10 ** (500 * k)

    a = generator_address(tower, cap=8)
    gb = growth_bounds(a)
    assert math.isinf(gb.t_star)
    assert not gb.exp_bounded


def test_huge_explicit_entries_saturate():
    a = infinite_address((10 ** 400,), (0,))
    gb = growth_bounds(a)
    assert math.isinf(gb.t_star)
    assert gb.exp_bounded  # entries are bounded even though the sup overflows


def test_decision_uses_finitely_many_terms():
    gb = growth_bounds(parse_address("(5)"))
    assert gb.terms_computed == 1
    gb2 = growth_bounds(parse_address("0,0,0,(2)"))
    assert gb2.terms_computed <= 10
