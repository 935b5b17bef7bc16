from fractions import Fraction
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from confpoly.clopper_pearson import (
    binary_kl, binomial_tail, delta_bounds, exact_cp_upper, solve_delta,
)
from confpoly.errors import DomainError


def exact_tail(k, n, p):
    p = Fraction(p)
    return sum(math.comb(n, j) * p**j * (1 - p) ** (n - j) for j in range(k + 1))


def test_binary_kl_examples():
    assert binary_kl(0.3, 0.3) == 0.0
    assert binary_kl(0.0, 0.0) == 0.0
    assert binary_kl(0.5, 0.75) == pytest.approx(0.5 * math.log(2 / 3) + 0.5 * math.log(2), abs=1e-15)
    assert binary_kl(0.5, 0.75) == pytest.approx(0.1438410, abs=5e-8)
    assert binary_kl(0.0, 0.2) == pytest.approx(-math.log(0.8), abs=1e-15)


@pytest.mark.parametrize("x,y", [(1.2, 0.5), (-0.1, 0.5), (0.5, 0.0), (0.5, 1.0)])
def test_binary_kl_domain(x, y):
    with pytest.raises(DomainError):
        binary_kl(x, y)


@given(st.floats(0, 1), st.floats(1e-9, 1 - 1e-9))
def test_pinsker(x, y):
    assert binary_kl(x, y) >= 2 * (x - y) ** 2 - 1e-12


def test_delta_closed_form_at_zero_count():
    sol = solve_delta(0, 100, 0.001)
    assert not sol.clamped
    assert sol.delta == pytest.approx(1 - 0.001 ** (1 / 100), abs=1e-12)
    assert sol.delta == pytest.approx(0.0667457, abs=1e-7)


def test_delta_all_outcomes_clamped():
    sol = solve_delta(100, 100, 0.01)
    assert sol.clamped and sol.bound == 1.0 and sol.delta == 0.0


def test_delta_residual():
    sol = solve_delta(50, 100, 0.01)
    target = math.log(100) / 100
    assert target == pytest.approx(0.0460517, abs=1e-7)
    assert abs(binary_kl(0.5, 0.5 + sol.delta) - target) <= 1e-10


@pytest.mark.parametrize("args", [(-1, 10, 0.1), (11, 10, 0.1), (1, 0, 0.1), (1, 10, 0.0), (1, 10, 1.0)])
def test_delta_domain(args):
    with pytest.raises(DomainError):
        solve_delta(*args)


def test_binomial_tail_examples():
    assert binomial_tail(10, 10, 0.3) == 1.0
    assert binomial_tail(0, 17, 0.2) == pytest.approx(0.8**17, rel=1e-13)
    assert binomial_tail(5, 10, 0.5) == pytest.approx(638 / 1024, abs=1e-15)
    assert exact_tail(5, 10, Fraction(1, 2)) == Fraction(638, 1024)


@pytest.mark.parametrize("k,n,p", [(3, 20, "0.1"), (17, 40, "0.37"), (90, 200, "0.5"), (0, 50, "0.01")])
def test_binomial_tail_against_rational_sum(k, n, p):
    assert abs(binomial_tail(k, n, float(p)) - float(exact_tail(k, n, Fraction(p)))) < 1e-12


def test_exact_cp_examples():
    assert exact_cp_upper(0, 30, 0.05) == pytest.approx(1 - 0.05 ** (1 / 30), abs=1e-12)
    assert exact_cp_upper(0, 30, 0.05) == pytest.approx(solve_delta(0, 30, 0.05).bound, abs=1e-12)
    assert exact_cp_upper(7, 7, 0.05) == 1.0
    p = exact_cp_upper(50, 100, 0.01)
    assert abs(binomial_tail(50, 100, p) - 0.01) <= 1e-9


def test_exact_cp_against_beta_quantile():
    from scipy import stats
    for k, n, eps in [(3, 20, 0.1), (17, 40, 0.01), (120, 200, 0.001)]:
        assert exact_cp_upper(k, n, eps) == pytest.approx(stats.beta.ppf(1 - eps, k + 1, n - k), abs=1e-9)


def test_chernoff_hoeffding_bound():
    rng = np.random.default_rng(3)
    for _ in range(500):
        n = int(rng.integers(1, 300))
        k = int(rng.integers(0, n))
        x = k / n
        delta = rng.uniform(1e-6, 1 - x - 1e-9)
        assert binomial_tail(k, n, x + delta) <= math.exp(-n * binary_kl(x, x + delta)) * (1 + 1e-9)


def test_monotone_in_eps_and_n():
    bounds = [solve_delta(30, 100, e).bound for e in (0.1, 0.01, 0.001, 1e-6)]
    assert np.all(np.diff(bounds) >= 0)
    deltas = [solve_delta(n // 4, n, 0.01).delta for n in (40, 400, 4000, 40000)]
    assert np.all(np.diff(deltas) <= 0)


def test_vectorised_matches_scalar():
    ks = np.arange(0, 21)
    delta, bound, clamped, _ = delta_bounds(ks, 20, 0.01)
    for k in ks:
        sol = solve_delta(int(k), 20, 0.01)
        assert sol.bound == bound[k] and sol.clamped == clamped[k]
