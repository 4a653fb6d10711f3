import math
from fractions import Fraction

import numpy as np
import pytest

from ilc.complexity import (BudgetExhausted, ComplexityEstimate, ExponentialSampler, PeriodicSampler,
                            SolenoidSampler, Subst1dSampler, SturmianSampler, default_budget,
                            epsilon_entropy, estimate_N, estimate_curve, fit_scaling,
                            greedy_circle, periodic_counts)
from ilc.core import DegenerateInput, InsufficientWindow


def test_periodic_constant_in_L():
    sizes = [estimate_N(0.1, L, PeriodicSampler(), 500).size for L in (5, 20, 80)]
    assert len(set(sizes)) == 1
    assert sizes[0] <= 10


@pytest.mark.parametrize("eps", [Fraction(1, 10), Fraction(1, 7), Fraction(1, 4), Fraction(1, 20)])
def test_periodic_exact_chain(eps):
    c, c2 = periodic_counts(eps), periodic_counts(2 * eps) if 2 * eps <= Fraction(1, 4) else None
    assert c.N1 <= c.N3 <= c.N2
    if c2 is not None:
        assert c2.N2 <= c.N1


def test_periodic_counts_values():
    c = periodic_counts(Fraction(1, 10))
    assert (c.N1, c.N2, c.N3) == (6, 11, 10)


def test_greedy_circle_between_bounds():
    for eps in (0.05, 0.1, 0.2):
        c = periodic_counts(eps)
        g = greedy_circle(eps, 3000, seed=1)
        assert c.N1 <= g <= c.N3


def test_solenoid_bounded():
    S = SolenoidSampler(160, 0.2)
    est = estimate_curve(0.2, [10, 20, 40, 80, 160], S, 600)
    sizes = [e.size for e in est]
    assert sizes[-1] == sizes[-2] == sizes[-3]
    assert not any(e.saturated for e in est)


def test_subst1d_grows_with_L():
    S = Subst1dSampler(40, 0.45)
    sizes = [estimate_N(0.45, L, S, 800).size for L in (5, 20, 40)]
    assert sizes[0] < sizes[1] < sizes[2]


def test_monotone_in_eps():
    S = SolenoidSampler(40, 0.05)
    sizes = [estimate_N(e, 40, S, 800).size for e in (0.05, 0.1, 0.2, 0.4)]
    assert all(b <= a for a, b in zip(sizes, sizes[1:]))


def test_doubling_budget_never_decreases():
    S = Subst1dSampler(20, 0.3)
    a = estimate_N(0.3, 20, S, 300, seed=4).size
    b = estimate_N(0.3, 20, S, 600, seed=4).size
    assert b >= a


def test_flc_fixture_linear_growth():
    # for an FLC system N(eps, L) is about c (L + 2/eps) / eps
    S = SturmianSampler()
    eps = 0.1
    Ls = [5, 10, 20, 40]
    sizes = np.array([estimate_N(eps, L, S, 3000).size for L in Ls], float)
    ratio = sizes / ((np.array(Ls) + 2 / eps) / eps)
    assert ratio.max() / ratio.min() < 1.5


def test_exponential_entropy():
    E = ExponentialSampler(12)
    est = [estimate_N(0.5, L, E, 20000) for L in (4, 6, 8, 10)]
    h = epsilon_entropy(est)
    assert h.value == pytest.approx(math.log(2), rel=0.1)


def test_periodic_entropy_zero():
    est = [estimate_N(0.1, L, PeriodicSampler(), 300) for L in (10, 100, 1000, 5000)]
    near = epsilon_entropy(est[:2]).value
    far = epsilon_entropy(est[2:]).value
    assert far < near / 10
    assert far < 0.01


def test_budget_exhausted_and_saturation():
    E = ExponentialSampler(16)
    e = estimate_N(0.5, 16, E, 50)
    assert e.saturated
    with pytest.raises(BudgetExhausted):
        estimate_N(0.5, 16, E, 50, strict=True)


def test_budget_env(monkeypatch):
    monkeypatch.setenv("ILC_BUDGET", "123")
    assert default_budget() == 123
    assert estimate_N(0.1, 5, PeriodicSampler()).samples == 123


def test_insufficient_window():
    S = Subst1dSampler(20, 0.2)
    with pytest.raises(InsufficientWindow):
        estimate_N(0.1, 20, S, 10)
    with pytest.raises(InsufficientWindow):
        estimate_N(0.2, 40, S, 10)


def test_bad_arguments():
    with pytest.raises(ValueError):
        estimate_N(1.5, 10, PeriodicSampler(), 10)
    with pytest.raises(ValueError):
        estimate_N(0.1, 0, PeriodicSampler(), 10)


def fake(L, N):
    return ComplexityEstimate(0.1, L, N, 1000, 0, False)


def test_fit_recovers_exponent():
    Ls = [10, 20, 40, 80, 160]
    est = [fake(L, round(3 * (1 + L) ** 2)) for L in Ls]
    fit = fit_scaling(est)
    assert fit.alpha == pytest.approx(2, abs=1e-3)
    assert fit.ci[0] <= fit.alpha <= fit.ci[1]


def test_fit_degenerate():
    with pytest.raises(DegenerateInput):
        fit_scaling([fake(L, 5) for L in (10, 20, 40, 80)])
    with pytest.raises(DegenerateInput):
        fit_scaling([fake(L, 5) for L in (10, 11, 12, 13, 14)])
    with pytest.raises(DegenerateInput):
        epsilon_entropy([fake(10, 5)])


def test_estimate_records_semantics():
    e = estimate_N(0.1, 5, PeriodicSampler(), 50, seed=9)
    assert e.seed == 9 and "N3" in e.semantics
    assert e.N1_upper == e.N3_lower == e.size
