import numpy as np
import pytest

from nullcone.errors import DomainError
from nullcone.ode import StepControl, dormand_prince, hermite, hermite5


def oscillator(s, y):
    return np.array([y[1], -y[0]])


def test_harmonic_oscillator_accuracy():
    sol = dormand_prince(oscillator, 0.0, np.array([1.0, 0.0]), 20.0, StepControl(rtol=1e-11, atol=1e-13))
    assert sol.status == "end"
    assert sol.s[-1] == 20.0
    np.testing.assert_allclose(sol.y[:, 0], np.cos(sol.s), atol=1e-9)
    np.testing.assert_allclose(sol.y[:, 1], -np.sin(sol.s), atol=1e-9)


def test_backward_integration():
    sol = dormand_prince(oscillator, 0.0, np.array([1.0, 0.0]), -5.0)
    assert sol.s[-1] == -5.0
    assert sol.y[-1, 0] == pytest.approx(np.cos(5.0), abs=1e-8)


def test_convergence_order():
    # exp growth; error should drop roughly like tol
    errs = []
    for tol in (1e-6, 1e-9):
        sol = dormand_prince(lambda s, y: y, 0.0, np.array([1.0]), 2.0, StepControl(rtol=tol, atol=tol))
        errs.append(abs(sol.y[-1, 0] - np.exp(2.0)))
    assert errs[1] < errs[0] / 100


def test_event_located_on_true_step():
    sol = dormand_prince(oscillator, 0.0, np.array([1.0, 0.0]), 10.0, event=lambda y: y[0])
    assert sol.status == "event"
    assert sol.s[-1] == pytest.approx(np.pi / 2, abs=1e-9)
    assert abs(sol.y[-1, 0]) < 1e-12


def test_domain_exit():
    def fun(s, y):
        if y[0] > 1.5:
            raise DomainError("outside")
        return np.array([1.0])

    sol = dormand_prince(fun, 0.0, np.array([0.0]), 5.0)
    assert sol.status == "domain_exit"
    assert 1.4 < sol.y[-1, 0] <= 1.5


def test_step_underflow():
    # finite-time blowup at s = 1
    sol = dormand_prince(lambda s, y: y**2, 0.0, np.array([1.0]), 2.0, StepControl(min_step=1e-10))
    assert sol.status in ("step_underflow", "domain_exit")
    assert sol.s[-1] < 1.0


def test_max_steps():
    sol = dormand_prince(oscillator, 0.0, np.array([1.0, 0.0]), 100.0, StepControl(max_step=0.1, max_steps=10))
    assert sol.status == "max_steps"


def test_max_step_respected():
    sol = dormand_prince(oscillator, 0.0, np.array([1.0, 0.0]), 5.0, StepControl(max_step=0.25))
    assert np.max(np.diff(sol.s)) <= 0.25 + 1e-15


def test_hermite_interpolants_exact_on_polynomials():
    p = np.polynomial.Polynomial([0.3, -1.0, 0.5, 2.0, -0.7, 0.2])
    d, a = p.deriv(), p.deriv(2)
    s0, s1 = 0.4, 1.3
    for s in np.linspace(s0, s1, 7):
        val = hermite5(s0, p(s0), d(s0), a(s0), s1, p(s1), d(s1), a(s1), s)
        assert val == pytest.approx(p(s), abs=1e-13)
        der = hermite5(s0, p(s0), d(s0), a(s0), s1, p(s1), d(s1), a(s1), s, derivative=True)
        assert der == pytest.approx(d(s), abs=1e-12)
    q = np.polynomial.Polynomial([1.0, 2.0, -3.0, 0.5])
    assert hermite(s0, q(s0), q.deriv()(s0), s1, q(s1), q.deriv()(s1), 0.9) == pytest.approx(q(0.9))
