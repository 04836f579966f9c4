import numpy as np
import pytest

from nullcone.curvature import metric_at
from nullcone.errors import StepUnderflowError
from nullcone.geodesic import (
    CSV_COLUMNS,
    GeodesicState,
    Trajectory,
    conformal_equation_residual,
    conformal_invariance_check,
    integrate,
    is_null,
    null_project,
    path_distance,
    principal_congruence_check,
)
from nullcone.ode import StepControl


def null_state(spec, x, xi, component=0, params=None):
    return GeodesicState(x, null_project(metric_at(spec, x, params), xi, component))


def test_null_project():
    g = np.diag([1.0, -1, -1, -1])
    xi = null_project(g, [0.9, 0.6, 0.8, 0.0])
    assert xi[0] == pytest.approx(1.0)
    assert xi @ g @ xi == pytest.approx(0.0, abs=1e-15)
    # off-diagonal metric with a zero diagonal entry falls back to the linear solution
    h = np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, -1, 0], [0, 0, 0, -1.0]])
    v = null_project(h, [0.3, 1.0, 0.5, 0.5])
    assert abs(v @ h @ v) < 1e-15
    with pytest.raises(ValueError):
        null_project(np.diag([1.0, -1, -1, -1]), [0.0, 0.0, 0.0, 0.0], 1)


def test_minkowski_straight_lines(catalog):
    spec = catalog["minkowski"].spec
    st = GeodesicState((0, 1, 2, 3), (1, 0.6, 0.8, 0))
    traj = integrate(spec, st, 20.0)
    assert traj.termination == "end"
    np.testing.assert_allclose(traj.x, st.x + np.outer(traj.s, st.xi), atol=1e-12)
    assert traj.null_drift() < 1e-15


def test_schwarzschild_radial_null_closed_form(catalog):
    spec = catalog["schwarzschild"].spec
    r0 = 10.0
    st = null_state(spec, (0, r0, 1.0, 0.0), (1.0, 1.0 - 2 / r0, 0, 0), component=1)
    traj = integrate(spec, st, 30.0)
    r = traj.x[:, 1]
    # outgoing: t - r* is constant, r* = r + 2M log(r/2M - 1)
    tortoise = r + 2 * np.log(r / 2 - 1)
    expected_t = tortoise - (r0 + 2 * np.log(r0 / 2 - 1))
    np.testing.assert_allclose(traj.x[:, 0], expected_t, atol=1e-8)
    # affine parameter: E = (1 - 2M/r) dt/ds = 1 - 2/r0 and dr/ds = E
    np.testing.assert_allclose(r, r0 + (1 - 2 / r0) * traj.s, atol=1e-8)


def test_killing_quantities_conserved(catalog):
    spec = catalog["kerr"].spec
    st = null_state(spec, (0, 12, 1.3, 0.2), (1.0, -0.3, 0.02, 0.01))
    traj = integrate(spec, st, 25.0)
    g = np.array([metric_at(spec, x) for x in traj.x])
    energy = np.einsum("nj,nj->n", g[:, 0, :], traj.xi)
    angular = np.einsum("nj,nj->n", g[:, 3, :], traj.xi)
    assert np.ptp(energy) < 1e-9 * abs(energy[0])
    assert np.ptp(angular) < 1e-9 * max(1.0, abs(angular[0]))
    assert traj.null_drift() < 1e-9


def test_affine_rescaling(catalog):
    spec = catalog["schwarzschild"].spec
    st = null_state(spec, (0, 9, 1.2, 0.0), (1.0, 0.3, 0.0, 0.05))
    a = integrate(spec, st, 10.0)
    b = integrate(spec, GeodesicState(st.x, 2.5 * st.xi), 4.0)
    np.testing.assert_allclose(b.x[-1], a.x[-1], atol=1e-8)
    np.testing.assert_allclose(b.xi[-1], 2.5 * a.xi[-1], atol=1e-8)


def test_domain_exit_and_underflow(catalog):
    ef = catalog["eddington-finkelstein"].spec
    # ingoing null ray in EF crosses the horizon and ends at the singularity
    st = null_state(ef, (0, 3, 1.2, 0), (0.0, -1.0, 0, 0), component=0)
    traj = integrate(ef, st, 50.0)
    assert traj.termination in ("domain_exit", "max_steps") or traj.x[-1, 1] < 2
    assert traj.x[-1, 1] < 2.0
    # Schwarzschild coordinates stall at the horizon
    sw = catalog["schwarzschild"].spec
    st = null_state(sw, (0, 3, 1.2, 0), (1.0, -0.3, 0, 0), component=1)
    try:
        traj = integrate(sw, st, 50.0, control=StepControl(max_steps=5000))
        assert traj.termination != "end"
        assert traj.x[-1, 1] > 2.0
    except StepUnderflowError as exc:
        assert exc.trajectory is not None and len(exc.trajectory) > 1


def test_csv_and_json_round_trip(catalog):
    spec = catalog["schwarzschild"].spec
    st = null_state(spec, (0, 9, 1.2, 0.0), (1.0, 0.3, 0.0, 0.05))
    traj = integrate(spec, st, 5.0)
    lines = traj.to_csv().splitlines()
    assert lines[0].split(",") == list(CSV_COLUMNS)
    assert len(lines) == len(traj) + 1
    back = Trajectory.from_json(traj.to_json())
    np.testing.assert_array_equal(back.x, traj.x)
    np.testing.assert_array_equal(back.accel, traj.accel)
    assert back.termination == traj.termination
    assert traj.to_json() == back.to_json()


def test_position_interpolates(catalog):
    spec = catalog["minkowski"].spec
    traj = integrate(spec, GeodesicState((0, 0, 0, 0), (1, 1, 0, 0)), 3.0)
    np.testing.assert_allclose(traj.position(1.234), [1.234, 1.234, 0, 0], atol=1e-14)
    with pytest.raises(ValueError):
        traj.position(7.0)


def test_path_distance_of_offset_lines(catalog):
    spec = catalog["minkowski"].spec
    a = integrate(spec, GeodesicState((0, 0, 0, 0), (1, 1, 0, 0)), 5.0)
    b = integrate(spec, GeodesicState((0, 0, 1e-3, 0), (1, 1, 0, 0)), 5.0)
    assert path_distance(a, b) == pytest.approx(1e-3, rel=1e-9)
    # reparametrized copy of the same line
    c = integrate(spec, GeodesicState((0, 0, 0, 0), (3, 3, 0, 0)), 5.0 / 3)
    assert path_distance(a, c) < 1e-12


@pytest.mark.parametrize(
    "name, sigma, point, direction",
    [
        ("minkowski", "exp(0.2*t)", (0, 0, 0, 0), (1, 0.6, 0.8, 0)),
        ("minkowski", "1 + 0.1/(1 + x^2 + y^2 + z^2)", (0, -3, 0.5, 0), (1, 1, 0, 0)),
        ("schwarzschild", "1 + 0.1/r", (0, 10, 1.2, 0), (1, 0.5, 0, 0.02)),
    ],
)
def test_conformal_null_rays_coincide(catalog, name, sigma, point, direction):
    spec = catalog[name].spec
    st = null_state(spec, point, direction)
    rep = conformal_invariance_check(spec, sigma, st, 20.0)
    assert rep.null_distance < 1e-6
    assert rep.control_distance > 1e-2
    assert rep.passed and not rep.constant_sigma


def test_conformal_constant_factor(catalog):
    spec = catalog["minkowski"].spec
    st = null_state(spec, (0, 0, 0, 0), (1, 0.6, 0.8, 0))
    rep = conformal_invariance_check(spec, "3", st, 20.0)
    assert rep.constant_sigma
    assert rep.null_distance < 1e-9 and rep.control_distance < 1e-9
    assert rep.passed


def test_conformal_rejects_non_null(catalog):
    spec = catalog["minkowski"].spec
    with pytest.raises(ValueError):
        conformal_invariance_check(spec, "exp(0.2*t)", GeodesicState((0, 0, 0, 0), (1, 0.2, 0, 0)), 5.0)


def test_conformal_equation_level(catalog):
    spec = catalog["schwarzschild"].spec
    st = null_state(spec, (0, 10, 1.2, 0), (1, 0.5, 0, 0.02))
    traj = integrate(spec, st, 20.0)
    assert conformal_equation_residual(spec, "1 + 0.1/r", traj) < 1e-10
    # a timelike geodesic does not satisfy it
    timelike = integrate(spec, GeodesicState(st.x, (1.0, 0.1, 0, 0.0)), 20.0)
    assert conformal_equation_residual(spec, "exp(0.2*t)", timelike) > 1e-3


def test_is_null(catalog):
    spec = catalog["minkowski"].spec
    assert is_null(spec, GeodesicState((0, 0, 0, 0), (1, 1, 0, 0)))
    assert not is_null(spec, GeodesicState((0, 0, 0, 0), (1, 0.9, 0, 0)))


@pytest.mark.parametrize("name", ["schwarzschild", "kerr"])
def test_principal_congruences_pregeodesic(catalog, name):
    rep = principal_congruence_check(catalog[name].spec, (0, 30, 1.2, 0.3), s_end=20.0)
    assert rep.type == "D"
    assert len(rep.curves) == 2
    for c in rep.curves:
        assert c.multiplicity == 2 and not c.failure
        assert c.max_residual < 1e-5
    assert rep.passed


def test_principal_congruence_type_o(catalog):
    rep = principal_congruence_check(catalog["minkowski"].spec, (0, 0, 0, 0))
    assert rep.type == "O" and not rep.curves and not rep.passed
