import numpy as np
import pytest

from nullcone.errors import SurfaceError
from nullcone.lightlike import HypersurfaceSpec, foliation_check, generator_field, induced_kernel, lightlike_test


def surface(catalog, metric, name):
    return catalog[metric].spec, catalog[metric].surfaces[name]


@pytest.mark.parametrize(
    "metric, name",
    [("minkowski", "null_plane"), ("minkowski", "null_cone"), ("eddington-finkelstein", "horizon")],
)
def test_generators_foliate(catalog, metric, name):
    spec, surf = surface(catalog, metric, name)
    assert surf.seeds
    for seed in surf.seeds:
        assert lightlike_test(spec, surf, seed).passed
        rep = foliation_check(spec, surf, seed, 20.0)
        assert rep.termination == "end"
        assert rep.max_F < 1e-7 and rep.max_null < 1e-8 and rep.max_residual < 1e-6
        assert rep.passed


def test_horizon_generator_closed_form(catalog):
    spec, surf = surface(catalog, "eddington-finkelstein", "horizon")
    ell = generator_field(spec, surf, (1.0, 2.0, 1.1, 0.4))
    np.testing.assert_allclose(ell, [-1.0, 0, 0, 0], atol=1e-15)
    for M in (0.5, 3.0):
        s = HypersurfaceSpec.from_string("h", "r - 2*M", spec.chart, {"M": M})
        assert lightlike_test(spec, s, (0, 2 * M, 1.0, 0), {"M": M}).passed


def test_spacelike_and_timelike_surfaces(catalog):
    spec, surf = surface(catalog, "minkowski", "spacelike")
    rep = lightlike_test(spec, surf, (0, 1, 2, 3))
    assert not rep.passed and rep.norm_scalar == pytest.approx(1.0)
    with pytest.raises(SurfaceError):
        generator_field(spec, surf, (0, 1, 2, 3))
    sw = catalog["schwarzschild"].spec
    tube = HypersurfaceSpec.from_string("tube", "r - 3", sw.chart, {"M": 1})
    assert not lightlike_test(sw, tube, (0, 3, 1, 0)).passed


def test_defining_function_rescaling(catalog):
    spec, surf = surface(catalog, "minkowski", "null_plane")
    scaled = surf.scaled("1 + 0.5*sin(x)")
    for seed in surf.seeds:
        assert lightlike_test(spec, scaled, seed).passed
        assert foliation_check(spec, scaled, seed, 20.0).passed


def test_off_surface_and_singular_points(catalog):
    spec, surf = surface(catalog, "minkowski", "null_plane")
    with pytest.raises(SurfaceError):
        lightlike_test(spec, surf, (1, 0, 0, 0))
    square = HypersurfaceSpec.from_string("sq", "(t - x)^2", spec.chart)
    with pytest.raises(SurfaceError):
        lightlike_test(spec, square, (1, 1, 0, 0))


def test_induced_metric_degenerate_along_generator(catalog):
    for metric, name in [("minkowski", "null_cone"), ("eddington-finkelstein", "horizon")]:
        spec, surf = surface(catalog, metric, name)
        seed = surf.seeds[0]
        w, v = induced_kernel(spec, surf, seed)
        assert np.sort(np.abs(w))[0] < 1e-12 * np.max(np.abs(w))
        ell = generator_field(spec, surf, seed)
        cos = abs(v @ ell) / (np.linalg.norm(v) * np.linalg.norm(ell))
        assert cos == pytest.approx(1.0, abs=1e-10)
    # spacelike surface: nondegenerate
    spec, surf = surface(catalog, "minkowski", "spacelike")
    w, _ = induced_kernel(spec, surf, (0, 1, 2, 3))
    assert np.min(np.abs(w)) > 0.5
