"""Level-set hypersurfaces: lightlike test, null generators and their foliation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .curvature import MetricSpec, christoffel, metric_jet
from .errors import DomainError, SurfaceError
from .expr import Expression, parse
from .jet import eval_jet2
from .ode import StepControl, dormand_prince

ON_SURFACE_TOL = 1e-10


@dataclass(frozen=True)
class HypersurfaceSpec:
    """The level set ``F = 0`` over a metric's chart, with seed points on it."""

    name: str
    F: Expression
    seeds: tuple[tuple[float, ...], ...] = ()

    @classmethod
    def from_string(
        cls,
        name: str,
        source: str,
        chart: Sequence[str],
        params: Mapping[str, float] | None = None,
        seeds: Sequence[Sequence[float]] = (),
    ) -> "HypersurfaceSpec":
        return cls(name, parse(source, chart, params or {}), tuple(tuple(float(c) for c in p) for p in seeds))

    def scaled(self, phi: str | Expression) -> "HypersurfaceSpec":
        """Same surface described by ``phi * F``."""
        if isinstance(phi, str):
            phi = parse(phi, self.F.chart, dict.fromkeys(self.F.params, 0.0))
        return HypersurfaceSpec(f"({phi})*{self.name}", phi.combine("*", self.F), self.seeds)


@dataclass
class LightlikeReport:
    point: tuple[float, ...]
    F: float
    normal: np.ndarray  # N_i = d_i F
    norm_scalar: float  # g^{ij} N_i N_j
    scale: float
    tol: float

    @property
    def passed(self) -> bool:
        return abs(self.norm_scalar) < self.tol * self.scale


def _surface_jet(surf: HypersurfaceSpec, point, values):
    try:
        return eval_jet2(surf.F, point, values)
    except DomainError:
        raise
    except (ValueError, ZeroDivisionError) as exc:
        raise SurfaceError(f"cannot evaluate {surf.name} at {tuple(point)}: {exc}") from exc


def lightlike_test(
    spec: MetricSpec,
    surf: HypersurfaceSpec,
    point: Sequence[float],
    params: Mapping[str, float] | None = None,
    tol: float = 1e-9,
) -> LightlikeReport:
    """Whether the surface normal is null at ``point``.

    ``scale`` is ``|N|^2 max|g^ij|`` so the test is insensitive to the size
    of ``F`` and of the metric components.
    """
    values = spec.resolve_params(params)
    point = tuple(float(c) for c in point)
    fj = _surface_jet(surf, point, values)
    if abs(fj.value) > ON_SURFACE_TOL:
        raise SurfaceError(f"point {point} is off {surf.name} (F = {fj.value:.3e})")
    N = fj.grad
    if not np.any(N):
        raise SurfaceError(f"dF vanishes at {point}; the level set is not a hypersurface there")
    jet = metric_jet(spec, point, values, order=0)
    scalar = float(N @ jet.g_inv @ N)
    scale = float(N @ N) * float(np.max(np.abs(jet.g_inv)))
    return LightlikeReport(point, fj.value, N, scalar, scale, tol)


def generator_field(
    spec: MetricSpec,
    surf: HypersurfaceSpec,
    point: Sequence[float],
    params: Mapping[str, float] | None = None,
) -> np.ndarray:
    """``l^i = g^ij d_j F``: normal to the surface and, the normal being null, tangent to it."""
    rep = lightlike_test(spec, surf, point, params)
    if not rep.passed:
        raise SurfaceError(
            f"{surf.name} is not lightlike at {rep.point}: g(N, N) = {rep.norm_scalar:.3e}"
        )
    jet = metric_jet(spec, point, spec.resolve_params(params), order=0)
    return jet.g_inv @ rep.normal


def _field_and_covariant_derivative(spec, surf, x, values):
    """``l = g^-1 dF`` and ``nabla_l l``, both exact from the jets."""
    jet = metric_jet(spec, x, values, order=1, check=False)
    fj = eval_jet2(surf.F, x, values)
    gi = jet.g_inv
    ell = gi @ fj.grad
    # d_j l^i = -g^ia (d_j g_ab) g^bk F_k + g^ik F_kj
    dell = -np.einsum("ia,jab,b->ij", gi, jet.dg, ell) + gi @ fj.hess
    acc = dell @ ell + np.einsum("ijk,j,k->i", christoffel(jet).gamma, ell, ell)
    return fj.value, ell, acc, jet.g


def induced_kernel(
    spec: MetricSpec,
    surf: HypersurfaceSpec,
    point: Sequence[float],
    params: Mapping[str, float] | None = None,
):
    """Eigenvalues of the induced metric on a tangent basis, and its kernel direction.

    The tangent basis is the Euclidean null space of ``dF``; for a lightlike
    surface one eigenvalue vanishes and its eigenvector maps to a multiple of
    the generator.
    """
    values = spec.resolve_params(params)
    N = eval_jet2(surf.F, point, values).grad
    _, _, vt = np.linalg.svd(N[None, :])
    B = vt[1:].T  # columns span the tangent space
    g = metric_jet(spec, point, values, order=0).g
    h = B.T @ g @ B
    w, v = np.linalg.eigh(h)
    k = int(np.argmin(np.abs(w)))
    return w, B @ v[:, k]


@dataclass
class FoliationReport:
    surface: str
    seed: tuple[float, ...]
    s: np.ndarray
    x: np.ndarray
    max_F: float
    max_null: float  # |g(l, l)| / |l|^2
    max_residual: float  # pregeodesic residual
    termination: str
    tolerances: dict = field(default_factory=lambda: {"F": 1e-7, "null": 1e-8, "geodesic": 1e-6})

    @property
    def passed(self) -> bool:
        t = self.tolerances
        return (
            self.termination == "end"
            and self.max_F < t["F"]
            and self.max_null < t["null"]
            and self.max_residual < t["geodesic"]
        )


def foliation_check(
    spec: MetricSpec,
    surf: HypersurfaceSpec,
    seed: Sequence[float],
    s_end: float = 20.0,
    params: Mapping[str, float] | None = None,
    control: StepControl | None = None,
) -> FoliationReport:
    """Follow the generator through ``seed`` and test the three generator claims.

    Along the integral curve of ``l`` it records the largest ``|F|`` (the curve
    stays in the surface), the largest relative null norm of ``l``, and the
    pregeodesic residual ``|nabla_l l - kappa l| / |l|^2`` with ``kappa``
    fitted by least squares.
    """
    values = spec.resolve_params(params)
    seed = tuple(float(c) for c in seed)
    generator_field(spec, surf, seed, values)  # checks the seed
    control = control or StepControl(max_step=1.0)

    def fun(s, x):
        jet = metric_jet(spec, x, values, order=0, check=False)
        return jet.g_inv @ eval_jet2(surf.F, x, values).grad

    sol = dormand_prince(fun, 0.0, np.array(seed), s_end, control)
    max_F = max_null = max_res = 0.0
    for x in sol.y:
        F, ell, acc, g = _field_and_covariant_derivative(spec, surf, x, values)
        ll = float(ell @ ell)
        kappa = (acc @ ell) / ll
        max_F = max(max_F, abs(F))
        max_null = max(max_null, abs(float(ell @ g @ ell)) / ll)
        max_res = max(max_res, float(np.linalg.norm(acc - kappa * ell)) / ll)
    return FoliationReport(surf.name, seed, sol.s, sol.y, max_F, max_null, max_res, sol.status)
