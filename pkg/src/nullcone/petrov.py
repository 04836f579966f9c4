"""Weyl scalars, the principal-direction quartic and Petrov classification."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .curvature import MetricSpec, curvature_at
from .errors import FrameInconsistencyError
from .nullframe import (
    INFINITY,
    NullTetrad,
    build_tetrad,
    frame_components,
    is_infinite,
    lorentz_transform,
    real_null_direction,
)
from .quartic import ProjectiveRoots, solve_projective_quartic

# Frame index quadruples (0-based, e1..e4 -> 0..3) of the scalars a_u and b_u.
A_INDICES = ((0, 1, 0, 1), (0, 1, 0, 3), (0, 1, 2, 3), (0, 3, 2, 3), (2, 3, 2, 3))
B_INDICES = ((0, 2, 0, 2), (0, 2, 0, 3), (0, 2, 1, 3), (0, 3, 1, 3), (1, 3, 1, 3))

PARTITION_TYPES = {
    (1, 1, 1, 1): "I",
    (2, 1, 1): "II",
    (2, 2): "D",
    (3, 1): "III",
    (4,): "N",
}


def _c(C, *idx):
    return C[tuple(i - 1 for i in idx)]


def algebraic_conditions(C: np.ndarray) -> np.ndarray:
    """The eleven linear conditions on frame Weyl components, as residuals (all zero when they hold)."""
    return np.array([
        _c(C, 1, 2, 3, 4) - _c(C, 1, 3, 2, 4) + _c(C, 1, 4, 2, 3),
        _c(C, 1, 2, 2, 4),
        _c(C, 1, 3, 3, 4),
        _c(C, 1, 2, 1, 3),
        _c(C, 2, 4, 3, 4),
        _c(C, 1, 3, 1, 4) - _c(C, 1, 3, 2, 3),
        _c(C, 1, 4, 2, 4) - _c(C, 2, 3, 2, 4),
        _c(C, 1, 2, 1, 4) + _c(C, 1, 2, 2, 3),
        _c(C, 1, 4, 3, 4) + _c(C, 2, 3, 3, 4),
        _c(C, 1, 4, 1, 4) - _c(C, 2, 3, 2, 3),
        _c(C, 2, 3, 2, 3) - _c(C, 1, 2, 3, 4) - _c(C, 1, 3, 2, 4),
    ])


@dataclass(frozen=True)
class WeylScalars:
    a: np.ndarray  # a_0..a_4
    b: np.ndarray  # b_0..b_4
    condition_residual: float = 0.0
    conjugacy_residual: float = 0.0


def extract_scalars(frameC: np.ndarray, tol: float = 1e-10) -> WeylScalars:
    """Read off ``a_u`` and ``b_u`` and check ``b_u = conj(a_u)``.

    ``tol`` is relative to the largest frame component; the algebraic
    conditions are only recorded as a diagnostic.
    """
    a = np.array([frameC[i] for i in A_INDICES], dtype=complex)
    b = np.array([frameC[i] for i in B_INDICES], dtype=complex)
    scale = float(np.max(np.abs(frameC)))
    conj = float(np.max(np.abs(b - np.conj(a))))
    cond = float(np.max(np.abs(algebraic_conditions(frameC))))
    if conj > tol * max(scale, 1e-300) and conj > 1e-300:
        raise FrameInconsistencyError(
            f"b_u differ from conj(a_u) by {conj:.3e} (scale {scale:.3e})"
        )
    return WeylScalars(a, b, cond, conj)


def _check_bivector(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p, dtype=complex)
    if p.shape != (4, 4):
        raise ValueError("bivector components form a 4x4 array")
    if not np.allclose(p, -p.T, rtol=0, atol=1e-14 * max(1.0, np.max(np.abs(p)))):
        raise ValueError("bivector components must be antisymmetric")
    return p


def bivector_curvature(frameC: np.ndarray | WeylScalars, p: np.ndarray) -> complex:
    """``C(p) = C_abcd p^ab p^cd`` of a bivector, evaluated from the ten scalars.

    Uses the expansion in ``a_u``, ``b_u`` (valid for any tensor satisfying the
    eleven algebraic conditions) and returns the full contraction, i.e. four
    times the quarter-value the expansion produces.
    """
    p = _check_bivector(p)
    s = frameC if isinstance(frameC, WeylScalars) else extract_scalars(frameC, tol=np.inf)
    a0, a1, a2, a3, a4 = s.a
    b0, b1, b2, b3, b4 = s.b
    p12, p13, p14 = p[0, 1], p[0, 2], p[0, 3]
    p23, p34, p42 = p[1, 2], p[2, 3], p[3, 1]
    minus = p14 - p23
    plus = p14 + p23
    quarter = (
        a0 * p12**2 + 2 * a1 * p12 * minus + a2 * (2 * p12 * p34 + minus**2)
        + 2 * a3 * p34 * minus + a4 * p34**2
        + b0 * p13**2 + 2 * b1 * p13 * plus + b2 * (-2 * p13 * p42 + plus**2)
        - 2 * b3 * p42 * plus + b4 * p42**2
    )
    return complex(4 * quarter)


def bivector(xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Components ``p^ab = xi^a eta^b - xi^b eta^a``."""
    xi = np.asarray(xi, dtype=complex)
    eta = np.asarray(eta, dtype=complex)
    return np.outer(xi, eta) - np.outer(eta, xi)


def alpha_bivector(lam: complex) -> np.ndarray:
    """Frame components of the alpha-plane spanned by ``e3 - lam e1`` and ``e4 - lam e2``."""
    return bivector([-lam, 0, 1, 0], [0, -lam, 0, 1])


def beta_bivector(mu: complex) -> np.ndarray:
    """Frame components of the beta-plane spanned by ``e2 - mu e1`` and ``e4 - mu e3``."""
    return bivector([-mu, 1, 0, 0], [0, 0, -mu, 1])


def curvature_quartic(s: WeylScalars | Sequence[complex]) -> np.ndarray:
    a = s.a if isinstance(s, WeylScalars) else np.asarray(s, dtype=complex)
    return np.array([a[0], -4 * a[1], 6 * a[2], -4 * a[3], a[4]], dtype=complex)


def beta_quartic(s: WeylScalars) -> np.ndarray:
    return curvature_quartic(s.b)


def petrov_type(roots: ProjectiveRoots) -> str:
    return PARTITION_TYPES[roots.partition()]


@dataclass
class Tolerances:
    cluster_radius: float = 1e-4
    weyl_zero: float = 1e-9
    weyl_zero_abs: float = 1e-12
    conjugacy: float = 1e-10


@dataclass
class PetrovReport:
    type: str
    roots: ProjectiveRoots | None
    principal_directions: list  # (real 4-vector, multiplicity)
    scalars: WeylScalars
    point: tuple[float, ...]
    tolerances: Tolerances
    curvature_scale: float = 0.0
    tetrad: NullTetrad | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def margin(self) -> float:
        return self.roots.margin if self.roots is not None else float("inf")


def classify_frame(
    frameC: np.ndarray,
    tet: NullTetrad,
    curvature_scale: float,
    tolerances: Tolerances | None = None,
) -> PetrovReport:
    """Classify from frame components already computed in ``tet``."""
    tol = tolerances or Tolerances()
    s = extract_scalars(frameC, tol.conjugacy)
    amax = float(np.max(np.abs(s.a)))
    if amax <= tol.weyl_zero * curvature_scale or amax < tol.weyl_zero_abs:
        return PetrovReport("O", None, [], s, tet.point, tol, curvature_scale, tet)
    roots = solve_projective_quartic(curvature_quartic(s), tol.cluster_radius)
    dirs = [(real_null_direction(z, tet), m) for z, m in roots]
    return PetrovReport(petrov_type(roots), roots, dirs, s, tet.point, tol, curvature_scale, tet, list(roots.warnings))


def classify(
    spec: MetricSpec,
    point: Sequence[float],
    params: Mapping[str, float] | None = None,
    tolerances: Tolerances | None = None,
    lorentz: np.ndarray | None = None,
) -> PetrovReport:
    """Full pipeline at one point; ``lorentz`` optionally re-frames the built tetrad."""
    cur = curvature_at(spec, point, params)
    tet = build_tetrad(cur.jet)
    if lorentz is not None:
        tet = lorentz_transform(tet, lorentz)
    frameC = frame_components(cur.weyl, tet)
    frameR = frame_components(cur.riemann, tet)
    scale = float(np.max(np.abs(frameR)))
    return classify_frame(frameC, tet, scale, tolerances)


__all__ = [
    "A_INDICES", "B_INDICES", "INFINITY", "PetrovReport", "Tolerances", "WeylScalars",
    "algebraic_conditions", "alpha_bivector", "beta_bivector", "bivector", "bivector_curvature",
    "beta_quartic", "classify", "classify_frame", "curvature_quartic", "extract_scalars",
    "is_infinite", "petrov_type", "solve_projective_quartic",
]
