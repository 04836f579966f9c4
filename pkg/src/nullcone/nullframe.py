"""Adapted complex null tetrads and frame components.

The tetrad ``(e1, e2, e3, e4)`` has real null ``e1, e4`` and complex conjugate
``e2, e3`` with the pairings ``g(e1, e4) = 1``, ``g(e2, e3) = -1`` and all
other pairings zero, so that ``g = 2(w1 w4 - w2 w3)`` in the dual coframe.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .curvature import MetricJet
from .errors import DegenerateFrameError, PointMismatchError

SQRT2 = np.sqrt(2.0)

# Frame metric of the tetrad, indices 0..3 standing for e1..e4.
FRAME_METRIC = np.array(
    [[0, 0, 0, 1], [0, 0, -1, 0], [0, -1, 0, 0], [1, 0, 0, 0]], dtype=float
)

# Orthonormal signature used when transforming tetrads: (u1, u2, u3, u4).
_ETA = np.diag([-1.0, -1.0, -1.0, 1.0])


class _Infinity:
    """The point at infinity on the Riemann sphere of the parameter."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INFINITY"

    def __reduce__(self):
        return (_Infinity, ())


INFINITY = _Infinity()


def is_infinite(value) -> bool:
    return value is INFINITY


@dataclass(frozen=True)
class NullTetrad:
    e1: np.ndarray
    e2: np.ndarray
    e3: np.ndarray
    e4: np.ndarray
    point: tuple[float, ...]

    @property
    def matrix(self) -> np.ndarray:
        """Complex 4x4 array whose row ``a`` holds the coordinate components of e_(a+1)."""
        return np.array([self.e1, self.e2, self.e3, self.e4], dtype=complex)

    def orthonormal(self) -> np.ndarray:
        """Rows u1, u2, u3, u4 of the underlying real orthonormal frame."""
        u4 = (self.e1 + self.e4) / SQRT2
        u1 = (self.e1 - self.e4) / SQRT2
        u2 = SQRT2 * self.e2.real
        u3 = -SQRT2 * self.e2.imag
        return np.array([u1, u2, u3, u4])


def pairings(tet: NullTetrad, g: np.ndarray) -> np.ndarray:
    """Bilinear (not Hermitian) pairings ``g(e_a, e_b)``."""
    E = tet.matrix
    return E @ g @ E.T


def _tetrad_from_orthonormal(u: np.ndarray, point) -> NullTetrad:
    u1, u2, u3, u4 = u
    e1 = (u4 + u1) / SQRT2
    e4 = (u4 - u1) / SQRT2
    e2 = (u2 - 1j * u3) / SQRT2
    return NullTetrad(e1, e2, np.conj(e2), e4, point)


def _candidates():
    eye = np.eye(4)
    yield from eye
    for i, j in itertools.combinations(range(4), 2):
        yield eye[i] + eye[j]
        yield eye[i] - eye[j]


def orthonormal_frame(g: np.ndarray, pivot_tol: float = 1e-10, good_pivot: float = 1e-2) -> np.ndarray:
    """Lorentzian Gram-Schmidt seeded by the coordinate basis in chart order.

    Returns rows ``(u1, u2, u3, u4)`` with ``g(u4, u4) = 1`` and
    ``g(ua, ua) = -1``. A candidate whose residual is close to null relative to
    the positive companion metric ``|g|`` is deferred; if no well conditioned
    candidate remains, the best one above ``pivot_tol`` is taken, otherwise the
    frame construction fails.
    """
    w, V = np.linalg.eigh(g)
    absg = (V * np.abs(w)) @ V.T
    chosen: list[np.ndarray] = []
    signs: list[float] = []
    pool = list(_candidates())
    while len(chosen) < 4:
        best = None
        for n, v in enumerate(pool):
            r = v.copy()
            for u, s in zip(chosen, signs):
                r = r - (u @ g @ r) * s * u
            size = r @ absg @ r
            if size <= 1e-14 * (v @ absg @ v):
                continue
            ratio = abs(r @ g @ r) / size
            if ratio >= good_pivot:
                best = (n, r, ratio)
                break
            if best is None or ratio > best[2]:
                best = (n, r, ratio)
        if best is None or best[2] < pivot_tol:
            raise DegenerateFrameError("Gram-Schmidt broke down on every candidate vector")
        n, r, _ = best
        norm = r @ g @ r
        chosen.append(r / np.sqrt(abs(norm)))
        signs.append(1.0 if norm > 0 else -1.0)
        pool.pop(n)
    time_like = [k for k, s in enumerate(signs) if s > 0]
    if len(time_like) != 1:
        raise DegenerateFrameError(f"frame has {len(time_like)} timelike vectors")
    t = time_like[0]
    space = [chosen[k] for k in range(4) if k != t]
    return np.array(space + [chosen[t]])


def build_tetrad(jet: MetricJet) -> NullTetrad:
    return _tetrad_from_orthonormal(orthonormal_frame(jet.g), jet.point)


def lorentz_transform(tet: NullTetrad, L: np.ndarray) -> NullTetrad:
    """Apply a Lorentz matrix acting on the orthonormal frame (u1, u2, u3, u4).

    ``L`` must satisfy ``L.T @ diag(-1,-1,-1,1) @ L = diag(-1,-1,-1,1)``; the new
    frame vectors are ``u'_b = sum_a u_a L[a, b]``.
    """
    if not np.allclose(L.T @ _ETA @ L, _ETA, atol=1e-10):
        raise ValueError("matrix is not a Lorentz transformation")
    u = tet.orthonormal()
    return _tetrad_from_orthonormal(L.T @ u, tet.point)


def random_lorentz(rng: np.random.Generator, max_rapidity: float = 1.0) -> np.ndarray:
    """A proper orthochronous Lorentz matrix: rotation followed by a boost."""
    from scipy.spatial.transform import Rotation

    L = np.eye(4)
    L[:3, :3] = Rotation.random(random_state=rng).as_matrix()
    n = rng.normal(size=3)
    n /= np.linalg.norm(n)
    phi = rng.uniform(0.0, max_rapidity)
    B = np.eye(4)
    B[:3, :3] += (np.cosh(phi) - 1.0) * np.outer(n, n)
    B[:3, 3] = np.sinh(phi) * n
    B[3, :3] = np.sinh(phi) * n
    B[3, 3] = np.cosh(phi)
    return B @ L


def coframe(tet: NullTetrad) -> np.ndarray:
    """Rows ``w^a_i`` of the dual coframe, ``w^a(e_b) = delta^a_b``."""
    return np.linalg.inv(tet.matrix.T)


def frame_components(T, tet: NullTetrad) -> np.ndarray:
    """``C_abcd = C_ijkl e_a^i e_b^j e_c^k e_d^l`` from a lowered 4-index tensor."""
    low = T.low if hasattr(T, "low") else np.asarray(T)
    point = getattr(T, "point", None)
    if point and tet.point and not np.array_equal(np.asarray(point), np.asarray(tet.point)):
        raise PointMismatchError(f"tensor at {point} but tetrad at {tet.point}")
    E = tet.matrix
    return np.einsum("ijkl,ai,bj,ck,dl->abcd", low, E, E, E, E, optimize=True)


def real_null_direction(lam, tet: NullTetrad) -> np.ndarray:
    """``xi = |lam|^2 e1 - lam e2 - conj(lam) e3 + e4``; ``e1`` for ``lam = INFINITY``."""
    if is_infinite(lam):
        return tet.e1.copy()
    lam = complex(lam)
    xi = (lam * lam.conjugate()) * tet.e1 - lam * tet.e2 - lam.conjugate() * tet.e3 + tet.e4
    scale = max(1.0, float(np.max(np.abs(xi))))
    if np.max(np.abs(xi.imag)) > 1e-12 * scale:
        raise DegenerateFrameError("tetrad e2, e3 are not complex conjugates")
    return xi.real.copy()
