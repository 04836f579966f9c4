"""Pointwise Lorentzian curvature in a coordinate (holonomic) frame.

Conventions
-----------
* Signature (+, -, -, -): one timelike and three spacelike directions.
* ``dg[k, i, j] = d_k g_ij`` and ``d2g[k, l, i, j] = d_k d_l g_ij``.
* ``gamma[i, j, k]`` is the connection coefficient with upper index ``i``.
* ``R^i_{jkl} = d_k G^i_{jl} - d_l G^i_{jk} + G^m_{jl} G^i_{mk} - G^m_{jk} G^i_{ml}``.
* Ricci contracts the upper index with the first lower index of the
  antisymmetric pair, ``R_{jl} = R^i_{jil}``; with the Riemann formula above
  this is the usual Ricci tensor and the Weyl decomposition below is trace free.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateMetricError, DomainError, SignatureError
from .expr import Expression, Num, parse
from .jet import PAIRS, eval_blocks, eval_jet2, unpack_hessian


@dataclass(frozen=True)
class MetricSpec:
    """A named chart, the ten components ``g_ij`` (i <= j) and parameter defaults."""

    name: str
    chart: tuple[str, ...]
    components: tuple[Expression, ...]  # ordered as jet.PAIRS
    params: Mapping[str, float] = field(default_factory=dict)
    domain_guard: Expression | None = None
    extra_guards: tuple[Expression, ...] = ()

    @classmethod
    def from_strings(
        cls,
        name: str,
        chart: Sequence[str],
        components: Mapping,
        params: Mapping[str, float] | None = None,
        guard: str | None = None,
    ) -> "MetricSpec":
        """Build a spec from component source strings.

        ``components`` maps ``(i, j)`` index pairs or ``(name_i, name_j)``
        coordinate-name pairs to expression text; missing components are zero.
        """
        chart = tuple(chart)
        params = dict(params or {})
        table: dict[tuple[int, int], Expression] = {}
        for key, source in components.items():
            i, j = (chart.index(k) if isinstance(k, str) else int(k) for k in key)
            i, j = min(i, j), max(i, j)
            if (i, j) in table:
                raise ValueError(f"component g[{chart[i]},{chart[j]}] given twice")
            table[(i, j)] = parse(str(source), chart, params)
        zero = Expression(Num(0.0), chart, tuple(sorted(params)))
        comps = tuple(table.get(pair, zero) for pair in PAIRS)
        guard_expr = parse(guard, chart, params) if guard else None
        return cls(name, chart, comps, params, guard_expr)

    def component(self, i: int, j: int) -> Expression:
        return self.components[PAIRS.index((min(i, j), max(i, j)))]

    def resolve_params(self, overrides: Mapping[str, float] | None = None) -> dict[str, float]:
        values = dict(self.params)
        if overrides:
            unknown = set(overrides) - set(values)
            if unknown:
                raise ValueError(f"unknown parameters for {self.name}: {sorted(unknown)}")
            values.update({k: float(v) for k, v in overrides.items()})
        return values

    def conformal(self, sigma: Expression | str, name: str | None = None) -> "MetricSpec":
        """The metric ``sigma * g`` as a new spec over the same chart."""
        if isinstance(sigma, str):
            sigma = parse(sigma, self.chart, self.params)
        comps = tuple(sigma.combine("*", c) for c in self.components)
        params = comps[0].params
        sigma = sigma.combine("+", Expression(Num(0.0), self.chart, params))
        guard = self.domain_guard.combine("+", Expression(Num(0.0), self.chart, params)) if self.domain_guard else None
        extra = tuple(e.combine("+", Expression(Num(0.0), self.chart, params)) for e in self.extra_guards)
        return replace(
            self,
            name=name or f"({sigma})*{self.name}",
            components=comps,
            domain_guard=guard,
            extra_guards=extra + (sigma,),
        )

    def guards(self) -> tuple[Expression, ...]:
        head = (self.domain_guard,) if self.domain_guard is not None else ()
        return head + self.extra_guards


@dataclass(frozen=True)
class MetricJet:
    point: tuple[float, ...]
    g: np.ndarray
    g_inv: np.ndarray
    dg: np.ndarray | None
    d2g: np.ndarray | None


@dataclass(frozen=True)
class Christoffel:
    gamma: np.ndarray
    point: tuple[float, ...] = ()


@dataclass(frozen=True)
class Riemann:
    up: np.ndarray  # R^i_{jkl}
    low: np.ndarray  # R_{ijkl}
    point: tuple[float, ...] = ()


@dataclass(frozen=True)
class WeylTensor:
    low: np.ndarray  # C_{ijkl}
    up: np.ndarray  # C^i_{jkl}
    point: tuple[float, ...] = ()


def check_signature(g: np.ndarray) -> None:
    scale = np.max(np.abs(g))
    if scale == 0.0 or abs(np.linalg.det(g)) / scale**4 <= 1e-12:
        raise DegenerateMetricError(f"metric is degenerate (det = {np.linalg.det(g):.3e})")
    eig = np.linalg.eigvalsh(g)
    npos = int(np.sum(eig > 0))
    nneg = int(np.sum(eig < 0))
    if (npos, nneg) != (1, 3):
        raise SignatureError(f"expected signature (1, 3), eigenvalues {eig}")


def metric_at(spec: MetricSpec, point: Sequence[float], params: Mapping[str, float] | None = None) -> np.ndarray:
    """Just the metric components; guards are still enforced."""
    return metric_jet(spec, point, params, order=0, check=False).g


def metric_jet(
    spec: MetricSpec,
    point: Sequence[float],
    params: Mapping[str, float] | None = None,
    order: int = 2,
    check: bool = True,
) -> MetricJet:
    """Metric value and inverse, with derivatives up to ``order`` (0, 1 or 2)."""
    values = spec.resolve_params(params)
    guards = spec.guards()
    blocks = eval_blocks(list(spec.components) + list(guards), point, values, order)
    for guard, block in zip(guards, blocks[10:]):
        if not block[0] > 0.0:
            raise DomainError(f"point {tuple(point)} is outside the domain of {spec.name}", str(guard))
    comps = blocks[:10]
    g = np.empty((4, 4))
    dg = np.empty((4, 4, 4)) if order >= 1 else None
    for n, (i, j) in enumerate(PAIRS):
        g[i, j] = g[j, i] = comps[n, 0]
        if dg is not None:
            dg[:, i, j] = comps[n, 1:5]
            dg[:, j, i] = comps[n, 1:5]
    d2g = None
    if order >= 2:
        h = unpack_hessian(comps[:, 5:15])  # (10, 4, 4)
        d2g = np.empty((4, 4, 4, 4))
        for n, (i, j) in enumerate(PAIRS):
            d2g[:, :, i, j] = h[n]
            d2g[:, :, j, i] = h[n]
    if check:
        check_signature(g)
    g_inv = np.linalg.inv(g)
    return MetricJet(tuple(float(c) for c in point), g, g_inv, dg, d2g)


def _lowered_gamma(dg: np.ndarray) -> np.ndarray:
    # G_{mjk} = 1/2 (d_j g_mk + d_k g_mj - d_m g_jk)
    return 0.5 * (dg.transpose(1, 0, 2) + dg.transpose(1, 2, 0) - dg)


def christoffel(jet: MetricJet) -> Christoffel:
    gamma = np.einsum("im,mjk->ijk", jet.g_inv, _lowered_gamma(jet.dg))
    return Christoffel(gamma, jet.point)


def christoffel_derivative(jet: MetricJet) -> np.ndarray:
    """``out[l, i, j, k] = d_l G^i_{jk}``; needs the second metric derivatives."""
    if jet.d2g is None:
        raise ValueError("second derivatives are required (metric_jet with order=2)")
    low = _lowered_gamma(jet.dg)
    d2 = jet.d2g  # d2[l, k, i, j] = d_l d_k g_ij
    dlow = 0.5 * (d2.transpose(0, 3, 1, 2) + d2.transpose(0, 3, 2, 1) - d2)
    dginv = -np.einsum("ia,lab,bm->lim", jet.g_inv, jet.dg, jet.g_inv)
    return np.einsum("lim,mjk->lijk", dginv, low) + np.einsum("im,lmjk->lijk", jet.g_inv, dlow)


def riemann(jet: MetricJet, gamma: Christoffel | None = None, dgamma: np.ndarray | None = None) -> Riemann:
    G = (gamma or christoffel(jet)).gamma
    dG = christoffel_derivative(jet) if dgamma is None else dgamma
    # A[i,j,k,l] = d_k G^i_{jl} + G^m_{jl} G^i_{mk}; R = A - A with (k,l) swapped
    A = dG.transpose(1, 2, 0, 3) + np.einsum("mjl,imk->ijkl", G, G)
    up = A - A.transpose(0, 1, 3, 2)
    low = np.einsum("im,mjkl->ijkl", jet.g, up)
    return Riemann(up, low, jet.point)


def ricci_and_scalar(R: Riemann, jet: MetricJet) -> tuple[np.ndarray, float]:
    ric = np.einsum("ijil->jl", R.up)
    return ric, float(np.einsum("jl,jl->", jet.g_inv, ric))


def weyl(R: Riemann, ricci: np.ndarray, scalar: float, jet: MetricJet) -> WeylTensor:
    g = jet.g
    gR = np.einsum("ik,jl->ijkl", g, ricci)
    # g_ik R_jl - g_il R_jk - g_jk R_il + g_jl R_ik
    ricci_part = gR - gR.transpose(0, 1, 3, 2) - gR.transpose(1, 0, 2, 3) + gR.transpose(1, 0, 3, 2)
    gg = np.einsum("ik,jl->ijkl", g, g)
    scalar_part = gg - gg.transpose(0, 1, 3, 2)
    low = R.low - 0.5 * ricci_part + (scalar / 6.0) * scalar_part
    up = np.einsum("im,mjkl->ijkl", jet.g_inv, low)
    return WeylTensor(low, up, jet.point)


def conformal_connection(
    jet: MetricJet,
    sigma: Expression,
    point: Sequence[float] | None = None,
    params: Mapping[str, float] | None = None,
) -> Christoffel:
    """Levi-Civita connection of ``sigma * g`` from that of ``g`` and ``d log sigma``."""
    point = jet.point if point is None else tuple(float(c) for c in point)
    s = eval_jet2(sigma, point, params or {})
    if not s.value > 0.0:
        raise DomainError(f"conformal factor must be positive, got {s.value!r}", str(sigma))
    sig_low = s.grad / s.value
    sig_up = jet.g_inv @ sig_low
    eye = np.eye(4)
    gamma = christoffel(jet).gamma + 0.5 * (
        np.einsum("ij,k->ijk", eye, sig_low)
        + np.einsum("ik,j->ijk", eye, sig_low)
        - np.einsum("i,jk->ijk", sig_up, jet.g)
    )
    return Christoffel(gamma, point)


@dataclass(frozen=True)
class Curvature:
    """Everything computed at one chart point."""

    jet: MetricJet
    christoffel: Christoffel
    riemann: Riemann
    ricci: np.ndarray
    scalar: float
    weyl: WeylTensor


def curvature_at(spec: MetricSpec, point: Sequence[float], params: Mapping[str, float] | None = None) -> Curvature:
    jet = metric_jet(spec, point, params)
    gam = christoffel(jet)
    R = riemann(jet, gam)
    ric, scal = ricci_and_scalar(R, jet)
    return Curvature(jet, gam, R, ric, scal, weyl(R, ric, scal, jet))


def kretschmann(R: Riemann, jet: MetricJet) -> float:
    gi = jet.g_inv
    upper = np.einsum("ia,jb,kc,ld,abcd->ijkl", gi, gi, gi, gi, R.low)
    return float(np.einsum("ijkl,ijkl->", R.low, upper))
