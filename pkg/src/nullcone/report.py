"""Flat per-point classification records and their JSON form."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import jsonfmt
from .nullframe import is_infinite
from .petrov import PetrovReport

SCHEMA = "nullcone.point-report/1"


def _root_to_json(z):
    return "infinity" if is_infinite(z) else [float(z.real), float(z.imag)]


@dataclass
class PointReport:
    metric: str
    point: list[float]
    params: dict[str, float]
    type: str | None
    roots: list = field(default_factory=list)  # [[re, im] | "infinity", multiplicity]
    a_abs: list[float] = field(default_factory=list)
    principal_directions: list = field(default_factory=list)  # [[4 floats], multiplicity]
    diagnostics: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    error: str | None = None

    @classmethod
    def from_petrov(cls, metric: str, params: dict, rep: PetrovReport) -> "PointReport":
        s = rep.scalars
        margin = rep.margin
        diagnostics = {
            "condition_residual": float(s.condition_residual),
            "conjugacy_residual": float(s.conjugacy_residual),
            "curvature_scale": float(rep.curvature_scale),
            "margin": float(margin),
            "quartic_residual": float(rep.roots.residual) if rep.roots is not None else 0.0,
            "warnings": list(rep.warnings),
        }
        return cls(
            metric=metric,
            point=[float(c) for c in rep.point],
            params={k: float(v) for k, v in params.items()},
            type=rep.type,
            roots=[[_root_to_json(z), int(m)] for z, m in (rep.roots or [])],
            a_abs=[float(v) for v in np.abs(s.a)],
            principal_directions=[[[float(c) for c in v], int(m)] for v, m in rep.principal_directions],
            diagnostics=diagnostics,
            tolerances={k: float(v) for k, v in asdict(rep.tolerances).items()},
        )

    @classmethod
    def failure(cls, metric: str, point, params: dict, message: str) -> "PointReport":
        return cls(metric, [float(c) for c in point], {k: float(v) for k, v in params.items()}, None, error=message)

    @property
    def warnings(self) -> list[str]:
        return list(self.diagnostics.get("warnings", []))

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["schema"] = SCHEMA
        return d

    def to_json(self, indent: int | None = 2) -> str:
        return jsonfmt.dumps(self.to_dict(), indent)

    @classmethod
    def from_dict(cls, d: dict) -> "PointReport":
        d = dict(d)
        d.pop("schema", None)
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown report fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "PointReport":
        return cls.from_dict(jsonfmt.loads(text))
