"""JSON problem files: pydantic models and conversion to solver problems.

Complex numbers are always two-element arrays ``[re, im]``.
"""

from __future__ import annotations

import math
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, TypeAdapter, model_validator

from .series import Tolerance


def _parse_complex(v):
    if isinstance(v, complex):
        return v
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ValueError("complex numbers must be [re, im] arrays")
    re, im = v
    for part in (re, im):
        if isinstance(part, bool) or not isinstance(part, (int, float)):
            raise ValueError("complex parts must be numbers")
        if not math.isfinite(part):
            raise ValueError("complex parts must be finite")
    return complex(re, im)


Complex = Annotated[
    complex,
    BeforeValidator(_parse_complex),
    PlainSerializer(lambda z: [z.real, z.imag], return_type=list),
]


class _Model(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Grid(_Model):
    t_start: float = Field(ge=0, allow_inf_nan=False)
    t_end: float = Field(allow_inf_nan=False)
    n_points: int = Field(ge=1)

    @model_validator(mode="after")
    def _ordered(self):
        if self.t_start > self.t_end:
            raise ValueError("t_start must not exceed t_end")
        if self.n_points > 1 and self.t_start == self.t_end:
            raise ValueError("a grid with several points needs t_start < t_end")
        return self

    def points(self) -> np.ndarray:
        if self.n_points == 1:
            return np.array([self.t_start])
        return np.linspace(self.t_start, self.t_end, self.n_points)


class TolSpec(_Model):
    rel: float = Field(default=1e-12, gt=0, allow_inf_nan=False)
    abs: float = Field(default=1e-14, gt=0, allow_inf_nan=False)
    max_terms: int = Field(default=4096, ge=5)


class _Base(_Model):
    alpha: float = Field(gt=0, le=1)
    grid: Grid
    tol: TolSpec = TolSpec()


class MlEvalFile(_Base):
    kind: Literal["ml_eval"]
    lam: Complex
    k: int = Field(default=0, ge=0)


class OperatorFile(_Base):
    kind: Literal["operator"]
    op: Literal["lj", "ld"]
    coeffs: list[Complex] = Field(min_length=1)
    n_nodes: int = Field(default=40, ge=1)


class ZeroSourceSpec(_Model):
    type: Literal["zero"] = "zero"


class FracPowerSourceSpec(_Model):
    type: Literal["frac_power"]
    ell: list[Complex]
    delta: list[float]


class SeriesSourceSpec(_Model):
    type: Literal["series"]
    coeffs: list[list[Complex]] = Field(min_length=1)


SourceSpec = Annotated[Union[ZeroSourceSpec, FracPowerSourceSpec, SeriesSourceSpec], Field(discriminator="type")]


class LinearSystemFile(_Base):
    kind: Literal["linear_system"]
    matrix: list[list[Complex]] = Field(min_length=1)
    x0: list[Complex] = Field(min_length=1)
    source: SourceSpec = ZeroSourceSpec()
    horizon_T: Optional[float] = Field(default=None, gt=0)


class ForcingSpec(_Model):
    beta: Complex
    mu: Complex
    j: int = Field(default=0, ge=0)


class SequentialFile(_Base):
    kind: Literal["sequential"]
    coeffs: list[Complex] = Field(min_length=1)
    init: list[Complex] = Field(min_length=1)
    forcing: list[ForcingSpec] = []


class PresetSpec(_Model):
    name: Literal["hermite", "airy"]
    a: Optional[Complex] = None
    index: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _one_of(self):
        if (self.a is None) == (self.index is None):
            raise ValueError("give exactly one of a or index")
        if self.index is not None and self.name != "hermite":
            raise ValueError("index selects a Hermite eigenvalue")
        return self


class Analytic2File(_Base):
    kind: Literal["analytic2"]
    p: list[Complex] = []
    q: list[Complex] = []
    c: list[Complex] = []
    preset: Optional[PresetSpec] = None
    init: list[Complex] = Field(min_length=2, max_length=2)
    n_terms: Optional[int] = Field(default=None, ge=2)

    @model_validator(mode="after")
    def _preset_exclusive(self):
        if self.preset is not None and (self.p or self.q or self.c):
            raise ValueError("a preset replaces p, q and c")
        return self


ProblemFile = Annotated[
    Union[MlEvalFile, OperatorFile, LinearSystemFile, SequentialFile, Analytic2File],
    Field(discriminator="kind"),
]

problem_adapter: TypeAdapter = TypeAdapter(ProblemFile)


def parse_problem(text: str):
    return problem_adapter.validate_json(text)


def dump_problem(problem) -> str:
    return problem_adapter.dump_json(problem, indent=2).decode()


def tolerance(spec: TolSpec) -> Tolerance:
    return Tolerance(rel_tol=spec.rel, abs_tol=spec.abs, max_terms=spec.max_terms)
