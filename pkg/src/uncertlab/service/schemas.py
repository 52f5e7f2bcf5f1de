"""Request and response bodies for the verification service."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, model_validator


class GridModel(BaseModel):
    q_min: float
    q_max: float
    n_points: int


class StateModel(BaseModel):
    """Catalog state selector; tabulated data travels inline.

    The file field is a client-side convenience: the command line loads the
    referenced tabulated JSON and replaces it by inline arrays before the
    request is sent. The service itself only accepts inline data.
    """

    kind: str
    mass: float = 1.0
    hbar: float = 1.0
    omega: float = 1.0
    n_level: int = 0
    a: float = 1.0
    p0: float = 0.0
    separation: float = 0.0
    relative_sign: Literal[1, -1] = 1
    center: float = 0.0
    grid: GridModel | None = None
    rho: list[float] | None = None
    phase: list[float] | None = None
    file: str | None = None

    @model_validator(mode="after")
    def _check_tabulated(self):
        if self.kind == "tabulated" and self.file is None:
            if self.rho is None or self.phase is None or self.grid is None:
                raise ValueError(
                    "tabulated states need grid, rho and phase (or a file "
                    "reference resolved by the command line client)"
                )
        return self


class MCModel(BaseModel):
    n_samples: int = 100_000
    seed: int = 0
    n_bins: int = 80
    include_samples: bool = False


class RunConfig(BaseModel):
    """One verification run: state, multiplier atoms, numerical knobs."""

    state: StateModel
    lambda_atoms: list[tuple[float, float]] | None = None
    grid: GridModel | None = None
    grid_points: int | None = None
    tolerance: float = 1e-6
    floor_scale: float = 1e-12
    q0: float | Literal["mean"] = "mean"
    mc: MCModel = MCModel()


class ReportModel(BaseModel):
    name: str
    kind: str
    lhs: float
    bound_or_rhs: float
    slack: float
    tolerance: float
    discretization_estimate: float
    masked_mass: float
    passed: bool
    grid: GridModel
    extras: dict[str, Any]


class VerifyResponse(BaseModel):
    config: RunConfig
    reports: list[ReportModel]
    all_passed: bool


class SweepRequest(BaseModel):
    config: RunConfig
    parameter: Literal["slit_width", "lambda_atoms", "q0"]
    values: list[Any]


class SweepRow(BaseModel):
    value: float | str
    sigma_q: float
    sigma_qdot: float
    product: float
    bound: float
    slack: float


class SweepResponse(BaseModel):
    config: RunConfig
    parameter: str
    rows: list[SweepRow]


class SampleResponse(BaseModel):
    config: RunConfig
    stats: ReportModel
    histogram: dict[str, Any]
    samples: list[tuple[float, float]] | None = None
