"""HTTP front end: three POST endpoints plus a health probe.

Domain validation failures (bad parameters, narrow grids, malformed
tabulated data) surface as 400 responses carrying the original message.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException

from .. import __version__
from .runners import run_sample, run_sweep, run_verify
from .schemas import RunConfig, SampleResponse, SweepRequest, SweepResponse, VerifyResponse


def create_app() -> FastAPI:
    app = FastAPI(title="uncertlab", version=__version__)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.post("/verify", response_model=VerifyResponse)
    def verify(cfg: RunConfig) -> VerifyResponse:
        try:
            return run_verify(cfg)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/sweep", response_model=SweepResponse)
    def sweep(req: SweepRequest) -> SweepResponse:
        try:
            return run_sweep(req)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/sample", response_model=SampleResponse)
    def sample(cfg: RunConfig) -> SampleResponse:
        try:
            return run_sample(cfg)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    return app
