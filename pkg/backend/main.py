from typing import List

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware

from backend.campaigns.verification import SUITES, VerificationCampaign
from backend.models.errors import DomainError, PreconditionError, SearchError
from backend.models.schemas import (
    CheckReport,
    CoeffKind,
    HealthResponse,
    NodalPoint,
    NodalRequest,
    WosConfig,
    WosEstimate,
    WosRequest,
)
from backend.services import analysis, coeffs
from backend.services.geometry import make_shape
from backend.services.wos import parse_boundary, wos_solve
from config.settings import settings

app = FastAPI(
    title="Helmholtz Means",
    description="Mean value identities of the Helmholtz and modified Helmholtz equations",
    version=settings.ARTIFACT_VERSION,
    debug=settings.DEBUG,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


@app.get("/health", response_model=HealthResponse)
async def health_check():
    problems = settings.validate_required_settings()
    if problems:
        return HealthResponse(status="degraded", message=f"invalid settings: {', '.join(problems)}")
    return HealthResponse(status="healthy", message="Helmholtz Means")


@app.get("/coeff")
async def get_coeff(
    kind: str = "sphere-modified",
    dim: int = Query(3, ge=2),
    t: List[float] = Query(..., description="scaled radii; repeat the parameter for a table"),
    derivative: bool = False,
):
    try:
        coeff_kind = CoeffKind.parse(kind)
        values = np.atleast_1d(coeffs.mean_coeff(coeff_kind, np.asarray(t), dim))
        rows = [{"t": point, "value": float(value)} for point, value in zip(t, values)]
        if derivative:
            slopes = np.atleast_1d(coeffs.mean_coeff_derivative(coeff_kind, np.asarray(t), dim))
            for row, slope in zip(rows, slopes):
                row["derivative"] = float(slope)
        return {"kind": coeff_kind.label, "m": dim, "rows": rows}
    except ValueError as e:
        raise HTTPException(status_code=400, detail=f"Invalid coefficient request: {str(e)}")


@app.post("/wos", response_model=WosEstimate)
async def solve_wos(request: WosRequest):
    try:
        geom = make_shape(request.shape, request.dim)
        g = parse_boundary(request.boundary, request.dim)
        overrides = {"eps": request.eps, "n_walks": request.walks}
        cfg = WosConfig(seed=request.seed, **{k: v for k, v in overrides.items() if v is not None})
        return wos_solve(geom, g, request.mu, request.at, cfg)
    except ValueError as e:
        raise HTTPException(status_code=400, detail=f"Invalid walk request: {str(e)}")
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Walk on spheres failed: {str(e)}")


@app.get("/verify/{suite}", response_model=List[CheckReport])
async def run_suite(suite: str, dim: int = Query(2, ge=2), seed: int = Query(0, ge=0), cases: int = Query(3, ge=1)):
    if suite not in SUITES:
        raise HTTPException(status_code=404, detail=f"Unknown suite {suite!r}; choose from {sorted(SUITES)}")
    try:
        return VerificationCampaign(m=dim, seed=seed, cases=cases).run(suite)
    except Exception as e:
        raise HTTPException(status_code=500, detail=f"Verification failed: {str(e)}")


@app.post("/nodal", response_model=NodalPoint)
async def locate_nodal_point(request: NodalRequest):
    try:
        return analysis.nodal_locate(request.solution, request.at, request.r_star)
    except (DomainError, PreconditionError) as e:
        raise HTTPException(status_code=400, detail=f"Invalid nodal request: {str(e)}")
    except SearchError as e:
        raise HTTPException(status_code=500, detail=f"Nodal search failed: {str(e)}")


@app.get("/liouville", response_model=CheckReport)
async def liouville(dim: int = Query(3, ge=2), r_max: float = Query(50.0, ge=30), step: float = Query(1.0, gt=0)):
    try:
        radii = np.arange(1.0, r_max + 0.5 * step, step)
        return analysis.liouville_ratio(dim, radii)
    except PreconditionError as e:
        raise HTTPException(status_code=400, detail=f"Invalid radii: {str(e)}")


if __name__ == "__main__":
    import uvicorn

    uvicorn.run(app, host=settings.API_HOST, port=settings.API_PORT)
