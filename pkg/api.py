import json
import logging
from datetime import datetime
from typing import Any, Dict, List, Optional

from fastapi import FastAPI, HTTPException, status
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from config.settings import configure_logging, settings
from main import coefficients_report, local_j_report, orbits_report, render, richardson_report, weights_report
from tools.constant import DEFAULT_DEPTH, DEFAULT_PRIME_CUTOFF, SCHEMA_VERSION
from tools.exceptions import UnipotentToolException
from tools.localfield import Place
from tools.orbits import Partition
from tools.utils import parse_matrix
from tools.zeta import parse_places

logger = logging.getLogger(__name__)

VERSION = "0.1.0"


class HealthResponse(BaseModel):
    status: str
    version: str
    timestamp: str


class ReportResponse(BaseModel):
    schema_version: str
    document: Dict[str, Any]
    failures: List[Dict[str, Any]]
    passed: bool


class WeightsRequest(BaseModel):
    g: str  # rows separated by ";", e.g. "1, 1/2; 0, 3"
    partition: str
    place: str = "inf"


class LocalJRequest(BaseModel):
    r: int
    d: int
    place: str
    depth: int = DEFAULT_DEPTH


class CoefficientsRequest(BaseModel):
    partition: str
    S: str = "inf"
    cutoff: Optional[int] = DEFAULT_PRIME_CUTOFF
    depth: int = DEFAULT_DEPTH


app = FastAPI(
    title="Unipotent Weighted Orbitals API",
    description="Weighted orbital integrals of unipotent classes of GL(n)",
    version=VERSION,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)


def _respond(compute) -> ReportResponse:
    try:
        document, failures = compute()
    except (UnipotentToolException, ValueError) as e:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail=str(e))
    except Exception as e:
        logger.exception("computation failed")
        raise HTTPException(status_code=status.HTTP_500_INTERNAL_SERVER_ERROR, detail=f"Error computing report: {e}")
    # same float rendering as the CLI
    normalized = json.loads(render({"document": document, "failures": failures}))
    return ReportResponse(
        schema_version=SCHEMA_VERSION,
        document=normalized["document"],
        failures=normalized["failures"],
        passed=not failures,
    )


@app.get("/health", response_model=HealthResponse, tags=["Health"])
async def health_check():
    """Health check endpoint to verify API is running"""
    return {"status": "healthy", "version": VERSION, "timestamp": datetime.now().isoformat()}


@app.get("/orbits/{n}", response_model=ReportResponse, tags=["Orbits"])
def get_orbits(n: int):
    if n < 1:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail="n must be positive")
    return _respond(lambda: orbits_report(n))


@app.get("/richardson/{partition}", response_model=ReportResponse, tags=["Orbits"])
def get_richardson(partition: str):
    """E(X), the Richardson parabolics and the fibers of P(M) -> R(X); the partition is comma separated."""
    return _respond(lambda: richardson_report(Partition.parse(partition)))


@app.post("/weights", response_model=ReportResponse, tags=["Weights"])
def post_weights(request: WeightsRequest):
    return _respond(
        lambda: weights_report(parse_matrix(request.g), Partition.parse(request.partition), Place.parse(request.place))
    )


@app.post("/local-j", response_model=ReportResponse, tags=["Integrals"])
def post_local_j(request: LocalJRequest):
    return _respond(lambda: local_j_report(request.r, request.d, Place.parse(request.place), request.depth))


@app.post("/coefficients", response_model=ReportResponse, tags=["Integrals"])
def post_coefficients(request: CoefficientsRequest):
    """
    The development of a simple orbit outside S:

    1. one term per Levi L containing M
    2. the coefficient a^L(S) with its L1 spread, bound and Euler-product cross-check
    """
    return _respond(
        lambda: coefficients_report(
            Partition.parse(request.partition), parse_places(request.S), request.cutoff, request.depth
        )
    )


if __name__ == "__main__":
    import uvicorn

    configure_logging(settings.log_level)
    logger.info("Starting Uvicorn server on %s:%d", settings.api_host, settings.api_port)
    uvicorn.run(app, host=settings.api_host, port=settings.api_port, log_level=settings.log_level.lower())
