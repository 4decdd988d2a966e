import logging
from collections.abc import AsyncGenerator
from contextlib import asynccontextmanager
from functools import lru_cache
from pathlib import Path
from typing import Annotated

from fastapi import APIRouter, Depends, FastAPI, HTTPException, status
from fastapi.middleware.cors import CORSMiddleware
from fastapi.security import HTTPAuthorizationCredentials, HTTPBearer

from cli.artifacts import CONFIG_FILE, RESULTS_FILE, FittedTrial
from core import settings
from core.errors import DataIOError, DimensionError, InvalidInputError, SubspaceInferenceError
from metrics.evaluation import interval95
from schema import PredictInput, PredictionOutput, ResultRecord, ServiceMetadata

logger = logging.getLogger(__name__)


# function to verify bearer token from the client
def verify_bearer(
    http_auth: Annotated[
        HTTPAuthorizationCredentials | None,
        Depends(HTTPBearer(description="Please provide AUTH_SECRET api key.", auto_error=False)),
    ],
) -> None:
    if not settings.AUTH_SECRET:
        return
    auth_secret = settings.AUTH_SECRET.get_secret_value()
    if not http_auth or http_auth.credentials != auth_secret:
        raise HTTPException(status_code=status.HTTP_401_UNAUTHORIZED)


# completed runs are directories holding a config.json
def list_runs() -> list[str]:
    if not settings.RUNS_DIR.is_dir():
        return []
    return sorted(p.name for p in settings.RUNS_DIR.iterdir() if (p / CONFIG_FILE).is_file())


def _run_dir(run: str) -> Path:
    if run not in list_runs():
        raise DataIOError(f"unknown run {run!r}")
    return settings.RUNS_DIR / run


# fitted trials are cached per (run, trial)
@lru_cache(maxsize=32)
def load_trial(run: str, trial: int) -> FittedTrial:
    logger.info(f"loading run {run}, trial {trial}")
    return FittedTrial.load(_run_dir(run), trial)


# map library errors onto http status codes
def _http_error(e: SubspaceInferenceError) -> HTTPException:
    if isinstance(e, DataIOError):
        return HTTPException(status_code=status.HTTP_404_NOT_FOUND, detail=str(e))
    if isinstance(e, (InvalidInputError, DimensionError)):
        return HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e))
    logger.error(f"An exception occurred: {e}")
    return HTTPException(status_code=500, detail="Unexpected error")


# async context manager for application lifespan events
@asynccontextmanager
async def lifespan(app: FastAPI) -> AsyncGenerator[None, None]:
    logger.info(f"serving {len(list_runs())} run(s) from {settings.RUNS_DIR}")
    yield
    load_trial.cache_clear()


# fastapi app initialization with custom lifespan
app = FastAPI(lifespan=lifespan)

# configure CORS middleware to allow all origins
app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

# api router with dependency injection for authentication
router = APIRouter(dependencies=[Depends(verify_bearer)])


# get information about available runs
@router.get("/info")
async def info() -> ServiceMetadata:
    return ServiceMetadata(runs_dir=str(settings.RUNS_DIR), runs=list_runs())


# stored aggregate results of a run
@router.get("/runs/{run}/results")
def results(run: str) -> ResultRecord:
    try:
        path = _run_dir(run) / RESULTS_FILE
        if not path.is_file():
            raise DataIOError(f"run {run!r} has no results yet")
        return ResultRecord.model_validate_json(path.read_text(encoding="utf-8"))
    except SubspaceInferenceError as e:
        raise _http_error(e)


# bayesian model averaged prediction with a trial's posterior draws
@router.post("/runs/{run}/predict")
def predict(run: str, request: PredictInput) -> PredictionOutput:
    try:
        fitted = load_trial(run, request.trial)
        mixture = fitted.predict(request.x)
        lower, upper = interval95(mixture)
    except SubspaceInferenceError as e:
        raise _http_error(e)
    return PredictionOutput(
        mean=mixture.mean.tolist(),
        std=mixture.std.tolist(),
        lower=lower.tolist(),
        upper=upper.tolist(),
        n_components=mixture.n_components,
    )


# health check endpoint to verify app status
@app.get("/ping")
async def health_check():
    return {"status": "pong!"}


# include the router into the application
app.include_router(router)
