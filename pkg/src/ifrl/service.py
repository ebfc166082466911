"""HTTP batch-scoring service for external training loops.

Three endpoints over JSON/HTTP 1.1:

* POST /v1/score      — sample-level rewards for response/constraint batches
* POST /v1/advantages — group-relative advantage normalization
* GET  /healthz       — liveness plus model/catalog info

Every response is numerically identical to the corresponding library
call: handlers are thin adapters over an immutable model loaded once at
startup, and no request mutates server state.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import verifier
from .core import SchemaError, constraint_from_json
from .rewards import (
    AdvantageConfig,
    MissingScorerError,
    RewardMode,
    SoftConstraintInRuleOnlyError,
    group_advantages,
    sample_reward,
)
from .scorer import ScorerModel, load_model
from .verifier import UnsupportedRuleError

DEFAULT_MAX_BATCH = 256


@dataclass(frozen=True)
class ServiceConfig:
    bind_address: str = "127.0.0.1:8080"
    model_path: str | None = None
    mode: RewardMode = RewardMode.FULL
    max_batch: int = DEFAULT_MAX_BATCH
    request_timeout: float = 30.0

    def __post_init__(self) -> None:
        if self.max_batch < 1:
            raise SchemaError(f"max_batch must be >= 1, got {self.max_batch}")
        if self.mode is not RewardMode.RULE_ONLY and not self.model_path:
            raise SchemaError(f"mode {self.mode.value!r} requires a model_path")


class ScoreItem(BaseModel):
    response: str
    constraints: list[dict[str, Any]]


class ScoreRequest(BaseModel):
    items: list[ScoreItem]
    mode: str | None = None


class AdvantagesRequest(BaseModel):
    groups: list[list[float]]
    eps: float | None = Field(default=None)


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="ifrl reward service")

    model: ScorerModel | None = None
    model_version = "none"
    if config.model_path is not None:
        model = load_model(config.model_path)
        digest = hashlib.sha256(Path(config.model_path).read_bytes()).hexdigest()
        model_version = digest[:12]
    catalog_size = len(verifier.catalog())

    @app.exception_handler(RequestValidationError)
    async def on_bad_request(request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        loc = ".".join(str(part) for part in first.get("loc", ()))
        return _error(400, f"schema violation at {loc or 'body'}: {first.get('msg', 'invalid')}")

    @app.get("/healthz")
    async def healthz():
        if config.model_path is not None and model is None:
            return _error(503, "model not loaded")
        return {"status": "ok", "model_version": model_version, "catalog_size": catalog_size}

    @app.post("/v1/score")
    async def score(request: ScoreRequest):
        if len(request.items) > config.max_batch:
            return _error(413, f"batch of {len(request.items)} exceeds max_batch {config.max_batch}")
        mode = config.mode
        if request.mode is not None:
            try:
                mode = RewardMode(request.mode)
            except ValueError:
                return _error(400, f"schema violation at mode: unknown mode {request.mode!r}")
        results = []
        for index, item in enumerate(request.items):
            try:
                constraints = [constraint_from_json(c) for c in item.constraints]
                for c in constraints:
                    from .core import validate_constraint

                    validate_constraint(c)
            except UnsupportedRuleError as exc:
                return _error(422, f"items[{index}]: {exc}")
            except SchemaError as exc:
                return _error(400, f"schema violation at items[{index}].constraints: {exc}")
            if not constraints:
                return _error(400, f"schema violation at items[{index}].constraints: empty list")
            try:
                breakdown = sample_reward(item.response, constraints, model, mode)
            except UnsupportedRuleError as exc:
                return _error(422, f"items[{index}]: {exc}")
            except (MissingScorerError, SoftConstraintInRuleOnlyError) as exc:
                return _error(400, f"items[{index}]: {exc}")
            except Exception as exc:  # scorer failure
                return _error(500, f"items[{index}]: scorer failure: {exc}")
            results.append(
                {
                    "reward": breakdown.aggregate,
                    "per_constraint": [
                        {"id": r.constraint_id, "reward": r.reward, "source": r.source}
                        for r in breakdown.per_constraint
                    ],
                }
            )
        return {"results": results}

    @app.post("/v1/advantages")
    async def advantages(request: AdvantagesRequest):
        lengths = {len(group) for group in request.groups}
        if len(lengths) > 1:
            return _error(400, f"ragged groups: mixed lengths {sorted(lengths)}")
        out = []
        for index, group in enumerate(request.groups):
            if len(group) < 2:
                return _error(400, f"groups[{index}] has {len(group)} rewards; need at least 2")
            try:
                adv_config = AdvantageConfig(
                    group_size=len(group),
                    **({"eps": request.eps} if request.eps is not None else {}),
                )
                out.append(group_advantages(list(group), adv_config))
            except SchemaError as exc:
                return _error(400, f"groups[{index}]: {exc}")
        return {"advantages": out}

    return app


def run_service(config: ServiceConfig) -> None:
    """Blockingly serve the app with uvicorn on the configured address."""
    import uvicorn

    host, _, port = config.bind_address.rpartition(":")
    uvicorn.run(create_app(config), host=host or "127.0.0.1", port=int(port), log_level="warning")
