"""FastAPI application wrapping the experiment and recommendation functions.

The lifecycle endpoints (/synth, /train, /eval, /sweep) run synchronously;
they are meant for desk-scale jobs driven by the CLI or test harnesses.
/model/load pins a checkpoint into process state so /recommend can serve
many clients without touching the raw dataset.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, HTTPException

from sbrec import __version__
from sbrec.config import ConfigError, resolve_config
from sbrec.experiments import Engine, load_engine, run_eval, run_sweep, run_synth, run_train
from sbrec.service import schemas


def _overrides(request, exclude: tuple[str, ...] = ()) -> dict:
    data = request.model_dump()
    for key in exclude:
        data.pop(key, None)
    return data


def create_app() -> FastAPI:
    app = FastAPI(title="sbrec", version=__version__,
                  description="Session-based next-item recommendation service")
    app.state.engine = None

    def fail(exc: Exception) -> HTTPException:
        return HTTPException(status_code=400, detail=str(exc))

    @app.get("/health", response_model=schemas.HealthResponse)
    def health() -> schemas.HealthResponse:
        return schemas.HealthResponse(status="ok", model_loaded=app.state.engine is not None)

    @app.post("/synth", response_model=schemas.SynthResponse)
    def synth(request: schemas.SynthRequest) -> schemas.SynthResponse:
        try:
            cfg = resolve_config(None, _overrides(request))
            manifest = run_synth(cfg)
        except (ConfigError, ValueError, OSError) as exc:
            raise fail(exc) from None
        return schemas.SynthResponse(
            sessions_path=manifest["files"]["sessions"]["path"],
            purchases_path=manifest["files"]["purchases"]["path"],
            features_path=manifest["files"]["features"]["path"],
            manifest_path=manifest["manifest_path"],
        )

    @app.post("/train", response_model=schemas.TrainResponse)
    def train_endpoint(request: schemas.TrainRequest) -> schemas.TrainResponse:
        try:
            cfg = resolve_config(None, _overrides(request))
            summary = run_train(cfg)
        except (ConfigError, ValueError, OSError) as exc:
            raise fail(exc) from None
        return schemas.TrainResponse(**summary)

    @app.post("/eval", response_model=schemas.EvalResponse)
    def eval_endpoint(request: schemas.EvalRequest) -> schemas.EvalResponse:
        try:
            cfg = resolve_config(None, _overrides(request))
            result = run_eval(cfg)
        except (ConfigError, ValueError, OSError) as exc:
            raise fail(exc) from None
        report = result["report"]
        return schemas.EvalResponse(
            k=report.k,
            n_examples=report.n_examples,
            n_unscoreable=report.n_unscoreable,
            segments=[
                schemas.SegmentRow(segment=s.name, n=s.n, recall=s.recall, mrr=s.mrr)
                for s in report.segments
            ],
            table_path=result["table_path"],
            csv_path=result["csv_path"],
        )

    @app.post("/sweep", response_model=schemas.SweepResponse)
    def sweep_endpoint(request: schemas.SweepRequest) -> schemas.SweepResponse:
        try:
            cfg = resolve_config(None, _overrides(request, exclude=("t_list", "p_list", "k_list")))
            result = run_sweep(cfg, request.t_list, request.p_list, request.k_list)
        except (ConfigError, ValueError, OSError) as exc:
            raise fail(exc) from None
        top_k = cfg["top_k"]
        return schemas.SweepResponse(
            rows=[
                schemas.SweepRow(
                    k=row["k"], t=row["t"], p=row["p"], variant=row["variant"],
                    recall=row[f"recall{top_k}"], mrr=row[f"mrr{top_k}"], error=row["error"],
                )
                for row in result["rows"]
            ],
            grid_path=result["grid_path"],
        )

    @app.post("/model/load", response_model=schemas.ModelInfoResponse)
    def load_model(request: schemas.LoadModelRequest) -> schemas.ModelInfoResponse:
        catalog = request.catalog or str(Path(request.checkpoint).parent / "catalog.json")
        try:
            app.state.engine = load_engine(request.checkpoint, catalog)
        except (ValueError, OSError) as exc:
            raise fail(exc) from None
        return schemas.ModelInfoResponse(**app.state.engine.info())

    @app.get("/model", response_model=schemas.ModelInfoResponse)
    def model_info() -> schemas.ModelInfoResponse:
        engine: Engine | None = app.state.engine
        if engine is None:
            raise HTTPException(status_code=409, detail="no model loaded; POST /model/load first")
        return schemas.ModelInfoResponse(**engine.info())

    @app.post("/recommend", response_model=schemas.RecommendResponse)
    def recommend(request: schemas.RecommendRequest) -> schemas.RecommendResponse:
        engine: Engine | None = app.state.engine
        if engine is None:
            raise HTTPException(status_code=409, detail="no model loaded; POST /model/load first")
        try:
            ranked = engine.recommend(request.items, request.top_k)
        except ValueError as exc:
            raise fail(exc) from None
        return schemas.RecommendResponse(
            items=[schemas.ScoredItem(item_id=item, score=score) for item, score in ranked]
        )

    return app
