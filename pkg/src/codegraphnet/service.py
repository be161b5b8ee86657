"""HTTP service wrapping the pipeline.

Each endpoint body lives in a plain ``run_*`` function taking and returning
the schema models, so the CLI can call the same code in-process without a
running server. Artifacts are written where the request's paths point;
timing goes into a separate ``timing`` field so reruns with equal seeds
produce byte-identical JSON elsewhere.
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from . import __version__
from .corpus import CweClass, Corpus, Sample, balance, load_corpus, save_corpus, split
from .errors import CgnError, ValidationError
from .explain import ExplainConfig, explain_lines, render_report
from .metrics import cross_validate, render_metrics_table
from .pipeline import Pipeline, PipelineConfig
from .schemas import (
    CrossvalRequest,
    CrossvalResponse,
    ErrorResponse,
    EvalRequest,
    EvalResponse,
    ExplainRequest,
    ExplainResponse,
    IngestRequest,
    IngestResponse,
    RunOptions,
    TrainRequest,
    TrainResponse,
)

app = FastAPI(title="codegraphnet", version=__version__)


# ---------------------------------------------------------------------------
# Command implementations
# ---------------------------------------------------------------------------

def run_ingest(req: IngestRequest) -> IngestResponse:
    corpus = load_corpus(req.input_path)
    if req.balance is not None:
        strategy = "downsample" if req.balance == "downsample" else "upsample_augment"
        corpus = balance(corpus, strategy, target=req.balance_target, seed=req.seed)
    train, test = split(corpus, req.test_fraction, req.seed)

    out_dir = Path(req.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    train_path = out_dir / "train.csv"
    test_path = out_dir / "test.csv"
    summary_path = out_dir / "summary.json"
    save_corpus(train, train_path)
    save_corpus(test, test_path)

    config = req.model_dump()
    summary = {
        "class_counts": _count_names(corpus),
        "train_counts": _count_names(train),
        "test_counts": _count_names(test),
        "config": config,
    }
    summary_path.write_text(json.dumps(summary, indent=2), encoding="utf-8")
    return IngestResponse(
        train_path=str(train_path),
        test_path=str(test_path),
        summary_path=str(summary_path),
        class_counts=summary["class_counts"],
        train_counts=summary["train_counts"],
        test_counts=summary["test_counts"],
        config=config,
    )


def run_train(req: TrainRequest) -> TrainResponse:
    corpus = load_corpus(req.input_path)
    pipeline = Pipeline(_pipeline_config(req.options))
    report = pipeline.fit(corpus)

    out_dir = Path(req.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    model_path = out_dir / "model.json"
    report_path = out_dir / "train_report.json"
    pipeline.save(model_path)

    config = req.model_dump()
    report_doc = {
        "losses": report.losses,
        "final_train_accuracy": report.final_train_accuracy,
        "seed": report.seed,
        "config": config,
        "timing": {"wall_seconds": report.wall_seconds},
    }
    report_path.write_text(json.dumps(report_doc, indent=2), encoding="utf-8")
    return TrainResponse(
        model_path=str(model_path),
        report_path=str(report_path),
        losses=report.losses,
        final_train_accuracy=report.final_train_accuracy,
        config=config,
    )


def run_eval(req: EvalRequest) -> EvalResponse:
    pipeline = Pipeline.load(req.model_path)
    corpus = load_corpus(req.input_path)
    report = pipeline.evaluate(corpus)
    report_dict = report.to_dict()
    report_dict["config"] = req.model_dump()
    table = render_metrics_table({pipeline.config.model: report.metric_values()})

    out_path = None
    if req.out_path:
        out_path = Path(req.out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(json.dumps(report_dict, indent=2), encoding="utf-8")
    return EvalResponse(report=report_dict, table=table, out_path=str(out_path) if out_path else None)


def run_crossval(req: CrossvalRequest) -> CrossvalResponse:
    corpus = load_corpus(req.input_path)
    base = _pipeline_config(req.options)

    def factory(fold_seed: int) -> Pipeline:
        return Pipeline(dataclasses.replace(base, seed=fold_seed, embed_seed=fold_seed))

    result = cross_validate(factory, corpus, k=req.folds, seed=req.options.seed)
    config = req.model_dump()
    doc = result.to_dict()
    doc["config"] = config

    out_path = None
    if req.out_path:
        out_path = Path(req.out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return CrossvalResponse(
        mean=result.mean,
        std=result.std,
        folds=[r.to_dict() for r in result.fold_reports],
        out_path=str(out_path) if out_path else None,
        config=config,
    )


def run_explain(req: ExplainRequest) -> ExplainResponse:
    pipeline = Pipeline.load(req.model_path)
    sample = _resolve_sample(req)
    cfg = ExplainConfig(
        n_perturbations=req.n_perturbations,
        keep_probability=req.keep_probability,
        kernel_width=req.kernel_width,
        ridge_lambda=req.ridge_lambda,
        seed=req.seed,
    )
    explanation = explain_lines(pipeline, sample, cfg)
    report = render_report(sample, explanation, req.format)

    out_path = None
    if req.out_path:
        out_path = Path(req.out_path)
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(report, encoding="utf-8")
    return ExplainResponse(
        report=report,
        predicted_class=pipeline.classes[explanation.predicted_class],
        surrogate_r2=explanation.surrogate_r2,
        out_path=str(out_path) if out_path else None,
    )


def _resolve_sample(req: ExplainRequest) -> Sample:
    if req.source_path:
        code = Path(req.source_path).read_text(encoding="utf-8")
        return Sample(id=Path(req.source_path).name, code=code, label=CweClass.CWE_OTHER)
    if req.sample_id and req.input_path:
        corpus = load_corpus(req.input_path)
        for sample in corpus:
            if sample.id == req.sample_id:
                return sample
        raise ValidationError(f"sample id {req.sample_id!r} not found in {req.input_path}")
    raise ValidationError("explain needs either source_path or (sample_id and input_path)")


def _pipeline_config(options: RunOptions) -> PipelineConfig:
    return PipelineConfig(
        embedder=options.embedder,
        dim=options.dim,
        embed_file=options.embed_file,
        embed_seed=options.seed,
        gcn_mode=options.gcn_mode,
        gcn_d_out=options.gcn_d_out,
        gcn_learning_rate=options.gcn_learning_rate,
        gcn_epochs=options.gcn_epochs,
        gcn_l2=options.gcn_l2,
        model=options.model,
        tree_max_depth=options.tree_max_depth,
        tree_min_samples_leaf=options.tree_min_samples_leaf,
        mlp_hidden_dims=tuple(options.mlp_hidden_dims),
        mlp_learning_rate=options.mlp_learning_rate,
        mlp_epochs=options.mlp_epochs,
        mlp_batch_size=options.mlp_batch_size,
        sgd_learning_rate=options.sgd_learning_rate,
        sgd_epochs=options.sgd_epochs,
        seed=options.seed,
    )


def _count_names(corpus: Corpus) -> dict[str, int]:
    return {cls.label: count for cls, count in corpus.class_counts.items()}


# ---------------------------------------------------------------------------
# HTTP wiring
# ---------------------------------------------------------------------------

@app.exception_handler(CgnError)
async def _cgn_error_handler(request: Request, exc: CgnError) -> JSONResponse:
    payload = ErrorResponse.model_validate({"error": {"category": "data", "message": str(exc)}})
    return JSONResponse(status_code=400, content=payload.model_dump())


@app.exception_handler(FileNotFoundError)
async def _missing_file_handler(request: Request, exc: FileNotFoundError) -> JSONResponse:
    payload = ErrorResponse.model_validate(
        {"error": {"category": "usage", "message": f"no such file: {exc.filename}"}}
    )
    return JSONResponse(status_code=400, content=payload.model_dump())


@app.exception_handler(RequestValidationError)
async def _invalid_request_handler(request: Request, exc: RequestValidationError) -> JSONResponse:
    payload = ErrorResponse.model_validate({"error": {"category": "usage", "message": str(exc)}})
    return JSONResponse(status_code=422, content=payload.model_dump())


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/ingest", response_model=IngestResponse)
def ingest_endpoint(req: IngestRequest) -> IngestResponse:
    return run_ingest(req)


@app.post("/train", response_model=TrainResponse)
def train_endpoint(req: TrainRequest) -> TrainResponse:
    return run_train(req)


@app.post("/eval", response_model=EvalResponse)
def eval_endpoint(req: EvalRequest) -> EvalResponse:
    return run_eval(req)


@app.post("/crossval", response_model=CrossvalResponse)
def crossval_endpoint(req: CrossvalRequest) -> CrossvalResponse:
    return run_crossval(req)


@app.post("/explain", response_model=ExplainResponse)
def explain_endpoint(req: ExplainRequest) -> ExplainResponse:
    return run_explain(req)
