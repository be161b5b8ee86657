"""Request and response models of the HTTP service.

These models are the wire contract: the CLI builds requests from its flags
and renders responses, whether it calls the service in-process or over HTTP.
Paths in requests are resolved on the machine running the service.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field


class RunOptions(BaseModel):
    """Training knobs shared by the train and crossval commands."""

    embedder: Literal["hash", "file"] = "hash"
    dim: int = 768
    embed_file: Optional[str] = None
    gcn_mode: Literal["fixed", "trained"] = "trained"
    gcn_d_out: int = 128
    gcn_learning_rate: float = 0.01
    gcn_epochs: int = 100
    gcn_l2: float = 1e-4
    model: Literal["deeptree", "tree", "sgd"] = "deeptree"
    tree_max_depth: int = 12
    tree_min_samples_leaf: int = 2
    mlp_hidden_dims: list[int] = Field(default_factory=lambda: [64, 32])
    mlp_learning_rate: float = 1e-3
    mlp_epochs: int = 100
    mlp_batch_size: int = 32
    sgd_learning_rate: float = 0.01
    sgd_epochs: int = 100
    seed: int = 0


class IngestRequest(BaseModel):
    input_path: str
    out_dir: str
    balance: Optional[Literal["downsample", "upsample"]] = None
    balance_target: Optional[int] = None
    test_fraction: float = 0.2
    seed: int = 0


class IngestResponse(BaseModel):
    train_path: str
    test_path: str
    summary_path: str
    class_counts: dict[str, int]
    train_counts: dict[str, int]
    test_counts: dict[str, int]
    config: dict


class TrainRequest(BaseModel):
    input_path: str
    out_dir: str
    options: RunOptions = Field(default_factory=RunOptions)


class TrainResponse(BaseModel):
    model_path: str
    report_path: str
    losses: list[float]
    final_train_accuracy: float
    config: dict


class EvalRequest(BaseModel):
    model_path: str
    input_path: str
    out_path: Optional[str] = None


class EvalResponse(BaseModel):
    report: dict
    table: str
    out_path: Optional[str] = None


class CrossvalRequest(BaseModel):
    input_path: str
    folds: int = 10
    out_path: Optional[str] = None
    options: RunOptions = Field(default_factory=RunOptions)


class CrossvalResponse(BaseModel):
    mean: dict[str, float]
    std: dict[str, float]
    folds: list[dict]
    out_path: Optional[str] = None
    config: dict


class ExplainRequest(BaseModel):
    model_path: str
    source_path: Optional[str] = None
    sample_id: Optional[str] = None
    input_path: Optional[str] = None
    format: Literal["ansi", "html", "json"] = "ansi"
    n_perturbations: int = 200
    keep_probability: float = 0.5
    kernel_width: Optional[float] = None
    ridge_lambda: float = 1e-3
    seed: int = 0
    out_path: Optional[str] = None


class ExplainResponse(BaseModel):
    report: str
    predicted_class: str
    surrogate_r2: float
    out_path: Optional[str] = None


class ErrorDetail(BaseModel):
    category: Literal["data", "usage"]
    message: str


class ErrorResponse(BaseModel):
    error: ErrorDetail
