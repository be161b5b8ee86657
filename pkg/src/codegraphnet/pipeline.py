"""The fitted end-to-end pipeline and its on-disk bundle.

A pipeline owns an embedding provider, the frozen graph-convolution weights
and one classifier head. The whole bundle round-trips through a single JSON
document (format ``cgn-model``), so a saved model can evaluate and explain
snippets without retraining.
"""

from __future__ import annotations

import dataclasses
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import models
from .corpus import CWE_LABELS, Corpus, Sample
from .embedding import (
    FileEmbeddingProvider,
    HashEmbeddingProvider,
    line_embeddings,
    load_precomputed,
)
from .errors import SchemaError, ShapeError, ValidationError
from .gcn import GcnParams, GcnTrainConfig, forward, train_gcn
from .linegraph import adjacency, build_line_graph
from .metrics import EvalReport, compute_metrics

MODEL_FORMAT = "cgn-model"
MODEL_VERSION = 1


@dataclass
class PipelineConfig:
    """Every knob of a training run, with all defaults materialized."""

    embedder: str = "hash"              # "hash" or "file"
    dim: int = 768
    embed_file: str | None = None
    embed_seed: int = 0
    gcn_mode: str = "trained"
    gcn_d_out: int = 128
    gcn_learning_rate: float = 0.01
    gcn_epochs: int = 100
    gcn_l2: float = 1e-4
    model: str = "deeptree"             # "deeptree", "tree" or "sgd"
    tree_max_depth: int = 12
    tree_min_samples_leaf: int = 2
    mlp_hidden_dims: tuple[int, ...] = (64, 32)
    mlp_learning_rate: float = 1e-3
    mlp_epochs: int = 100
    mlp_batch_size: int = 32
    sgd_learning_rate: float = 0.01
    sgd_epochs: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.embedder not in ("hash", "file"):
            raise ValidationError(f"unknown embedder kind {self.embedder!r}")
        if self.embedder == "file" and not self.embed_file:
            raise ValidationError("embedder 'file' requires embed_file")
        if self.model not in ("deeptree", "tree", "sgd"):
            raise ValidationError(f"unknown model kind {self.model!r}")

    def to_dict(self) -> dict:
        data = dataclasses.asdict(self)
        data["mlp_hidden_dims"] = list(self.mlp_hidden_dims)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        kwargs = dict(data)
        if "mlp_hidden_dims" in kwargs:
            kwargs["mlp_hidden_dims"] = tuple(kwargs["mlp_hidden_dims"])
        return cls(**kwargs)


class Pipeline:
    """Embedding -> graph convolution -> classifier, trainable and persistable."""

    def __init__(self, config: PipelineConfig):
        self.config = config
        self.classes = list(CWE_LABELS)
        self.provider = self._make_provider(config)
        self.gcn: GcnParams | None = None
        self.deeptree: models.DeepTreeModel | None = None
        self.tree: models.TreeModel | None = None
        self.linear: models.LinearModel | None = None
        self._matrix_cache: tuple[tuple[str, str], np.ndarray] | None = None

    @staticmethod
    def _make_provider(config: PipelineConfig):
        if config.embedder == "hash":
            return HashEmbeddingProvider(dim=config.dim, seed=config.embed_seed)
        provider = load_precomputed(config.embed_file)
        if provider.dim != config.dim:
            raise ShapeError(
                f"embed file {config.embed_file} has dim {provider.dim}, configured {config.dim}"
            )
        return provider

    @property
    def is_fitted(self) -> bool:
        return self.gcn is not None and (
            self.deeptree is not None or self.tree is not None or self.linear is not None
        )

    # -- training -----------------------------------------------------------

    def fit(self, corpus: Corpus) -> models.TrainReport:
        """Train the graph-convolution weights, then the configured classifier."""
        started = time.perf_counter()
        cfg = self.config
        data = []
        for sample in corpus:
            X = line_embeddings(sample, self.provider)
            A = adjacency(build_line_graph(X.shape[0]))
            data.append((X, A, int(sample.label)))

        gcn_config = GcnTrainConfig(
            mode=cfg.gcn_mode,
            learning_rate=cfg.gcn_learning_rate,
            epochs=cfg.gcn_epochs,
            l2=cfg.gcn_l2,
            seed=cfg.seed,
            n_classes=len(self.classes),
            d_out=cfg.gcn_d_out,
        )
        self.gcn = train_gcn(data, gcn_config)

        H = np.array([forward(self.gcn, X, A)[0].h_final for X, A, _ in data])
        y = np.array([label for _, _, label in data])

        if cfg.model == "deeptree":
            deeptree_config = models.DeepTreeConfig(
                tree=models.TreeConfig(
                    max_depth=cfg.tree_max_depth,
                    min_samples_leaf=cfg.tree_min_samples_leaf,
                    seed=cfg.seed,
                ),
                hidden_dims=cfg.mlp_hidden_dims,
                learning_rate=cfg.mlp_learning_rate,
                epochs=cfg.mlp_epochs,
                batch_size=cfg.mlp_batch_size,
                seed=cfg.seed,
            )
            self.deeptree, report = models.fit_deeptree(H, y, deeptree_config)
            report.wall_seconds = time.perf_counter() - started
            return report

        if cfg.model == "tree":
            self.tree = models.fit_tree(
                H,
                y,
                models.TreeConfig(
                    max_depth=cfg.tree_max_depth,
                    min_samples_leaf=cfg.tree_min_samples_leaf,
                    seed=cfg.seed,
                ),
            )
            predictions = np.array(
                [int(np.argmax(models.tree_predict_proba(self.tree, h))) for h in H]
            )
        else:
            self.linear = models.fit_sgd_baseline(
                H,
                y,
                models.SgdConfig(
                    learning_rate=cfg.sgd_learning_rate,
                    epochs=cfg.sgd_epochs,
                    seed=cfg.seed,
                ),
            )
            predictions = np.argmax(models.linear_predict_proba(self.linear, H), axis=1)

        return models.TrainReport(
            losses=[],
            final_train_accuracy=float(np.mean(predictions == y)),
            wall_seconds=time.perf_counter() - started,
            seed=cfg.seed,
        )

    # -- inference ----------------------------------------------------------

    def embed(self, sample: Sample) -> np.ndarray:
        """The pooled snippet embedding after graph propagation."""
        self._require_fitted()
        return self._snippet_embedding(self._line_matrix(sample))

    def predict_proba(self, sample: Sample) -> np.ndarray:
        self._require_fitted()
        return self._classify(self._line_matrix(sample))

    def predict_proba_masked(self, sample: Sample, mask) -> np.ndarray:
        """Probabilities with the masked-out lines' features zeroed.

        Equivalent to blanking those lines in the source, but keeps the graph
        at the sample's full line count and works with the file embedder
        (masked variants have no record of their own).
        """
        self._require_fitted()
        X = self._line_matrix(sample)
        mask = np.asarray(mask, dtype=float)
        if mask.shape != (X.shape[0],):
            raise ShapeError(f"mask has shape {mask.shape}, expected ({X.shape[0]},)")
        return self._classify(X * mask[:, None])

    def predict(self, sample: Sample) -> tuple[int, np.ndarray]:
        probs = self.predict_proba(sample)
        return int(np.argmax(probs)), probs

    def evaluate(self, corpus: Corpus) -> EvalReport:
        y_true = np.array([int(s.label) for s in corpus])
        y_proba = np.array([self.predict_proba(s) for s in corpus])
        y_pred = np.argmax(y_proba, axis=1)
        return compute_metrics(y_true, y_pred, y_proba, n_classes=len(self.classes))

    def _line_matrix(self, sample: Sample) -> np.ndarray:
        key = (sample.id, sample.code)
        if self._matrix_cache is not None and self._matrix_cache[0] == key:
            return self._matrix_cache[1]
        X = line_embeddings(sample, self.provider)
        if X.shape[0] == 0:
            X = np.zeros((1, self.provider.dim))
        self._matrix_cache = (key, X)
        return X

    def _snippet_embedding(self, X: np.ndarray) -> np.ndarray:
        A = adjacency(build_line_graph(X.shape[0]))
        final, _ = forward(self.gcn, X, A)
        return final.h_final

    def _classify(self, X: np.ndarray) -> np.ndarray:
        h = self._snippet_embedding(X)
        if self.config.model == "deeptree":
            return models.deeptree_predict(self.deeptree, h)[1]
        if self.config.model == "tree":
            return models.tree_predict_proba(self.tree, h)
        return models.linear_predict_proba(self.linear, h[None, :])[0]

    def _require_fitted(self) -> None:
        if not self.is_fitted:
            raise ValidationError("pipeline is not fitted; call fit() or load a model file")

    # -- persistence --------------------------------------------------------

    def to_dict(self) -> dict:
        self._require_fitted()
        doc = {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "model": self.config.model,
            "classes": self.classes,
            "embed": {
                "kind": self.config.embedder,
                "dim": self.config.dim,
                "seed": self.config.embed_seed,
            },
            "gcn": {
                "W": self.gcn.W.tolist(),
                "b": self.gcn.b.tolist(),
                "d_in": self.gcn.d_in,
                "d_out": self.gcn.d_out,
            },
        }
        if self.config.embedder == "file":
            doc["embed"]["source"] = self.config.embed_file
        if self.config.model == "deeptree":
            doc["tree"] = models.tree_to_dict(self.deeptree.tree)
            doc["mlp"] = models.mlp_to_dict(self.deeptree.mlp)
        elif self.config.model == "tree":
            doc["tree"] = models.tree_to_dict(self.tree)
        else:
            doc["linear"] = models.linear_to_dict(self.linear)
        doc["config"] = self.config.to_dict()
        return doc

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")

    @classmethod
    def from_dict(cls, doc: dict) -> "Pipeline":
        if doc.get("format") != MODEL_FORMAT or doc.get("version") != MODEL_VERSION:
            raise SchemaError(
                f"expected a {MODEL_FORMAT!r} v{MODEL_VERSION} document, "
                f"got format={doc.get('format')!r} version={doc.get('version')!r}"
            )
        pipeline = cls(PipelineConfig.from_dict(doc["config"]))
        pipeline.classes = list(doc["classes"])
        pipeline.gcn = GcnParams(
            W=np.array(doc["gcn"]["W"], dtype=float), b=np.array(doc["gcn"]["b"], dtype=float)
        )
        kind = doc["model"]
        if kind == "deeptree":
            pipeline.deeptree = models.DeepTreeModel(
                tree=models.tree_from_dict(doc["tree"]),
                mlp=models.mlp_from_dict(doc["mlp"]),
                class_count=len(pipeline.classes),
            )
        elif kind == "tree":
            pipeline.tree = models.tree_from_dict(doc["tree"])
        else:
            pipeline.linear = models.linear_from_dict(doc["linear"])
        return pipeline

    @classmethod
    def load(cls, path) -> "Pipeline":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not a valid model file ({exc.msg})") from None
        return cls.from_dict(doc)
