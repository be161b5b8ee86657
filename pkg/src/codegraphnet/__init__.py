"""Line-graph feature embedding, DeepTree classification and vulnerable-line
highlighting for C/C++ code snippets."""

from .corpus import (
    Corpus,
    CweClass,
    Sample,
    augment,
    balance,
    kfold_partition,
    load_corpus,
    save_corpus,
    split,
)
from .embedding import (
    HashEmbeddingProvider,
    embed_tokens_hash,
    line_embeddings,
    load_precomputed,
    pool_mean,
)
from .explain import ExplainConfig, Explanation, apply_mask, explain_lines, perturb_masks, render_report
from .gcn import GcnParams, GcnTrainConfig, forward, gradient, init_params, train_gcn
from .linegraph import adjacency, build_line_graph, split_lines, tokenize_line
from .metrics import compute_metrics, confusion, cross_validate
from .models import (
    DeepTreeConfig,
    DeepTreeModel,
    SgdConfig,
    TreeConfig,
    TreeModel,
    deeptree_predict,
    fit_deeptree,
    fit_sgd_baseline,
    fit_tree,
    tree_predict_proba,
)
from .pipeline import Pipeline, PipelineConfig

__version__ = "0.1.0"
