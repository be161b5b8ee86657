"""Command-line client for the pipeline service.

The CLI is a thin layer over the service's request/response models. By
default commands run in-process; with ``--server URL`` (or ``CGN_SERVER``)
the same requests go over HTTP to a running ``cgn serve`` instance, in which
case paths are resolved on the server.

Exit codes: 0 success, 1 runtime/data error, 2 usage error.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx

from . import __version__, schemas
from .errors import CgnError


class ServiceClient:
    """Dispatches a request model either in-process or to a remote server."""

    def __init__(self, server: str | None):
        self.server = server

    @property
    def is_local(self) -> bool:
        return self.server is None

    def call(self, endpoint: str, request, response_type):
        if self.is_local:
            from . import service

            runner = {
                "/ingest": service.run_ingest,
                "/train": service.run_train,
                "/eval": service.run_eval,
                "/crossval": service.run_crossval,
                "/explain": service.run_explain,
            }[endpoint]
            try:
                return runner(request)
            except FileNotFoundError as exc:
                raise click.UsageError(f"no such file: {exc.filename}") from None
            except CgnError as exc:
                raise click.ClickException(str(exc)) from None

        with httpx.Client(base_url=self.server, timeout=None) as client:
            response = client.post(endpoint, json=request.model_dump())
        if response.status_code != 200:
            try:
                error = schemas.ErrorResponse.model_validate(response.json()).error
            except Exception:
                raise click.ClickException(
                    f"server returned {response.status_code}: {response.text[:200]}"
                ) from None
            if error.category == "usage":
                raise click.UsageError(error.message)
            raise click.ClickException(error.message)
        return response_type.model_validate(response.json())

    def check_input(self, path: str) -> None:
        # Only meaningful in local mode; a remote server has its own filesystem.
        if self.is_local and not Path(path).exists():
            raise click.UsageError(f"no such file: {path}")


@click.group()
@click.version_option(version=__version__)
@click.option("--server", envvar="CGN_SERVER", default=None, metavar="URL",
              help="Send commands to a running service instead of executing in-process.")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    """Vulnerability classification and line highlighting for C/C++ snippets."""
    ctx.obj = ServiceClient(server)


def _run_options(embedder, embed_file, dim, model, gcn_mode, seed,
                 gcn_epochs, mlp_epochs, sgd_epochs) -> schemas.RunOptions:
    return schemas.RunOptions(
        embedder=embedder,
        embed_file=embed_file,
        dim=dim,
        model=model,
        gcn_mode=gcn_mode,
        seed=seed,
        gcn_epochs=gcn_epochs,
        mlp_epochs=mlp_epochs,
        sgd_epochs=sgd_epochs,
    )


_train_options = [
    click.option("--embedder", type=click.Choice(["hash", "file"]), default="hash", show_default=True),
    click.option("--embed-file", type=str, default=None, help="Exchange file for --embedder file."),
    click.option("--dim", type=int, default=768, show_default=True, help="Embedding dimension."),
    click.option("--model", type=click.Choice(["deeptree", "tree", "sgd"]), default="deeptree",
                 show_default=True),
    click.option("--gcn-mode", type=click.Choice(["fixed", "trained"]), default="trained",
                 show_default=True),
    click.option("--gcn-epochs", type=int, default=100, show_default=True),
    click.option("--mlp-epochs", type=int, default=100, show_default=True),
    click.option("--sgd-epochs", type=int, default=100, show_default=True),
    click.option("--seed", type=int, default=0, show_default=True),
]


def _with_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn

    return wrap


@main.command()
@click.option("--input", "input_path", required=True, help="Corpus CSV (id,code,label).")
@click.option("--out", "out_dir", required=True, help="Output directory for train/test CSVs.")
@click.option("--balance", type=click.Choice(["downsample", "upsample"]), default=None,
              help="Equalize class counts before splitting.")
@click.option("--balance-target", type=int, default=None, help="Per-class target count.")
@click.option("--test-fraction", type=float, default=0.2, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.pass_obj
def ingest(client: ServiceClient, input_path, out_dir, balance, balance_target, test_fraction, seed):
    """Load, optionally balance, and split a corpus into train/test CSVs."""
    client.check_input(input_path)
    request = schemas.IngestRequest(
        input_path=input_path,
        out_dir=out_dir,
        balance=balance,
        balance_target=balance_target,
        test_fraction=test_fraction,
        seed=seed,
    )
    response = client.call("/ingest", request, schemas.IngestResponse)
    click.echo(json.dumps({
        "train_path": response.train_path,
        "test_path": response.test_path,
        "class_counts": response.class_counts,
        "train_counts": response.train_counts,
        "test_counts": response.test_counts,
    }, indent=2))


@main.command()
@click.option("--input", "input_path", required=True, help="Training corpus CSV.")
@click.option("--out", "out_dir", required=True, help="Output directory for the model bundle.")
@_with_options(_train_options)
@click.pass_obj
def train(client: ServiceClient, input_path, out_dir, embedder, embed_file, dim, model,
          gcn_mode, gcn_epochs, mlp_epochs, sgd_epochs, seed):
    """Train a pipeline and write model.json plus train_report.json."""
    client.check_input(input_path)
    if embedder == "file" and not embed_file:
        raise click.UsageError("--embedder file requires --embed-file")
    request = schemas.TrainRequest(
        input_path=input_path,
        out_dir=out_dir,
        options=_run_options(embedder, embed_file, dim, model, gcn_mode, seed,
                             gcn_epochs, mlp_epochs, sgd_epochs),
    )
    response = client.call("/train", request, schemas.TrainResponse)
    click.echo(f"model written to {response.model_path}")
    click.echo(f"train accuracy {response.final_train_accuracy:.4f}")


@main.command("eval")
@click.option("--model-file", required=True, help="Model bundle from `cgn train`.")
@click.option("--input", "input_path", required=True, help="Evaluation corpus CSV.")
@click.option("--out", "out_path", default=None, help="Optional path for the report JSON.")
@click.pass_obj
def eval_cmd(client: ServiceClient, model_file, input_path, out_path):
    """Evaluate a saved model on a labeled corpus."""
    client.check_input(model_file)
    client.check_input(input_path)
    request = schemas.EvalRequest(model_path=model_file, input_path=input_path, out_path=out_path)
    response = client.call("/eval", request, schemas.EvalResponse)
    click.echo(response.table)
    if response.out_path:
        click.echo(f"report written to {response.out_path}")


@main.command()
@click.option("--input", "input_path", required=True, help="Corpus CSV.")
@click.option("--folds", type=int, default=10, show_default=True)
@click.option("--out", "out_path", default=None, help="Optional path for the aggregate JSON.")
@_with_options(_train_options)
@click.pass_obj
def crossval(client: ServiceClient, input_path, folds, out_path, embedder, embed_file, dim,
             model, gcn_mode, gcn_epochs, mlp_epochs, sgd_epochs, seed):
    """Stratified k-fold cross-validation of the configured pipeline."""
    client.check_input(input_path)
    request = schemas.CrossvalRequest(
        input_path=input_path,
        folds=folds,
        out_path=out_path,
        options=_run_options(embedder, embed_file, dim, model, gcn_mode, seed,
                             gcn_epochs, mlp_epochs, sgd_epochs),
    )
    response = client.call("/crossval", request, schemas.CrossvalResponse)
    for name in sorted(response.mean):
        click.echo(f"{name:>16}: {response.mean[name]:.4f} +/- {response.std[name]:.4f}")
    if response.out_path:
        click.echo(f"report written to {response.out_path}")


@main.command()
@click.option("--model-file", required=True, help="Model bundle from `cgn train`.")
@click.option("--source", "source_path", default=None, help="A source file to explain.")
@click.option("--id", "sample_id", default=None, help="Explain this sample id from --input.")
@click.option("--input", "input_path", default=None, help="Corpus CSV for --id lookup.")
@click.option("--format", "format_", type=click.Choice(["ansi", "html", "json"]), default="ansi",
              show_default=True)
@click.option("--perturbations", type=int, default=200, show_default=True,
              help="Number of line masks sampled by the surrogate.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", default=None, help="Write the report here instead of stdout.")
@click.pass_obj
def explain(client: ServiceClient, model_file, source_path, sample_id, input_path,
            format_, perturbations, seed, out_path):
    """Rank a snippet's lines by their influence on the predicted class."""
    client.check_input(model_file)
    if source_path is None and not (sample_id and input_path):
        raise click.UsageError("pass either --source FILE or both --id and --input")
    if source_path is not None:
        client.check_input(source_path)
    if input_path is not None:
        client.check_input(input_path)
    request = schemas.ExplainRequest(
        model_path=model_file,
        source_path=source_path,
        sample_id=sample_id,
        input_path=input_path,
        format=format_,
        n_perturbations=perturbations,
        seed=seed,
        out_path=out_path,
    )
    response = client.call("/explain", request, schemas.ExplainResponse)
    if response.out_path:
        click.echo(f"report written to {response.out_path}")
    else:
        click.echo(response.report)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host: str, port: int):
    """Run the HTTP service."""
    import uvicorn

    from .service import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    sys.exit(main())
