"""Batch entry point: replay corpora, run ablations, export and serve.

Exit codes: 0 success, 1 validation failure, 2 pipeline deferral
exhaustion, 3 I/O failure.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click

from .clock import SimulatedClock
from .config import PipelineConfig
from .errors import IntegrityError, ValidationError
from .gateway import ProviderBinding, resolve_rulebook
from .graph import GraphStore
from .graph.export import canonical_export_bytes, tree_text
from .ingest import read_corpus
from .pipeline.ablation import VARIANTS
from .report import render_comparison_figure, variant_stats, write_comparison_csv
from .workspace import Workspace
from . import mocks  # noqa: F401  (registers the builtin rulebooks)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_DEFERRAL = 2
EXIT_IO = 3


def _binding(provider: str, mock_rules: str, seed: int, endpoint: str) -> ProviderBinding:
    if provider == "mock":
        return ProviderBinding(kind="mock", rulebook=resolve_rulebook(mock_rules, seed=seed))
    return ProviderBinding(kind="remote", endpoint=endpoint)


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@click.group()
@click.option("--verbose", is_flag=True, help="log pipeline progress")
def main(verbose: bool):
    """Goal-induction engine over screen-activity corpora."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


corpus_option = click.option("--corpus", required=True, type=click.Path(), help="corpus file (TEMPO-CORPUS v1)")
config_option = click.option("--config", "config_path", default=None, type=click.Path(), help="pipeline config JSON")
provider_option = click.option("--provider", type=click.Choice(["mock", "remote"]), default="mock")
mock_rules_option = click.option("--mock-rules", default="fixture",
                                 help="builtin rulebook name or rulebook JSON path")
seed_option = click.option("--seed", default=0, type=int, help="mock tie-breaking seed")
endpoint_option = click.option("--endpoint", default="", help="remote provider URL")
context_option = click.option("--context", "context_path", default=None, type=click.Path(),
                              help="user context JSON ({question id: answer})")


def _load_workspace(out: str, config_path, provider, mock_rules, seed, endpoint,
                    variant: str = "full", context_path=None) -> Workspace:
    config = PipelineConfig.load(config_path)
    binding = _binding(provider, mock_rules, seed, endpoint)
    workspace = Workspace(Path(out), config, binding, clock=SimulatedClock(), variant=variant)
    if context_path:
        raw = json.loads(Path(context_path).read_text(encoding="utf-8"))
        answers = raw.get("answers", raw)
        from .pipeline.records import QUESTION_IDS, UserContextDoc
        doc = UserContextDoc(answers={qid: answers.get(qid, "") for qid in QUESTION_IDS})
        workspace.save_context(doc)
    return workspace


def _replay_into(workspace: Workspace, corpus_path: str) -> None:
    corpus = read_corpus(corpus_path)
    workspace.pipeline.run_stream(corpus)


@main.command()
@corpus_option
@config_option
@provider_option
@mock_rules_option
@seed_option
@endpoint_option
@context_option
@click.option("--out", required=True, type=click.Path(), help="output/store directory")
def replay(corpus, config_path, provider, mock_rules, seed, endpoint, context_path, out):
    """Replay a corpus through the full pipeline under a simulated clock."""
    try:
        workspace = _load_workspace(out, config_path, provider, mock_rules, seed, endpoint,
                                    context_path=context_path)
    except ValidationError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    try:
        _replay_into(workspace, corpus)
        export_path = workspace.write_export()
        workspace.write_snapshot()
    except ValidationError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    finally:
        workspace.close()
    if workspace.pipeline.deferral_exhausted:
        _fail(EXIT_DEFERRAL, "pipeline deferral budget exhausted; see events.log")
    click.echo(f"replayed {corpus} -> {export_path}")


@main.command()
@corpus_option
@config_option
@provider_option
@mock_rules_option
@seed_option
@endpoint_option
@context_option
@click.option("--variants", "--variant", "variants", default="full,no_context,no_hierarchy",
              help="comma-separated subset of " + ",".join(VARIANTS))
@click.option("--out", required=True, type=click.Path(), help="report directory")
def ablate(corpus, config_path, provider, mock_rules, seed, endpoint, context_path, variants, out):
    """Run ablation variants on one stream; write per-variant exports + report."""
    chosen = [v.strip() for v in variants.split(",") if v.strip()]
    unknown = [v for v in chosen if v not in VARIANTS]
    if unknown:
        _fail(EXIT_VALIDATION, f"unknown variants {unknown}; choose from {list(VARIANTS)}")
    out_dir = Path(out)
    rows = []
    try:
        for variant in chosen:
            workspace = _load_workspace(out_dir / variant, config_path, provider, mock_rules,
                                        seed, endpoint, variant=variant, context_path=context_path)
            try:
                _replay_into(workspace, corpus)
                workspace.write_export()
            finally:
                workspace.close()
            if workspace.pipeline.deferral_exhausted:
                _fail(EXIT_DEFERRAL, f"variant {variant}: deferral budget exhausted")
            rows.append(variant_stats(variant, workspace.store))
    except ValidationError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    except OSError as exc:
        _fail(EXIT_IO, str(exc))
    write_comparison_csv(rows, out_dir / "comparison.csv")
    render_comparison_figure(rows, out_dir / "comparison.png")
    for row in rows:
        click.echo(f"{row['variant']}: strivings={row['strivings']} depth={row['structural_depth']}")
    click.echo(f"report written to {out_dir / 'comparison.csv'} and comparison.png")


@main.command()
@click.option("--store", "store_dir", required=True, type=click.Path(), help="store directory (graph.log)")
@click.option("--format", "fmt", type=click.Choice(["canonical", "tree-text"]), default="canonical")
@click.option("--include-removed", is_flag=True)
@click.option("--out", default="-", help="output path, '-' for stdout")
def export(store_dir, fmt, include_removed, out):
    """Serialize a store deterministically (canonical JSON or a readable tree)."""
    log_path = Path(store_dir) / "graph.log"
    if not log_path.exists():
        _fail(EXIT_IO, f"no graph log at {log_path}")
    try:
        store = GraphStore.open(log_path)
    except IntegrityError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    if fmt == "canonical":
        payload = canonical_export_bytes(store, include_removed=include_removed)
    else:
        payload = tree_text(store).encode("utf-8")
    store.close()
    if out == "-":
        click.echo(payload.decode("utf-8"), nl=False)
    else:
        try:
            Path(out).write_bytes(payload)
        except OSError as exc:
            _fail(EXIT_IO, str(exc))
        click.echo(f"wrote {out}")


@main.command()
@config_option
@provider_option
@mock_rules_option
@seed_option
@endpoint_option
@click.option("--data", "data_dir", required=True, type=click.Path(), help="data directory")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8787, show_default=True)
@click.option("--ui", "ui_dir", default=None, type=click.Path(),
              help="serve a built UI directory (index.html + dist/) at /")
def serve(config_path, provider, mock_rules, seed, endpoint, data_dir, host, port, ui_dir):
    """Run the local HTTP service (loopback by default) on a data directory."""
    import uvicorn

    from .service import create_app

    try:
        config = PipelineConfig.load(config_path)
        binding = _binding(provider, mock_rules, seed, endpoint)
        workspace = Workspace(Path(data_dir), config, binding)
    except ValidationError as exc:
        _fail(EXIT_VALIDATION, str(exc))
    if ui_dir is not None and not (Path(ui_dir) / "index.html").exists():
        _fail(EXIT_IO, f"no index.html under {ui_dir}; build the UI first")
    app = create_app(workspace, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
