"""Batch entry points: corpus generation, feature extraction, distance
matrices, automated experiments and the HTTP server.

Every command is idempotent for fixed inputs and seeds; feature
extraction resumes from its cache.  Exit codes: 2 for configuration
problems, 3 for data problems, 4 for compute failures.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .config import build_config
from .cube import load_corpus, save_corpus
from .dissim import KINDS, load_matrix_csv, pairwise_matrix, save_matrix_csv
from .errors import (
    ConfigError,
    EmptyCorpusError,
    HeaderError,
    NonFiniteDataError,
    SizeMismatchError,
    SpecbirError,
)
from .evaluation import reports_to_csv, reports_to_json, run_experiment
from .features import featurize_corpus
from .rf import DissimilarityIndex, RfConfig
from .synth import synth_corpus

_DATA_ERRORS = (HeaderError, SizeMismatchError, NonFiniteDataError,
                EmptyCorpusError, FileNotFoundError)

EXIT_CONFIG, EXIT_DATA, EXIT_COMPUTE = 2, 3, 4


def _run(action):
    try:
        action()
    except (ConfigError, click.UsageError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except _DATA_ERRORS as exc:
        click.echo(f"data error: {exc}", err=True)
        sys.exit(EXIT_DATA)
    except SpecbirError as exc:
        click.echo(f"compute error: {exc}", err=True)
        sys.exit(EXIT_COMPUTE)


@click.group()
def main():
    """Hyperspectral patch retrieval with relevance feedback."""


_config_option = click.option("--config", "config_path", type=click.Path(),
                              default=None, help="key:value config file")


@main.command()
@_config_option
@click.option("--out", "corpus_dir", default=None, help="corpus output directory")
@click.option("--categories", "n_categories", type=int, default=None)
@click.option("--patches-per-category", default=None,
              help="comma-separated counts, one per category")
@click.option("--side", type=int, default=None)
@click.option("--bands", type=int, default=None)
@click.option("--noise-sigma", type=float, default=None)
@click.option("--seed", type=int, default=None)
def synth(config_path, corpus_dir, n_categories, patches_per_category,
          side, bands, noise_sigma, seed):
    """Generate a synthetic labelled corpus."""
    def action():
        counts = None
        if patches_per_category is not None:
            counts = [int(c) for c in patches_per_category.split(",")]
        cfg = build_config(
            config_path, corpus_dir=corpus_dir, n_categories=n_categories,
            patches_per_category=counts, side=side, bands=bands,
            noise_sigma=noise_sigma, seed=seed,
        )
        patches, labels = synth_corpus(
            cfg.n_categories, cfg.patches_per_category, cfg.side, cfg.bands,
            cfg.noise_sigma, cfg.seed,
        )
        save_corpus(cfg.corpus_dir, patches, labels)
        click.echo(f"wrote {len(patches)} patches to {cfg.corpus_dir}")
    _run(action)


@main.command()
@_config_option
@click.option("--corpus", "corpus_dir", default=None)
@click.option("--out", "features_dir", default=None)
@click.option("--m", type=int, default=None, help="endmembers per patch")
@click.option("--runs", "vca_runs", type=int, default=None)
@click.option("--levels", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--workers", type=int, default=None)
def featurize(config_path, corpus_dir, features_dir, m, vca_runs, levels,
              seed, workers):
    """Extract and cache per-patch features (unmixing + dictionaries)."""
    def action():
        cfg = build_config(config_path, corpus_dir=corpus_dir,
                           features_dir=features_dir, m=m, vca_runs=vca_runs,
                           levels=levels, seed=seed, workers=workers)
        patches, _ = load_corpus(cfg.corpus_dir)
        cache = cfg.resolved_features_dir()
        before = len(list(cache.glob("*.npz"))) if cache.exists() else 0
        featurize_corpus(patches, cache_dir=cache, m=cfg.m, runs=cfg.vca_runs,
                         seed=cfg.seed, levels=cfg.levels, workers=cfg.workers)
        after = len(list(cache.glob("*.npz")))
        click.echo(f"featurized {after - before} patches "
                   f"({before} cached) into {cache}")
    _run(action)


@main.command()
@_config_option
@click.option("--corpus", "corpus_dir", default=None)
@click.option("--features", "features_dir", default=None)
@click.option("--out", "distmat_dir", default=None)
@click.option("--kinds", default=None, help="comma-separated dissimilarity kinds")
@click.option("--m", type=int, default=None)
@click.option("--seed", type=int, default=None)
def distmat(config_path, corpus_dir, features_dir, distmat_dir, kinds, m, seed):
    """Precompute and persist N x N dissimilarity matrices."""
    def action():
        kind_list = [k.strip() for k in kinds.split(",")] if kinds else None
        cfg = build_config(config_path, corpus_dir=corpus_dir,
                           features_dir=features_dir, distmat_dir=distmat_dir,
                           kinds=kind_list, m=m, seed=seed)
        for kind in cfg.kinds:
            if kind not in KINDS:
                raise ConfigError(f"unknown dissimilarity kind {kind!r}")
        patches, _ = load_corpus(cfg.corpus_dir)
        features = featurize_corpus(
            patches, cache_dir=cfg.resolved_features_dir(), m=cfg.m,
            runs=cfg.vca_runs, seed=cfg.seed, levels=cfg.levels,
            workers=cfg.workers,
        )
        out_dir = cfg.resolved_distmat_dir()
        out_dir.mkdir(parents=True, exist_ok=True)
        ids = [p.id for p in patches]
        for kind in cfg.kinds:
            matrix = pairwise_matrix(features, kind)
            path = out_dir / f"distmat_{kind}.csv"
            save_matrix_csv(path, ids, matrix)
            click.echo(f"wrote {path}")
    _run(action)


@main.command()
@_config_option
@click.option("--corpus", "corpus_dir", default=None)
@click.option("--features", "features_dir", default=None)
@click.option("--distmats", "distmat_dir", default=None)
@click.option("--kinds", default=None)
@click.option("--classifiers", default=None)
@click.option("--policies", "prototype_policies", default=None)
@click.option("--criteria", default=None)
@click.option("--scope", type=int, default=None)
@click.option("--k", type=int, default=None)
@click.option("--t-max", "t_max", type=int, default=None)
@click.option("--out-csv", default=None, help="ANR table output path")
@click.option("--out-json", default=None, help="full report output path")
def experiment(config_path, corpus_dir, features_dir, distmat_dir, kinds,
               classifiers, prototype_policies, criteria, scope, k, t_max,
               out_csv, out_json):
    """Run the simulated-user categorical search over all configurations."""
    def action():
        def split(text):
            return [p.strip() for p in text.split(",")] if text else None
        cfg = build_config(
            config_path, corpus_dir=corpus_dir, features_dir=features_dir,
            distmat_dir=distmat_dir, kinds=split(kinds),
            classifiers=split(classifiers),
            prototype_policies=split(prototype_policies),
            criteria=split(criteria), scope=scope, k=k, t_max=t_max,
        )
        patches, labels = load_corpus(cfg.corpus_dir)
        if labels is None:
            raise EmptyCorpusError(f"{cfg.corpus_dir} has no labels.csv")
        indexes = _load_or_build_indexes(cfg, patches)
        reports = []
        for kind in cfg.kinds:
            for classifier in cfg.classifiers:
                for policy in cfg.prototype_policies:
                    for criterion in cfg.criteria:
                        rf_config = RfConfig(
                            kind=kind, classifier=classifier,
                            prototype_policy=policy, criterion=criterion,
                            scope=cfg.scope_for(criterion), k=cfg.k,
                            t_max=cfg.t_max, n_clusters=cfg.n_clusters,
                        )
                        report = run_experiment(indexes[kind], labels, rf_config)
                        reports.append(report)
                        click.echo(
                            f"{kind} {classifier} {policy} {criterion}: "
                            f"ANR zero={report.anr_zero:.4f} "
                            f"final={report.anr_final:.4f}"
                        )
        if out_csv:
            Path(out_csv).write_text(reports_to_csv(reports))
            click.echo(f"wrote {out_csv}")
        if out_json:
            Path(out_json).write_text(reports_to_json(reports))
            click.echo(f"wrote {out_json}")
    _run(action)


def _load_or_build_indexes(cfg, patches) -> dict:
    """One DissimilarityIndex per requested kind, from CSV when present."""
    indexes = {}
    ids = [p.id for p in patches]
    features = None
    for kind in cfg.kinds:
        if kind not in KINDS:
            raise ConfigError(f"unknown dissimilarity kind {kind!r}")
        path = cfg.resolved_distmat_dir() / f"distmat_{kind}.csv"
        if path.exists():
            file_ids, matrix = load_matrix_csv(path)
            if file_ids != ids:
                raise HeaderError(f"{path} ids do not match the corpus")
            indexes[kind] = DissimilarityIndex(ids, matrix, kind)
            continue
        if features is None:
            features = featurize_corpus(
                patches, cache_dir=cfg.resolved_features_dir(), m=cfg.m,
                runs=cfg.vca_runs, seed=cfg.seed, levels=cfg.levels,
                workers=cfg.workers,
            )
        matrix = pairwise_matrix(features, kind)
        path.parent.mkdir(parents=True, exist_ok=True)
        save_matrix_csv(path, ids, matrix)
        indexes[kind] = DissimilarityIndex(ids, matrix, kind)
    return indexes


@main.command()
@_config_option
@click.option("--corpus", "corpus_dir", default=None)
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--state-dir", default=None, help="session persistence directory")
def serve(config_path, corpus_dir, host, port, state_dir):
    """Serve the retrieval engine and web console over HTTP."""
    def action():
        import uvicorn

        from .server import create_app

        cfg = build_config(config_path, corpus_dir=corpus_dir)
        app = create_app(state_dir=state_dir, run_config=cfg)
        if corpus_dir or config_path:
            app.state.engine_state.load_corpus(cfg.corpus_dir)
        uvicorn.run(app, host=host, port=port, log_level="warning")
    _run(action)


if __name__ == "__main__":
    main()
