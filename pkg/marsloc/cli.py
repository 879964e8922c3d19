"""Command-line entry point: ``marsloc <command> [options]``."""

from __future__ import annotations

from typing import TYPE_CHECKING
from collections.abc import Callable, Sequence
import argparse
import logging
from pathlib import Path

import numba

from .dataset import make_dataset, sample_queries
from .errors import MarslocError
from .harness import (
    load_maps,
    load_queries,
    load_rendered_queries,
    localize_queries,
    map_lightings,
    obtain_terrain,
    read_results,
    render_maps,
    render_query_set,
    run_experiment,
    save_maps,
    save_queries,
    save_rendered_queries,
    summarize,
    write_reports,
    write_results,
    write_terrain,
)
from .models.experiment import ExperimentConfig
from .terrain import build_accel

if TYPE_CHECKING:
    from .models.experiment import Lighting

__all__ = ("build_parser", "main")

_log = logging.getLogger(__name__)


def _lightings(args: argparse.Namespace, config: ExperimentConfig) -> list[Lighting]:
    if args.lighting:
        return [(az % 360.0, el) for az, el in args.lighting]
    return map_lightings(config)


def _gen_terrain(config: ExperimentConfig, _: argparse.Namespace) -> None:
    write_terrain(config)


def _render_map(config: ExperimentConfig, args: argparse.Namespace) -> None:
    accel = build_accel(obtain_terrain(config))
    save_maps(render_maps(accel, config, _lightings(args, config)), config.out)


def _sample_queries(config: ExperimentConfig, _: argparse.Namespace) -> None:
    queries = sample_queries(
        obtain_terrain(config),
        config.queries.count,
        config.queries.altitude_range_m,
        config.seed,
        intrinsics=config.queries.intrinsics(),
    )
    save_queries(queries, config.out)


def _render_queries(config: ExperimentConfig, _: argparse.Namespace) -> None:
    accel = build_accel(obtain_terrain(config))
    save_rendered_queries(render_query_set(accel, load_queries(config.out), config), config.out)


def _make_dataset(config: ExperimentConfig, args: argparse.Namespace) -> None:
    rendered = load_rendered_queries(config.out, load_queries(config.out), config)
    make_dataset(
        config.out / "dataset",
        [(query, image) for _, query, image in rendered],
        load_maps(config.out, _lightings(args, config)),
        window=config.dataset.window,
        window_overlap=config.dataset.window_overlap,
        min_overlap=config.dataset.min_overlap,
        reference=config.dataset.overlap_reference,
        threads=config.threads,
    )


def _localize(config: ExperimentConfig, args: argparse.Namespace) -> None:
    rendered = load_rendered_queries(config.out, load_queries(config.out), config)
    results, diagnostics = localize_queries(rendered, load_maps(config.out, _lightings(args, config)), config)
    write_results(results, diagnostics, config.out)


def _evaluate(config: ExperimentConfig, _: argparse.Namespace) -> None:
    report = summarize(read_results(config.out / "results.csv", config.queries), config.queries)
    write_reports(report, config.out, title=f"marsloc sweep, seed {config.seed}, matcher {config.localize.matcher}")
    for cell in report.cells:
        if cell.altitude_bin == "all":
            _log.info(
                "map (%g, %g) query (%g, %g): @1m %.3f, median %.3f m over %d attempts",
                *cell.map_lighting,
                *cell.query_lighting,
                cell.at1m,
                cell.median_m,
                cell.n,
            )


def _run(config: ExperimentConfig, _: argparse.Namespace) -> None:
    run_experiment(config)


_COMMANDS: dict[str, tuple[Callable[[ExperimentConfig, argparse.Namespace], None], str]] = {
    "gen-terrain": (_gen_terrain, "generate or load the terrain and write it under <out>/terrain"),
    "render-map": (_render_map, "render orthographic gray and depth maps for every map lighting"),
    "sample-queries": (_sample_queries, "draw query positions and altitudes into <out>/queries.jsonl"),
    "render-queries": (_render_queries, "place and render every query under every query lighting"),
    "make-dataset": (_make_dataset, "cut map windows and write the triplet manifest under <out>/dataset"),
    "localize": (_localize, "localize every rendered query against every map"),
    "evaluate": (_evaluate, "aggregate results.csv into summary.csv, cdf.txt and summary.xlsx"),
    "run": (_run, "run the whole sweep in one process"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="marsloc", description="Map-based localization sweeps on synthetic Mars terrain")
    parser.add_argument("--config", type=Path, default=None, help="JSON experiment configuration")
    parser.add_argument("--seed", type=int, default=None, help="master seed, overrides the configuration")
    parser.add_argument("--threads", type=int, default=None, help="worker count, overrides the configuration")
    parser.add_argument("--out", type=Path, default=None, help="output directory, overrides the configuration")
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="logging threshold (default: INFO)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in _COMMANDS.items():
        cmd = sub.add_parser(name, help=help_text)
        if name in ("render-map", "make-dataset", "localize"):
            cmd.add_argument(
                "--lighting",
                type=float,
                nargs=2,
                action="append",
                metavar=("AZ", "EL"),
                help="map lighting to use instead of the configured grid; repeatable",
            )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")

    try:
        config = ExperimentConfig.load(args.config) if args.config is not None else ExperimentConfig()
        config = config.with_overrides(seed=args.seed, threads=args.threads, out=args.out)
        numba.set_num_threads(min(config.threads, numba.config.NUMBA_NUM_THREADS))
        handler, _ = _COMMANDS[args.command]
        handler(config, args)
    except MarslocError as exc:
        _log.error("%s failed: %s", args.command, exc)
        return 1
    return 0
