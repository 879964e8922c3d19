"""Experiment runner: terrain, maps, queries, localization sweeps and reports.

Each stage can run on its own (the command-line subcommands) and persists its
artifacts under the output directory, or the whole sweep runs in one call with
:func:`run_experiment`.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Any
from collections.abc import Sequence
import asyncio
import itertools
import logging
import math
from pathlib import Path

import numpy as np

from .constants import TIME_OF_DAY_MAP_LIGHTING
from .dataset import render_queries, sample_queries
from .enums import PoseStatus
from .errors import MarslocError, MissingMapError
from .geometry import intrinsics_matrix
from .lighting import lighting_grid, time_of_day_sweep
from .localize import localize, scale_hint
from .matchers import get_matcher
from .metrics import accuracy_at, cdf, localization_error, median_error
from .models.dataset import QuerySpec
from .models.experiment import CellSummary, MetricsReport, QueryResult
from .models.image import RenderSettings
from .models.localization import LocalizationDiagnostics
from .models.sun import SunConfig
from .render import default_map_camera, load_rendered, render_ortho, save_rendered
from .terrain import build_accel, generate_synthetic_terrain, load_terrain, save_terrain
from .utils.base_exporter import AttrField
from .utils.csv_exporter import CSVExporter, read_csv
from .utils.excel_exporter import ExcelExporter, Sheet
from .utils.json_exporter import JSONExporter, read_json_lines

if TYPE_CHECKING:
    from .internals._types.dataset import QuerySpecPayload
    from .matchers.base import Matcher
    from .models.experiment import ExperimentConfig, QueryConfig
    from .models.image import RenderedImage
    from .models.terrain import TerrainAccel, TerrainModel

__all__ = (
    "QUERY_COLUMNS",
    "SUMMARY_COLUMNS",
    "RenderedQuery",
    "load_maps",
    "load_queries",
    "load_rendered_queries",
    "localize_queries",
    "map_lightings",
    "obtain_terrain",
    "query_lightings",
    "read_results",
    "render_maps",
    "render_query_set",
    "run_experiment",
    "save_maps",
    "save_queries",
    "save_rendered_queries",
    "summarize",
    "write_cdf_table",
    "write_reports",
    "write_results",
    "write_terrain",
)

_log = logging.getLogger(__name__)

type Lighting = tuple[float, float]
type RenderedQuery = tuple[str | None, QuerySpec, RenderedImage]

QUERY_COLUMNS: tuple[AttrField, ...] = (
    AttrField("query_id"),
    AttrField("alt_m", "altitude_m"),
    AttrField("map_az_deg").transform(lambda r: r.map_lighting[0]),
    AttrField("map_el_deg").transform(lambda r: r.map_lighting[1]),
    AttrField("query_az_deg").transform(lambda r: r.query_lighting[0]),
    AttrField("query_el_deg").transform(lambda r: r.query_lighting[1]),
    AttrField("matcher"),
    AttrField("status"),
    AttrField("err_m", "error_m"),
    AttrField("inliers"),
    AttrField("reproj_px"),
    AttrField("ms_total"),
)

SUMMARY_COLUMNS: tuple[AttrField, ...] = (
    AttrField("map_az_deg").transform(lambda c: c.map_lighting[0]),
    AttrField("map_el_deg").transform(lambda c: c.map_lighting[1]),
    AttrField("query_az_deg").transform(lambda c: c.query_lighting[0]),
    AttrField("query_el_deg").transform(lambda c: c.query_lighting[1]),
    AttrField("delta_az_deg", "delta_az"),
    AttrField("delta_el_deg", "delta_el"),
    AttrField("alt_bin", "altitude_bin"),
    AttrField("n"),
    AttrField("at1m"),
    AttrField("median_m"),
    AttrField("fail_n"),
)

_WORKBOOK_QUERY_COLUMNS: tuple[AttrField, ...] = (*QUERY_COLUMNS, AttrField("alt_bin", "altitude_bin"), AttrField("lmst"))

_TERRAIN_DIR = "terrain"
_MAPS_DIR = "renders/maps"
_QUERIES_DIR = "renders/queries"
_QUERY_SPECS = "queries.jsonl"
_RESULTS_CSV = "results.csv"
_SUMMARY_CSV = "summary.csv"
_CDF_TABLE = "cdf.txt"
_WORKBOOK = "summary.xlsx"
_DIAGNOSTICS = "diagnostics.jsonl"


def _lighting_key(lighting: Lighting) -> str:
    return f"az{lighting[0]:g}_el{lighting[1]:g}"


def _lighting_label(map_lighting: Lighting, query_lighting: Lighting) -> str:
    return f"map{map_lighting[0]:g}/{map_lighting[1]:g}_query{query_lighting[0]:g}/{query_lighting[1]:g}"


# Terrain


def obtain_terrain(config: ExperimentConfig) -> TerrainModel:
    """
    Terrain of an experiment.

    File sources are loaded. A synthetic source is read back from the output
    directory when ``gen-terrain`` already wrote it, and generated otherwise.
    """
    source = config.terrain
    if source.kind == "file":
        return load_terrain(source.dtm_path, source.texture_path)  # type: ignore[arg-type]

    dtm, texture = config.out / _TERRAIN_DIR / "dtm.raw", config.out / _TERRAIN_DIR / "texture.pgm"
    if dtm.exists() and texture.exists():
        _log.info("reusing terrain from %s", dtm.parent)
        return load_terrain(dtm, texture)
    return generate_synthetic_terrain(
        config.terrain_seed,
        source.size_m,
        source.post_spacing_m,
        amplitude_m=source.amplitude_m,
        hurst=source.hurst,
        crater_count=source.crater_count,
        crater_radius_m=source.crater_radius_m,
        texture_factor=source.texture_factor,
    )


def write_terrain(config: ExperimentConfig) -> Path:
    """Generate or load the terrain and store it under ``<out>/terrain``."""

    terrain = obtain_terrain(config)
    folder = config.out / _TERRAIN_DIR
    folder.mkdir(parents=True, exist_ok=True)
    save_terrain(terrain, folder / "dtm.raw", folder / "texture.pgm")
    _log.info("terrain %r written to %s", terrain, folder)
    return folder


# Maps


def map_lightings(config: ExperimentConfig) -> list[Lighting]:
    """
    Map lightings: the explicit list when given, the azimuth by elevation grid otherwise.

    A time-of-day run without an explicit list keeps the map at the 15:00 lighting.
    """
    if config.map.lightings is not None:
        return list(config.map.lightings)
    if config.queries.lighting_table is not None:
        return [TIME_OF_DAY_MAP_LIGHTING]
    return lighting_grid(config.map.azimuths_deg, config.map.elevations_deg)


def render_maps(
    accel: TerrainAccel,
    config: ExperimentConfig,
    lightings: Sequence[Lighting] | None = None,
) -> dict[Lighting, RenderedImage]:
    """
    Render one orthographic map per lighting, all from the same camera.

    Returns
    -------
    dict[tuple[float, float], :class:`RenderedImage`]
        Maps keyed by ``(az, el)`` in lighting order.
    """
    oi, pose = default_map_camera(accel.terrain, pixel_size=config.map.pixel_size_m, altitude=config.map.altitude_m)
    settings = RenderSettings(seed=config.seed)
    maps: dict[Lighting, RenderedImage] = {}
    for lighting in lightings if lightings is not None else map_lightings(config):
        sun = SunConfig(*lighting, diameter_deg=config.map.sun_diameter_deg, samples=config.map.shadow_samples)
        maps[lighting] = render_ortho(accel, oi, pose, sun, settings)
    _log.info("rendered %d maps of %dx%d px at %g m/px", len(maps), oi.width, oi.height, config.map.pixel_size_m)
    return maps


def save_maps(maps: dict[Lighting, RenderedImage], out: Path) -> list[Path]:
    folder = out / _MAPS_DIR
    folder.mkdir(parents=True, exist_ok=True)
    return [save_rendered(image, folder / _lighting_key(lighting))[0] for lighting, image in maps.items()]


def load_maps(out: Path, lightings: Sequence[Lighting]) -> dict[Lighting, RenderedImage]:
    """
    Read maps written by :func:`save_maps`.

    Raises
    ------
    MissingMapError
        A requested lighting has no map on disk.
    """
    maps: dict[Lighting, RenderedImage] = {}
    for lighting in lightings:
        stem = out / _MAPS_DIR / _lighting_key(lighting)
        if not stem.with_name(stem.name + ".json").exists():
            raise MissingMapError(f"no map rendered for AZ {lighting[0]:g} / EL {lighting[1]:g} under {stem.parent}")
        maps[lighting] = load_rendered(stem)
    return maps


# Queries


def query_lightings(config: QueryConfig) -> list[tuple[str | None, Lighting]]:
    """
    Query lightings with their local solar time label.

    A lighting table replaces the explicit list; its rows carry the label.
    """
    if config.lighting_table is not None:
        return [(lmst, lighting) for lmst, lighting in time_of_day_sweep(config.lighting_table)]
    return [(None, lighting) for lighting in config.lightings]


def save_queries(queries: Sequence[QuerySpec], out: Path) -> Path:
    path = out / _QUERY_SPECS
    with JSONExporter(indent=None).lines(path) as writer:
        for query in queries:
            writer.write(query.to_payload())
    _log.info("wrote %d query specs to %s", writer.count, path)
    return path


def load_queries(out: Path) -> list[QuerySpec]:
    payloads: list[QuerySpecPayload] = read_json_lines(out / _QUERY_SPECS)
    return [QuerySpec.from_payload(p) for p in payloads]


def render_query_set(
    accel: TerrainAccel,
    queries: Sequence[QuerySpec],
    config: ExperimentConfig,
) -> list[RenderedQuery]:
    """
    Render every query under every query lighting.

    Returns
    -------
    list[tuple[str | None, :class:`QuerySpec`, :class:`RenderedImage`]]
        ``(lmst, placed query, image)`` grouped by lighting, queries in input order.
    """
    settings = RenderSettings(seed=config.seed + 1)
    rendered: list[RenderedQuery] = []
    for lmst, lighting in query_lightings(config.queries):
        sun = SunConfig(*lighting, diameter_deg=config.queries.sun_diameter_deg, samples=config.queries.shadow_samples)
        lit = [q.with_sun(sun) for q in queries]
        rendered.extend((lmst, q, image) for q, image in render_queries(accel, lit, settings))
    _log.info("rendered %d query images", len(rendered))
    return rendered


def save_rendered_queries(rendered: Sequence[RenderedQuery], out: Path) -> None:
    for _, query, image in rendered:
        folder = out / _QUERIES_DIR / _lighting_key(query.sun.angles)
        folder.mkdir(parents=True, exist_ok=True)
        save_rendered(image, folder / query.id)


def load_rendered_queries(out: Path, queries: Sequence[QuerySpec], config: ExperimentConfig) -> list[RenderedQuery]:
    """Read query renders written by :func:`save_rendered_queries`; ground-truth poses come from the sidecars."""

    rendered: list[RenderedQuery] = []
    for lmst, lighting in query_lightings(config.queries):
        for query in queries:
            image = load_rendered(out / _QUERIES_DIR / _lighting_key(lighting) / query.id)
            rendered.append((lmst, query.with_sun(image.sun).with_pose(image.pose), image))
    return rendered


# Localization


class _Attempt:
    __slots__ = ("index", "lmst", "map_image", "map_lighting", "query", "query_image")

    def __init__(
        self,
        index: int,
        lmst: str | None,
        query: QuerySpec,
        query_image: RenderedImage,
        map_lighting: Lighting,
        map_image: RenderedImage,
    ) -> None:
        self.index: int = index
        self.lmst: str | None = lmst
        self.query: QuerySpec = query
        self.query_image: RenderedImage = query_image
        self.map_lighting: Lighting = map_lighting
        self.map_image: RenderedImage = map_image


def _run_attempt(
    attempt: _Attempt,
    matcher: Matcher,
    config: ExperimentConfig,
) -> tuple[QueryResult, LocalizationDiagnostics]:
    query = attempt.query
    lc = config.localize
    altitude_bin = config.queries.bin_label(query.altitude_agl)
    common: dict[str, Any] = {
        "query_id": query.id,
        "altitude_m": query.altitude_agl,
        "altitude_bin": altitude_bin,
        "map_lighting": attempt.map_lighting,
        "query_lighting": query.sun.angles,
        "matcher": matcher.name,
    }
    window_scale = None
    if lc.use_altitude_prior:
        window_scale = scale_hint(query.altitude_agl, query.intrinsics, config.map.pixel_size_m)
    try:
        estimate = localize(
            attempt.query_image.gray,
            attempt.map_image,
            matcher,
            (query.x, query.y),
            intrinsics_matrix(query.intrinsics),
            side_m=lc.search_side_m,
            window=lc.window,
            overlap=lc.window_overlap,
            top_k=lc.top_k,
            conf_threshold=lc.conf_threshold,
            ransac=lc.ransac,
            seed=config.seed + attempt.index,
            window_scale=window_scale,
            query_id=query.id,
        )
    except MarslocError as exc:
        _log.error("query %s against map %s failed: %s", query.id, _lighting_key(attempt.map_lighting), exc)
        diag = LocalizationDiagnostics(query.id)
        diag.status = PoseStatus.ERROR
        return QueryResult(**common, status=PoseStatus.ERROR, error_m=math.inf, lmst=attempt.lmst), diag

    diag = estimate.diagnostics or LocalizationDiagnostics(query.id)
    if not config.record_timing:
        diag.timings_ms = dict.fromkeys(diag.timings_ms, 0.0)
    result = QueryResult(
        **common,
        status=estimate.status,
        error_m=localization_error(query.pose, estimate),  # type: ignore[arg-type]
        inliers=len(estimate.inliers),
        reproj_px=estimate.mean_reproj_px,
        ms_total=diag.timings_ms["total"],
        lmst=attempt.lmst,
    )
    _log.info(
        "query %s map %s: %s, error %.3f m",
        query.id,
        _lighting_key(attempt.map_lighting),
        result.status.value,
        result.error_m,
    )
    return result, diag


async def _gather_attempts(
    attempts: Sequence[_Attempt],
    matcher: Matcher,
    config: ExperimentConfig,
) -> list[tuple[QueryResult, LocalizationDiagnostics]]:
    semaphore = asyncio.Semaphore(config.threads)

    async def bounded(attempt: _Attempt) -> tuple[QueryResult, LocalizationDiagnostics]:
        async with semaphore:
            return await asyncio.to_thread(_run_attempt, attempt, matcher, config)

    return await asyncio.gather(*(bounded(a) for a in attempts))


def localize_queries(
    rendered: Sequence[RenderedQuery],
    maps: dict[Lighting, RenderedImage],
    config: ExperimentConfig,
) -> tuple[list[QueryResult], list[LocalizationDiagnostics]]:
    """
    Localize every rendered query against every map.

    Attempts run concurrently on up to ``config.threads`` workers; results come
    back in sweep order (map lighting, then query lighting, then query), whatever
    the completion order. Errors raised for one attempt become ``error`` rows.

    Returns
    -------
    tuple[list[:class:`QueryResult`], list[:class:`LocalizationDiagnostics`]]
        One result and one diagnostics record per attempt.
    """
    if not maps:
        raise MissingMapError("no maps to localize against")
    matcher = get_matcher(config.localize.matcher)
    attempts = [
        _Attempt(i, lmst, query, image, lighting, map_image)
        for i, ((lighting, map_image), (lmst, query, image)) in enumerate(itertools.product(maps.items(), rendered))
    ]
    _log.info("localizing %d attempts with %r on %d workers", len(attempts), matcher, config.threads)
    pairs = asyncio.run(_gather_attempts(attempts, matcher, config))
    return [r for r, _ in pairs], [d for _, d in pairs]


# Aggregation


def _cell(
    results: Sequence[QueryResult],
    map_lighting: Lighting,
    query_lighting: Lighting,
    altitude_bin: str,
) -> CellSummary:
    errors = [r.error_m for r in results]
    fail_n = sum(1 for r in results if r.status.failed)
    if fail_n:
        _log.warning(
            "cell %s bin %s: %d of %d attempts failed",
            _lighting_label(map_lighting, query_lighting),
            altitude_bin,
            fail_n,
            len(results),
        )
    return CellSummary(
        map_lighting,
        query_lighting,
        altitude_bin,
        len(results),
        accuracy_at(errors, 1.0),
        median_error(errors),
        fail_n,
    )


def summarize(results: Sequence[QueryResult], config: QueryConfig) -> MetricsReport:
    """
    Aggregate attempts per (map lighting, query lighting, altitude bin).

    Every lighting pair gets one cell per non-empty altitude bin followed by the
    pooled ``"all"`` cell. Failures stay in every denominator as infinite errors.
    """
    pairs: dict[tuple[Lighting, Lighting], list[QueryResult]] = {}
    for r in results:
        pairs.setdefault((r.map_lighting, r.query_lighting), []).append(r)

    bins = [f"{lo:g}-{hi:g}" for lo, hi in config.altitude_bins_m]
    cells: list[CellSummary] = []
    curves: dict[tuple[Lighting, Lighting], np.ndarray] = {}
    grid = np.zeros(0)
    for (map_lighting, query_lighting), rows in pairs.items():
        for label in bins:
            in_bin = [r for r in rows if r.altitude_bin == label]
            if in_bin:
                cells.append(_cell(in_bin, map_lighting, query_lighting, label))
        cells.append(_cell(rows, map_lighting, query_lighting, "all"))
        grid, curves[(map_lighting, query_lighting)] = cdf([r.error_m for r in rows])
    if not pairs:
        grid, _ = cdf([])

    failures = {status: 0 for status in PoseStatus if status.failed}
    for r in results:
        if r.status.failed:
            failures[r.status] += 1
    return MetricsReport(list(results), cells, grid, curves, failures)


def read_results(path: Path, config: QueryConfig) -> list[QueryResult]:
    """Rebuild attempts from a per-query CSV; altitude bins are re-derived from `config`."""

    results = []
    for row in read_csv(path):
        altitude = float(row["alt_m"])
        results.append(
            QueryResult(
                row["query_id"],
                altitude,
                config.bin_label(altitude),
                (float(row["map_az_deg"]), float(row["map_el_deg"])),
                (float(row["query_az_deg"]), float(row["query_el_deg"])),
                row["matcher"],
                PoseStatus(row["status"]),
                float(row["err_m"]),
                inliers=int(row["inliers"]),
                reproj_px=float(row["reproj_px"]) if row["reproj_px"] else None,
                ms_total=float(row["ms_total"]),
            )
        )
    return results


# Reports


def write_cdf_table(report: MetricsReport, path: Path) -> None:
    """Plain-text table: one row per error grid point, one column per lighting pair."""

    labels = [_lighting_label(m, q) for m, q in report.cdf]
    lines = ["\t".join(["err_m", *labels])]
    curves = list(report.cdf.values())
    for i, x in enumerate(report.cdf_grid):
        lines.append("\t".join([f"{x:.1f}", *(f"{curve[i]:.4f}" for curve in curves)]))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_results(results: Sequence[QueryResult], diagnostics: Sequence[LocalizationDiagnostics], out: Path) -> Path:
    """Write the per-query CSV and the diagnostics JSON Lines file."""

    path = out / _RESULTS_CSV
    CSVExporter(QUERY_COLUMNS).export(path, results)
    with JSONExporter(indent=None).lines(out / _DIAGNOSTICS) as writer:
        for result, diag in zip(results, diagnostics, strict=True):
            payload: dict[str, Any] = {
                "map_az_deg": result.map_lighting[0],
                "map_el_deg": result.map_lighting[1],
                "query_az_deg": result.query_lighting[0],
                "query_el_deg": result.query_lighting[1],
            }
            payload.update(diag.to_payload())
            writer.write(payload)
    return path


def write_reports(report: MetricsReport, out: Path, *, title: str | None = None) -> list[Path]:
    """
    Write the summary CSV, the CDF table and the summary workbook.

    Returns
    -------
    list[Path]
        Written files.
    """
    summary = out / _SUMMARY_CSV
    table = out / _CDF_TABLE
    workbook = out / _WORKBOOK
    CSVExporter(SUMMARY_COLUMNS).export(summary, report.cells)
    write_cdf_table(report, table)
    ExcelExporter().export(
        workbook,
        [
            Sheet("summary", title, SUMMARY_COLUMNS, report.cells),
            Sheet("queries", None, _WORKBOOK_QUERY_COLUMNS, report.results),
            Sheet(
                "failures",
                None,
                (AttrField("status").transform(lambda kv: kv[0]), AttrField("count").transform(lambda kv: kv[1])),
                list(report.failures.items()),
            ),
        ],
    )
    _log.info("reports written to %s", out)
    return [summary, table, workbook]


def run_experiment(config: ExperimentConfig) -> MetricsReport:
    """
    Run a full sweep and write its artifacts.

    Builds (or loads) the terrain, renders one map per map lighting, samples
    and renders the queries under every query lighting, localizes every query
    against every map and aggregates the attempts. The output directory gets
    ``results.csv``, ``diagnostics.jsonl``, ``summary.csv``, ``cdf.txt`` and
    ``summary.xlsx``. Equal configurations give equal CSV files at any thread
    count unless timings are recorded.

    Parameters
    ----------
    config: :class:`ExperimentConfig`
        Experiment settings.

    Returns
    -------
    :class:`MetricsReport`
        Aggregated results.
    """
    _log.info("experiment %r", config)
    terrain = obtain_terrain(config)
    accel = build_accel(terrain)
    _log.info("terrain ready: %r", terrain)

    maps = render_maps(accel, config)
    queries = sample_queries(
        terrain,
        config.queries.count,
        config.queries.altitude_range_m,
        config.seed,
        intrinsics=config.queries.intrinsics(),
    )
    rendered = render_query_set(accel, queries, config)

    results, diagnostics = localize_queries(rendered, maps, config)
    config.out.mkdir(parents=True, exist_ok=True)
    write_results(results, diagnostics, config.out)
    report = summarize(results, config.queries)
    write_reports(report, config.out, title=f"marsloc sweep, seed {config.seed}, matcher {config.localize.matcher}")
    return report
