from __future__ import annotations

import json
import math
from pathlib import Path

import numba
import numpy as np
import pytest

from marsloc.cli import build_parser, main
from marsloc.enums import CameraKind, PoseStatus
from marsloc.errors import InvalidParameterError
from marsloc.geometry import nadir_pose
from marsloc.harness import (
    localize_queries,
    map_lightings,
    query_lightings,
    read_results,
    run_experiment,
    summarize,
    write_reports,
    write_results,
)
from marsloc.models.camera import OrthoIntrinsics, PerspectiveIntrinsics
from marsloc.models.dataset import QuerySpec
from marsloc.models.experiment import (
    ExperimentConfig,
    LocalizeConfig,
    MapConfig,
    QueryConfig,
    QueryResult,
    TerrainSource,
)
from marsloc.models.image import RenderedImage
from marsloc.models.localization import LocalizationDiagnostics
from marsloc.models.sun import SunConfig
from marsloc.utils.csv_exporter import read_csv

LIGHT = (180.0, 40.0)
BINS = ((64.0, 112.0), (112.0, 155.0), (155.0, 200.0))


def _result(query_id: str, altitude: float, error: float, status: PoseStatus = PoseStatus.OK) -> QueryResult:
    config = QueryConfig()
    return QueryResult(
        query_id,
        altitude,
        config.bin_label(altitude),
        LIGHT,
        LIGHT,
        "ncc",
        status,
        error,
        inliers=0 if status.failed else 40,
        reproj_px=None if status.failed else 0.8,
    )


@pytest.fixture
def sweep_results() -> list[QueryResult]:
    return [
        _result("q00000", 80.0, 0.5),
        _result("q00001", 100.0, 2.0),
        _result("q00002", 150.0, math.inf, PoseStatus.DEGENERATE),
    ]


def _tiny_config(out: Path, *, threads: int = 1) -> ExperimentConfig:
    return ExperimentConfig(
        seed=3,
        threads=threads,
        out=out,
        terrain=TerrainSource(size_m=128.0, crater_count=2, crater_radius_m=(5.0, 10.0), amplitude_m=2.0),
        map=MapConfig(lightings=[LIGHT], altitude_m=1000.0, pixel_size_m=0.5, shadow_samples=1),
        queries=QueryConfig(
            count=2,
            altitude_range_m=(10.0, 14.0),
            altitude_bins_m=((10.0, 12.0), (12.0, 14.0)),
            width=64,
            height=48,
            shadow_samples=1,
        ),
        localize=LocalizeConfig(search_side_m=40.0, window=(96, 96), conf_threshold=0.8),
    )


class TestConfiguration:
    @pytest.mark.parametrize(
        ("altitude", "label"),
        [(64.0, "64-112"), (111.9, "64-112"), (112.0, "112-155"), (200.0, "155-200"), (201.0, "out-of-range")],
    )
    def test_bin_label(self, altitude, label):
        assert QueryConfig().bin_label(altitude) == label

    @pytest.mark.parametrize(
        "bins",
        [((64.0, 100.0), (110.0, 200.0)), ((50.0, 200.0),), ((64.0, 250.0),), ()],
    )
    def test_rejects_bad_bins(self, bins):
        with pytest.raises(InvalidParameterError):
            QueryConfig(altitude_bins_m=bins)

    def test_rejects_bad_values(self):
        with pytest.raises(InvalidParameterError):
            QueryConfig(count=0)
        with pytest.raises(InvalidParameterError):
            ExperimentConfig(threads=0)
        with pytest.raises(InvalidParameterError):
            TerrainSource("file")

    def test_payload_round_trip(self, tmp_path):
        config = _tiny_config(tmp_path)
        again = ExperimentConfig.from_payload(config.to_payload())
        assert again.to_payload() == config.to_payload()

    def test_load_fills_defaults(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"seed": 9, "queries": {"count": 4}}), encoding="utf-8")
        config = ExperimentConfig.load(path)
        assert config.seed == 9
        assert config.queries.count == 4
        assert config.queries.altitude_bins_m == BINS
        assert config.localize.matcher == "ncc"
        assert config.map.lightings is None

    def test_load_rejects_non_objects(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("[1, 2]", encoding="utf-8")
        with pytest.raises(InvalidParameterError):
            ExperimentConfig.load(path)

    def test_overrides(self, tmp_path):
        config = ExperimentConfig().with_overrides(seed=5, threads=4, out=tmp_path)
        assert (config.seed, config.threads, config.out) == (5, 4, tmp_path)
        assert config.terrain_seed == 5

    def test_lighting_sets(self, tmp_path):
        assert len(map_lightings(ExperimentConfig())) == 17
        assert map_lightings(_tiny_config(tmp_path)) == [LIGHT]
        assert query_lightings(QueryConfig()) == [(None, (180.0, 40.0))]
        table = tmp_path / "lighting.csv"
        table.write_text("lmst,az_deg,el_deg\n10:00,120,25\n", encoding="utf-8")
        assert query_lightings(QueryConfig(lighting_table=table)) == [("10:00", (120.0, 25.0))]
        assert map_lightings(ExperimentConfig(queries=QueryConfig(lighting_table=table))) == [(175.1, 39.9)]


class TestResults:
    def test_delta_angles_wrap(self):
        result = _result("q", 80.0, 1.0)
        result.map_lighting, result.query_lighting = (10.0, 30.0), (350.0, 40.0)
        assert (result.delta_az, result.delta_el) == (20.0, -10.0)
        result.map_lighting, result.query_lighting = (0.0, 30.0), (180.0, 30.0)
        assert result.delta_az == 180.0

    def test_summarize(self, sweep_results):
        report = summarize(sweep_results, QueryConfig())
        assert [c.altitude_bin for c in report.cells] == ["64-112", "112-155", "all"]

        low = report.cell(LIGHT, LIGHT, "64-112")
        assert (low.n, low.at1m, low.median_m, low.fail_n) == (2, 0.5, 1.25, 0)
        mid = report.cell(LIGHT, LIGHT, "112-155")
        assert (mid.n, mid.at1m, mid.median_m, mid.fail_n) == (1, 0.0, math.inf, 1)
        pooled = report.cell(LIGHT, LIGHT)
        assert pooled.n == 3
        assert pooled.at1m == pytest.approx(1 / 3)
        assert pooled.median_m == 2.0

        assert report.failures == {PoseStatus.DEGENERATE: 1, PoseStatus.INSUFFICIENT_MATCHES: 0, PoseStatus.ERROR: 0}
        curve = report.cdf[(LIGHT, LIGHT)]
        assert curve[5] == pytest.approx(1 / 3)
        assert curve[-1] == pytest.approx(2 / 3)
        assert report.finite_mean_m == pytest.approx(1.25)

    def test_results_survive_the_csv(self, sweep_results, tmp_path):
        diagnostics = [LocalizationDiagnostics(r.query_id) for r in sweep_results]
        path = write_results(sweep_results, diagnostics, tmp_path)
        rows = read_csv(path)
        assert rows[2]["err_m"] == "inf"
        assert rows[2]["reproj_px"] == ""
        assert rows[0]["status"] == "ok"

        again = read_results(path, QueryConfig())
        assert [r.altitude_bin for r in again] == [r.altitude_bin for r in sweep_results]
        first = summarize(sweep_results, QueryConfig())
        second = summarize(again, QueryConfig())
        assert [(c.altitude_bin, c.n, c.at1m, c.median_m, c.fail_n) for c in first.cells] == [
            (c.altitude_bin, c.n, c.at1m, c.median_m, c.fail_n) for c in second.cells
        ]
        assert (tmp_path / "diagnostics.jsonl").exists()

    def test_reports(self, sweep_results, tmp_path):
        summary, table, workbook = write_reports(summarize(sweep_results, QueryConfig()), tmp_path, title="sweep")
        rows = read_csv(summary)
        assert [r["alt_bin"] for r in rows] == ["64-112", "112-155", "all"]
        assert rows[-1]["fail_n"] == "1"
        lines = table.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "err_m\tmap180/40_query180/40"
        assert len(lines) == 102
        assert lines[-1] == "10.0\t0.6667"
        assert workbook.stat().st_size > 0


class TestLocalizeQueries:
    def test_errors_become_rows(self, tmp_path):
        optics = PerspectiveIntrinsics(32.0, 80.0, 64, 48)
        map_image = RenderedImage(
            np.zeros((40, 40), dtype=np.uint8),
            np.full((40, 40), 1000.0, dtype=np.float32),
            CameraKind.ORTHO,
            OrthoIntrinsics.from_pixel_size(0.5, 40, 40),
            nadir_pose(0.0, 0.0, 1000.0),
            SunConfig(*LIGHT),
        )
        query = QuerySpec("q00000", 500.0, 500.0, 80.0, SunConfig(*LIGHT), optics).with_pose(nadir_pose(500.0, 500.0, 80.0))
        image = RenderedImage(
            np.zeros((48, 64), dtype=np.uint8),
            np.full((48, 64), 80.0, dtype=np.float32),
            CameraKind.PERSPECTIVE,
            optics,
            query.pose,
            query.sun,
        )
        results, diagnostics = localize_queries([(None, query, image)], {LIGHT: map_image}, ExperimentConfig(out=tmp_path))
        assert [r.status for r in results] == [PoseStatus.ERROR]
        assert results[0].error_m == math.inf
        assert diagnostics[0].status is PoseStatus.ERROR


class TestExperiment:
    def test_rerun_is_byte_identical(self, tmp_path):
        report = run_experiment(_tiny_config(tmp_path / "a"))
        run_experiment(_tiny_config(tmp_path / "b", threads=2))
        assert len(report.results) == 2
        for name in ("results.csv", "summary.csv", "cdf.txt", "diagnostics.jsonl"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name
        assert {r["ms_total"] for r in read_csv(tmp_path / "a" / "results.csv")} == {"0.000000"}


class TestCommandLine:
    def test_parser(self):
        args = build_parser().parse_args(["--seed", "3", "localize", "--lighting", "180", "40", "--lighting", "-90", "30"])
        assert args.seed == 3
        assert args.command == "localize"
        assert args.lighting == [[180.0, 40.0], [-90.0, 30.0]]

    def test_command_is_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_library_errors_exit_with_one(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("[]", encoding="utf-8")
        assert main(["--config", str(path), "gen-terrain"]) == 1

    def test_gen_terrain(self, tmp_path):
        path = tmp_path / "config.json"
        config = {"terrain": {"size_m": 32.0, "crater_count": 1, "crater_radius_m": [2, 4]}}
        path.write_text(json.dumps(config), encoding="utf-8")
        assert main(["--config", str(path), "--out", str(tmp_path / "out"), "gen-terrain"]) == 0
        assert (tmp_path / "out" / "terrain" / "dtm.raw").exists()
        assert (tmp_path / "out" / "terrain" / "texture.pgm").exists()

    def test_run_is_identical_at_any_thread_count(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps(_tiny_config(tmp_path / "unused").to_payload()), encoding="utf-8")
        before = numba.get_num_threads()
        try:
            for threads in ("1", "2"):
                assert main(["--config", str(path), "--threads", threads, "--out", str(tmp_path / threads), "run"]) == 0
        finally:
            numba.set_num_threads(before)
        for name in ("results.csv", "summary.csv", "cdf.txt", "diagnostics.jsonl"):
            assert (tmp_path / "1" / name).read_bytes() == (tmp_path / "2" / name).read_bytes(), name


def _acceptance_config(out: Path, map_lightings: list[tuple[float, float]], count: int) -> ExperimentConfig:
    """
    Desk-scale sweep over a 256 m terrain drawn from seed 42.

    Queries fly 20 to 30 m above ground at 160 x 120 pixels, so each covers
    50 to 75 m and lands in the single 480 x 480 pixel window of a 120 m
    search area on the 0.25 m map.
    """
    return ExperimentConfig(
        seed=42,
        threads=2,
        out=out,
        terrain=TerrainSource(size_m=256.0, crater_count=4, crater_radius_m=(8.0, 20.0), amplitude_m=3.0),
        map=MapConfig(lightings=map_lightings, altitude_m=1000.0, pixel_size_m=0.25, shadow_samples=1),
        queries=QueryConfig(
            count=count,
            altitude_range_m=(20.0, 30.0),
            altitude_bins_m=((20.0, 25.0), (25.0, 30.0)),
            width=160,
            height=120,
            shadow_samples=1,
        ),
        localize=LocalizeConfig(search_side_m=120.0, window=(512, 512), conf_threshold=0.8, use_altitude_prior=True),
    )


@pytest.mark.slow
class TestAcceptance:
    def test_same_lighting_localizes_within_a_meter(self, tmp_path):
        # 20 queries: at least 90 % within 1 m and a median error under 0.5 m
        report = run_experiment(_acceptance_config(tmp_path, [LIGHT], 20))
        cell = report.cell(LIGHT, LIGHT)
        assert cell.n == 20
        assert cell.at1m >= 0.9
        assert cell.median_m < 0.5

    def test_low_sun_map_is_no_better(self, tmp_path):
        elevations = (2.0, 5.0, 10.0, 40.0, 60.0, 90.0)
        report = run_experiment(_acceptance_config(tmp_path, [(180.0, el) for el in elevations], 10))
        assert report.cell((180.0, 2.0), LIGHT).at1m <= report.cell(LIGHT, LIGHT).at1m
