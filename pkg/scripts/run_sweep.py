"""Example script: a small lighting sweep with the summary printed per lighting pair."""

import logging
from pathlib import Path

from marsloc import (
    ExperimentConfig,
    LocalizeConfig,
    MapConfig,
    QueryConfig,
    TerrainSource,
    run_experiment,
)


def main() -> None:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")

    # Parameters
    config = ExperimentConfig(
        seed=1,
        threads=4,
        out=Path("sweep_out"),
        terrain=TerrainSource(size_m=400.0, crater_count=10, crater_radius_m=(8.0, 30.0)),
        map=MapConfig(lightings=[(180.0, 40.0), (90.0, 30.0), (270.0, 60.0)], pixel_size_m=0.5, altitude_m=1000.0),
        queries=QueryConfig(
            count=10,
            altitude_range_m=(40.0, 80.0),
            altitude_bins_m=((40.0, 60.0), (60.0, 80.0)),
            width=160,
            height=120,
        ),
        localize=LocalizeConfig(search_side_m=150.0, window=(256, 192), conf_threshold=0.8, use_altitude_prior=True),
    )

    print(f"Running sweep {config!r}...")
    report = run_experiment(config)
    print(f"✓ {len(report.results)} localization attempts")

    for cell in report.cells:
        if cell.altitude_bin != "all":
            continue
        print(
            f"  map {cell.map_lighting} / query {cell.query_lighting}: "
            f"@1m {cell.at1m:.2f}, median {cell.median_m:.2f} m, {cell.fail_n} failures"
        )

    print(f"✓ Reports written to {config.out.absolute()}")


if __name__ == "__main__":
    main()
