"""Example script: render maps and queries and write a triplet dataset for matcher training."""

from pathlib import Path

from marsloc import (
    RenderSettings,
    SunConfig,
    build_accel,
    default_map_camera,
    generate_synthetic_terrain,
    lighting_grid,
    make_dataset,
    render_ortho,
    render_queries,
    sample_queries,
)
from marsloc.utils import read_json_lines


def main() -> None:
    # Parameters
    seed = 5
    out = Path("dataset_out")

    terrain = generate_synthetic_terrain(seed, 300.0, 1.0, crater_count=8, crater_radius_m=(8.0, 30.0))
    accel = build_accel(terrain)

    lightings = lighting_grid((0.0, 90.0, 180.0, 270.0), (30.0,))
    print(f"Rendering {len(lightings)} maps...")
    oi, pose = default_map_camera(terrain, pixel_size=0.5, altitude=1000.0)
    settings = RenderSettings(seed=seed)
    maps = {lighting: render_ortho(accel, oi, pose, SunConfig(*lighting), settings) for lighting in lightings}

    print("Sampling and rendering queries...")
    queries = sample_queries(terrain, 20, (64.0, 90.0), seed)
    rendered = render_queries(accel, queries, RenderSettings(seed=seed + 1))

    manifest = make_dataset(out, rendered, maps, window=(256, 192), threads=4)
    print(f"✓ {len(read_json_lines(manifest))} triplets written to {manifest.absolute()}")


if __name__ == "__main__":
    main()
