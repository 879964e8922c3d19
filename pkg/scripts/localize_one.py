"""Example script: render one map and one query over synthetic terrain, then localize the query."""

from pathlib import Path

from marsloc import (
    NCCMatcher,
    PerspectiveIntrinsics,
    RenderSettings,
    SunConfig,
    build_accel,
    default_map_camera,
    generate_synthetic_terrain,
    intrinsics_matrix,
    localization_error,
    localize,
    place_camera,
    render_ortho,
    render_perspective,
    scale_hint,
)
from marsloc.utils import to_json


def main() -> None:
    # Parameters
    seed = 11
    map_sun = SunConfig(180.0, 40.0)
    query_sun = SunConfig(135.0, 30.0)
    optics = PerspectiveIntrinsics(32.0, 80.0, 160, 120)
    x, y, altitude = 12.0, -20.0, 40.0

    print("Generating a 256 m terrain...")
    terrain = generate_synthetic_terrain(seed, 256.0, 1.0, crater_count=6, crater_radius_m=(8.0, 25.0))
    accel = build_accel(terrain)

    print("Rendering the orthographic map...")
    oi, map_pose = default_map_camera(terrain, pixel_size=0.5, altitude=1000.0)
    map_image = render_ortho(accel, oi, map_pose, map_sun, RenderSettings(seed=seed))
    print(f"✓ Map of {map_image.width}x{map_image.height} px")

    print(f"Rendering a query at ({x:g}, {y:g}), {altitude:g} m above ground...")
    pose = place_camera(accel, x, y, altitude)
    query = render_perspective(accel, optics, pose, query_sun, RenderSettings(seed=seed + 1))

    estimate = localize(
        query.gray,
        map_image,
        NCCMatcher(),
        (x, y),
        intrinsics_matrix(optics),
        side_m=120.0,
        window=(192, 192),
        conf_threshold=0.8,
        window_scale=scale_hint(altitude, optics, oi.pixel_size),
        query_id="example",
    )

    if not estimate.ok:
        print(f"Localization failed: {estimate.status.value}")
    else:
        print(f"✓ Localized with {len(estimate.inliers)} inliers, error {localization_error(pose, estimate):.3f} m")

    output_file = Path("localize_one_diagnostics.json")
    to_json(path=output_file, obj=estimate.diagnostics.to_payload())  # pyright: ignore[reportOptionalMemberAccess]
    print(f"✓ Diagnostics written to {output_file.absolute()}")


if __name__ == "__main__":
    main()
