import numpy as np

from texscene.generator import (
    GenConfig,
    SeedToken,
    SequenceState,
    TextureSegment,
    generate_bands,
    init_sequence,
    run_sequence,
)
from texscene.geometry import ConvexPolygon2, EdgeRoles, Point2, VoronoiDiagram
from texscene.raster import rasterize, read_pgm, write_pgm


def full_domain_state(order=0):
    """One hand-built segment covering the whole 64x64 picture."""
    config = GenConfig(picture_width=64, picture_height=64, background_luminance=128)
    cell = ConvexPolygon2(
        (Point2(0, 0), Point2(64, 0), Point2(64, 64), Point2(0, 64))
    )
    roles = EdgeRoles(longest=0, opposite=2, rail_a=1, rail_b=3, chain_a=(), chain_b=())
    bands = generate_bands(cell, roles, frequency=1, order=order)
    site = Point2(32.0, 32.0)
    outer = tuple(Point2(32 + 200 * np.cos(k * np.pi / 4), 32 + 200 * np.sin(k * np.pi / 4)) for k in range(8))
    segment = TextureSegment(
        id=0,
        created_at=1,
        creation_polygon=cell,
        roles=roles,
        frequency=1,
        order=order,
        band_lines=bands.band_lines,
        clip_polygon=cell,
    )
    return SequenceState(
        config=config,
        token=SeedToken(1, 1),
        outer_sites=outer,
        interior_sites=(site,),
        diagram=VoronoiDiagram((site,) + outer, (cell,)),
        segments=(segment,),
    )


def test_iteration_zero_is_uniform_background():
    config = GenConfig(picture_width=40, picture_height=30, background_luminance=200)
    image = rasterize(init_sequence(config, 77))
    arr = image.as_array()
    assert (arr == 200).all()


def test_full_domain_cell_f1_halves():
    image = rasterize(full_domain_state(order=0)).as_array()
    # Band 0 sits on the L0 (y = 0) side and is black for order 0.
    assert (image[:32, :] == 0).all()
    assert (image[32:, :] == 255).all()


def test_order_flips_halves():
    image = rasterize(full_domain_state(order=1)).as_array()
    assert (image[:32, :] == 255).all()
    assert (image[32:, :] == 0).all()


def test_band_pixels_binary_and_deterministic():
    config = GenConfig(picture_width=160, picture_height=120, background_luminance=17)
    state = run_sequence(config, seed=404, iterations=5)
    a = rasterize(state)
    b = rasterize(state)
    assert a.luminance == b.luminance
    arr = a.as_array()
    covered = arr != 17
    assert covered.any()
    assert set(np.unique(arr[covered])) <= {0, 255}


def test_pgm_round_trip(tmp_path):
    image = rasterize(full_domain_state())
    path = tmp_path / "img.pgm"
    write_pgm(image, path)
    back = read_pgm(path)
    assert back == image
