import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from texscene.generator import (
    BandGeometry,
    GenConfig,
    SamplingExhaustedError,
    SeededStream,
    SeedToken,
    SequenceState,
    TextureSegment,
    check_state,
    draw_texture_params,
    generate_bands,
    generative_subdomains,
    init_sequence,
    inset_rect,
    run_sequence,
    step,
)
from texscene.geometry import ConvexPolygon2, EdgeRoles, Point2, VoronoiDiagram

SMALL = GenConfig(picture_width=200, picture_height=150)


def unit_square_roles():
    return EdgeRoles(longest=0, opposite=2, rail_a=1, rail_b=3, chain_a=(), chain_b=())


class TestInitSequence:
    def test_eight_outer_sites_in_their_subdomains(self):
        state = init_sequence(SMALL, seed=42)
        assert len(state.outer_sites) == 8
        domains = generative_subdomains(SMALL)
        for site, (x0, y0, x1, y1) in zip(state.outer_sites, domains):
            assert x0 <= site.x <= x1 and y0 <= site.y <= y1
            inside_pp = 0 <= site.x <= 200 and 0 <= site.y <= 150
            assert not inside_pp

    def test_bit_identical_for_same_seed(self):
        assert init_sequence(SMALL, 7) == init_sequence(SMALL, 7)

    def test_adjacent_seeds_differ(self):
        a = init_sequence(SMALL, 7)
        b = init_sequence(SMALL, 8)
        assert a.outer_sites != b.outer_sites


class TestStep:
    def test_four_steps_give_four_segments(self):
        state = run_sequence(SMALL, seed=13, iterations=4)
        assert state.token.iteration == 4
        assert len(state.segments) == 4
        assert len(state.interior_sites) == 4

    def test_pure(self):
        state = run_sequence(SMALL, seed=5, iterations=2)
        assert step(state) == step(state)

    def test_creation_fields_persist_only_clip_updates(self):
        state = run_sequence(SMALL, seed=99, iterations=4)
        created = state.segments[3]
        assert created.created_at == 4
        clip_changed = False
        for _ in range(5):
            state = step(state)
            seg = state.segments[3]
            assert seg.band_lines == created.band_lines
            assert seg.roles == created.roles
            assert seg.creation_polygon == created.creation_polygon
            assert (seg.frequency, seg.order) == (created.frequency, created.order)
            if seg.clip_polygon != created.clip_polygon:
                clip_changed = True
        assert state.token.iteration == 9
        assert len(state.segments) == 9
        assert clip_changed

    def test_sampling_exhausted_when_domain_too_crowded(self):
        config = GenConfig(
            picture_width=100, picture_height=100, min_site_offset=80.0
        )
        state = run_sequence(config, seed=3, iterations=1)
        with pytest.raises(SamplingExhaustedError):
            step(state)

    @given(st.integers(min_value=0, max_value=2**64 - 1))
    @settings(max_examples=10, deadline=None)
    def test_state_invariants_hold(self, seed):
        state = run_sequence(SMALL, seed, 5)
        check_state(state)


class TestGenerateBands:
    def test_unit_square_f1_halves(self):
        sq = ConvexPolygon2((Point2(0, 0), Point2(1, 0), Point2(1, 1), Point2(0, 1)))
        bands = generate_bands(sq, unit_square_roles(), frequency=1, order=0)
        assert len(bands.band_lines) == 1
        # Division at mid-height; the two bands halve the square.
        line = bands.band_lines[0]
        assert (line.a, line.b, line.c) == pytest.approx((0, 1, -0.5))
        areas = []
        for k in range(2):
            quad = [bands.rail_a[k], bands.rail_a[k + 1], bands.rail_b[k + 1], bands.rail_b[k]]
            s = 0.0
            for i in range(4):
                p, q = quad[i], quad[(i + 1) % 4]
                s += p.x * q.y - q.x * p.y
            areas.append(abs(s) / 2)
        assert areas == pytest.approx([0.5, 0.5])

    def test_unit_square_f5_ten_bands_first_black(self):
        sq = ConvexPolygon2((Point2(0, 0), Point2(1, 0), Point2(1, 1), Point2(0, 1)))
        bands = generate_bands(sq, unit_square_roles(), frequency=5, order=0)
        assert len(bands.band_lines) == 9
        assert len(bands.luminances) == 10
        assert bands.luminances[0] == 0
        assert bands.luminances[1] == 255
        for k, line in enumerate(bands.band_lines, start=1):
            assert (line.a, line.b) == pytest.approx((0.0, 1.0))
            assert -line.c == pytest.approx(0.1 * k)

    def test_order_bit_flips_first_band(self):
        sq = ConvexPolygon2((Point2(0, 0), Point2(1, 0), Point2(1, 1), Point2(0, 1)))
        bands = generate_bands(sq, unit_square_roles(), frequency=1, order=1)
        assert bands.luminances == (255, 0)

    def test_trapezoid_linearly_varying_widths(self):
        # Dividing edges of length 4 (left) and 2 (right); equal division
        # makes band widths 1.0 on one rail and 0.5 on the other.
        trap = ConvexPolygon2(
            (Point2(0, 0), Point2(3, 1), Point2(3, 3), Point2(0, 4))
        )
        roles = EdgeRoles(longest=0, opposite=2, rail_a=3, rail_b=1, chain_a=(), chain_b=())
        bands = generate_bands(trap, roles, frequency=2, order=0)
        assert len(bands.band_lines) == 3
        assert [p.y for p in bands.rail_a] == pytest.approx([0, 1, 2, 3, 4])
        assert [p.y for p in bands.rail_b] == pytest.approx([1, 1.5, 2, 2.5, 3])
        for k, line in enumerate(bands.band_lines, start=1):
            assert abs(line.eval(Point2(0, k))) < 1e-12
            assert abs(line.eval(Point2(3, 1 + 0.5 * k))) < 1e-12


class TestDrawTextureParams:
    def test_same_stream_position_reproduces(self):
        a = draw_texture_params(SeededStream(11, 3))
        b = draw_texture_params(SeededStream(11, 3))
        assert a == b

    def test_distributions(self):
        stream = SeededStream(20260808, 1)
        fs = []
        orders = []
        for _ in range(10_000):
            f, order = draw_texture_params(stream)
            fs.append(f)
            orders.append(order)
        for value in range(1, 11):
            frequency = fs.count(value) / len(fs)
            assert abs(frequency - 0.1) < 0.01
        assert abs(sum(orders) / len(orders) - 0.5) < 0.02


class TestTokens:
    def test_seed_range_validated(self):
        with pytest.raises(Exception):
            SeedToken(-1, 0)
        with pytest.raises(Exception):
            SeedToken(2**64, 0)

    def test_inset_rect(self):
        x0, y0, x1, y1 = inset_rect(SMALL)
        assert (x0, y0, x1, y1) == (15.0, 15.0, 185.0, 135.0)
