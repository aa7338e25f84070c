import math

import numpy as np
import pytest

from gelpress import mechanics as M
from gelpress import render as R
from gelpress.errors import DomainError

SPEC = M.GelSpec()
GEL = M.shore00_to_modulus(17.0)


def flat_map():
    ny, nx = SPEC.image_resolution_px[1], SPEC.image_resolution_px[0]
    return M.HeightMap(np.zeros((ny, nx)), SPEC.pixel_pitch_mm)


class TestNormals:
    def test_flat_surface(self):
        normals = R.normals_from_height(flat_map())
        assert np.allclose(normals, [0.0, 0.0, 1.0])

    def test_planar_ramp(self):
        slope = 0.3
        pitch = SPEC.pixel_pitch_mm
        xs = np.arange(24) * pitch
        grid = np.tile(slope * xs, (18, 1))
        normals = R.normals_from_height(M.HeightMap(grid, pitch))
        expected = np.array([-slope, 0.0, 1.0])
        expected /= np.linalg.norm(expected)
        interior = normals[1:-1, 1:-1]
        assert np.allclose(interior, expected, atol=1e-9)

    def test_hemisphere_cap_matches_analytic(self):
        # spherical cap z = sqrt(R^2 - r^2) - (R - d); analytic unit normal at
        # (x, y) is (x, y, sqrt(R^2-x^2-y^2)) / R for the full sphere; our map
        # stores depth positive into the gel, so the rendered surface is -z
        # and normals flip in x, y
        radius, depth = 6.0, 1.2
        pitch = SPEC.pixel_pitch_mm
        ny, nx = 60, 80
        xs = (np.arange(nx) + 0.5) * pitch - nx * pitch / 2
        ys = (np.arange(ny) + 0.5) * pitch - ny * pitch / 2
        xg, yg = np.meshgrid(xs, ys)
        r2 = xg**2 + yg**2
        cap = np.sqrt(np.clip(radius**2 - r2, 0.0, None)) - (radius - depth)
        grid = np.clip(cap, 0.0, None)
        normals = R.normals_from_height(M.HeightMap(grid, pitch))
        inside = grid > 0.05 * depth
        # stay away from the rim where the profile is clipped
        rim = math.sqrt(max(radius**2 - (radius - depth) ** 2, 0.0))
        core = inside & (np.sqrt(r2) < 0.75 * rim)
        analytic = np.stack([xg, yg, np.sqrt(np.clip(radius**2 - r2, 1e-9, None))], axis=-1)
        analytic /= np.linalg.norm(analytic, axis=-1, keepdims=True)
        got = normals[core]
        want = analytic[core]
        err = np.linalg.norm(got - want, axis=1)
        assert np.quantile(err, 0.95) < 0.02

    def test_unit_norm_everywhere(self):
        rng = np.random.default_rng(0)
        grid = np.abs(rng.normal(0, 0.3, size=(30, 40)))
        normals = R.normals_from_height(M.HeightMap(grid, 0.15))
        assert np.allclose(np.linalg.norm(normals, axis=-1), 1.0, atol=1e-12)


class TestShade:
    def test_flat_gel_uniform_baseline(self):
        rig = R.default_light_rig()
        frame = R.shade(R.normals_from_height(flat_map()), rig)
        baseline = rig.ambient[0] + rig.gain * math.sin(math.radians(30.0))
        assert np.allclose(frame, baseline)

    def test_light_weight_linearity_preclamp(self):
        normals = R.normals_from_height(flat_map())
        base = R.LightRig(
            directions=np.array([[0.0, math.cos(math.radians(30)), math.sin(math.radians(30))]]),
            colors=np.array([[0.2, 0.0, 0.0]]),
            ambient=np.zeros(3),
            gain=1.0,
        )
        doubled = R.LightRig(base.directions, base.colors * 2.0, base.ambient, 1.0)
        f1 = R.shade(normals, base)
        f2 = R.shade(normals, doubled)
        assert np.allclose(f2, 2.0 * f1)

    def test_harder_object_yields_larger_intensity_change(self):
        shape = M.Sphere(10.0)
        rig = R.default_light_rig()
        reference = R.shade(R.normals_from_height(flat_map()), rig)
        changes = []
        for body in (M.shore00_to_modulus(10.0), M.ElasticBody.rigid()):
            state = M.contact_for_shape(shape, GEL, body, 1.2, SPEC)
            frame = R.shade(R.normals_from_height(M.gel_surface(shape, state, SPEC)), rig)
            changes.append(R.mean_intensity_change(frame, reference))
        assert changes[1] > changes[0]

    def test_frames_bounded_and_finite(self):
        state = M.contact_for_shape(M.Edge(), GEL, M.ElasticBody.rigid(), 2.0, SPEC)
        frame = R.shade(
            R.normals_from_height(M.gel_surface(M.Edge(), state, SPEC)), R.default_light_rig()
        )
        assert np.all(np.isfinite(frame))
        assert frame.min() >= 0.0 and frame.max() <= 1.0

    def test_deterministic(self):
        state = M.contact_for_shape(M.Sphere(6.0), GEL, M.ElasticBody.rigid(), 1.0, SPEC)
        height = M.gel_surface(M.Sphere(6.0), state, SPEC)
        rig = R.default_light_rig()
        f1 = R.shade(R.normals_from_height(height), rig)
        f2 = R.shade(R.normals_from_height(height), rig)
        assert np.array_equal(f1, f2)


class TestMarkers:
    grid = R.build_marker_grid(SPEC)

    def test_lattice_inside_area_at_pitch(self):
        pos = self.grid.rest_positions_mm
        w, h = SPEC.sensing_area_mm
        assert np.all(np.abs(pos[:, 0]) <= w / 2)
        assert np.all(np.abs(pos[:, 1]) <= h / 2)
        xs = np.unique(np.round(pos[:, 0], 9))
        assert np.allclose(np.diff(xs), SPEC.marker_pitch_mm)

    def test_no_contact_no_motion(self):
        state = M.ContactState(0.0, 0.0, 0.0, 0.8)
        moved = R.advect_markers(self.grid, state)
        assert np.array_equal(moved, self.grid.rest_positions_mm)

    def test_stationary_point_of_displacement_profile(self):
        # u(r) ~ (r/a) exp(1 - (r/a)^2): differentiating gives the peak at
        # r = a / sqrt(2)
        a = 5.0
        state = M.ContactState(1.0, 1.0, a, 1.0)
        r = np.linspace(0.0, 3 * a, 20001)
        pts = np.stack([r, np.zeros_like(r)], axis=1)
        grid = R.MarkerGrid(pts, 0.25)
        moved = R.advect_markers(grid, state, beta=0.3)
        disp = np.linalg.norm(moved - pts, axis=1)
        r_peak = r[np.argmax(disp)]
        assert r_peak == pytest.approx(a / math.sqrt(2), rel=1e-3)
        assert disp[0] == 0.0  # no motion at the contact center

    def test_displacement_scales_with_gel_share(self):
        soft = M.contact_for_shape(M.Sphere(10.0), GEL, M.shore00_to_modulus(10.0), 1.0, SPEC)
        rigid = M.contact_for_shape(M.Sphere(10.0), GEL, M.ElasticBody.rigid(), 1.0, SPEC)
        d_soft = np.linalg.norm(
            R.advect_markers(self.grid, soft) - self.grid.rest_positions_mm, axis=1
        ).max()
        d_rigid = np.linalg.norm(
            R.advect_markers(self.grid, rigid) - self.grid.rest_positions_mm, axis=1
        ).max()
        assert d_rigid / d_soft == pytest.approx(rigid.gel_share / soft.gel_share, rel=1e-9)

    def test_marker_order_preserved_along_ray(self):
        # injectivity for beta <= 0.5: markers on one ray never swap order
        state = M.ContactState(2.0, 1.0, 4.0, 1.0)
        r = np.linspace(0.05, 12.0, 200)
        pts = np.stack([r, np.zeros_like(r)], axis=1)
        moved = R.advect_markers(R.MarkerGrid(pts, 0.25), state, beta=0.5)
        assert np.all(np.diff(moved[:, 0]) > 0)

    def test_count_conserved_and_drawn_black(self):
        frame = np.full((SPEC.image_resolution_px[1], SPEC.image_resolution_px[0], 3), 0.6)
        out = R.draw_markers(frame, self.grid.rest_positions_mm, SPEC)
        assert out.shape == frame.shape
        # every marker darkens its neighborhood
        darkened = (out < 0.5).any(axis=2).sum()
        assert darkened >= len(self.grid.rest_positions_mm)


class TestIntensityChange:
    def test_identity(self):
        f = np.random.default_rng(0).uniform(0, 1, size=(9, 12, 3))
        assert R.mean_intensity_change(f, f) == 0.0

    def test_constant_offset(self):
        f = np.full((9, 12, 3), 0.4)
        assert R.mean_intensity_change(f + 0.1, f) == pytest.approx(0.1)

    def test_resolution_mismatch(self):
        with pytest.raises(DomainError):
            R.mean_intensity_change(np.zeros((4, 4, 3)), np.zeros((5, 4, 3)))

    def test_monotone_press_series_nondecreasing(self):
        shape = M.Sphere(10.0)
        rig = R.default_light_rig()
        reference = None
        series = []
        for delta in np.linspace(0.0, 1.8, 10):
            state = M.contact_for_shape(shape, GEL, M.shore00_to_modulus(40.0), float(delta), SPEC)
            frame = R.render_press_frame(
                M.gel_surface(shape, state, SPEC), rig, SPEC, state=state,
                markers=R.build_marker_grid(SPEC),
            )
            if reference is None:
                reference = frame
            series.append(R.mean_intensity_change(frame, reference))
        assert all(b >= a for a, b in zip(series, series[1:]))
