"""Optical stack: height map -> surface normals -> shaded RGB frame with
advected black markers.

Frames are (H, W, 3) float arrays in [0, 1]. Rendering is deterministic;
sensor noise is only added when the caller passes a seeded RNG.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .mechanics import ContactState, GelSpec, HeightMap


@dataclass(frozen=True)
class LightRig:
    """Three colored directional lights plus ambient. Directions are unit
    vectors pointing from the surface toward the light."""

    directions: np.ndarray  # (L, 3)
    colors: np.ndarray  # (L, 3) channel weights
    ambient: np.ndarray  # (3,)
    gain: float = 1.0

    def __post_init__(self):
        d = np.asarray(self.directions, dtype=float)
        norms = np.linalg.norm(d, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-9):
            raise DomainError("light directions must be unit vectors")
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "colors", np.asarray(self.colors, dtype=float))
        object.__setattr__(self, "ambient", np.asarray(self.ambient, dtype=float))


def default_light_rig(
    elevation_deg: float = 30.0,
    azimuths_deg: tuple[float, float, float] = (90.0, 210.0, 330.0),
    gain: float = 1.3,
    ambient: float = 0.08,
) -> LightRig:
    """Red/green/blue lights 120 degrees apart at the given elevation."""
    el = math.radians(elevation_deg)
    dirs = []
    for az_deg in azimuths_deg:
        az = math.radians(az_deg)
        dirs.append([math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el)])
    colors = np.eye(3)
    return LightRig(np.array(dirs), colors, np.full(3, ambient), gain)


@dataclass(frozen=True)
class MarkerGrid:
    rest_positions_mm: np.ndarray  # (N, 2), sensor-centered coordinates
    dot_radius_mm: float = 0.25


def build_marker_grid(spec: GelSpec, dot_radius_mm: float = 0.25) -> MarkerGrid:
    """Square lattice of markers at the gel's marker pitch, centered in the
    sensing area."""
    w, h = spec.sensing_area_mm
    pitch = spec.marker_pitch_mm
    nx = int(w // pitch)
    ny = int(h // pitch)
    xs = (np.arange(nx) - (nx - 1) / 2.0) * pitch
    ys = (np.arange(ny) - (ny - 1) / 2.0) * pitch
    xg, yg = np.meshgrid(xs, ys)
    pts = np.stack([xg.ravel(), yg.ravel()], axis=1)
    return MarkerGrid(pts, dot_radius_mm)


def normals_from_height(height: HeightMap) -> np.ndarray:
    """Unit surface normals from central differences (one-sided at borders)."""
    gy, gx = np.gradient(height.grid, height.pitch_mm)
    n = np.stack([-gx, -gy, np.ones_like(gx)], axis=-1)
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    return n


def shade(normals: np.ndarray, rig: LightRig) -> np.ndarray:
    """Lambertian shading: ambient + sum of clamped diffuse terms, per channel."""
    diffuse = np.einsum("hwk,lk->hwl", normals, rig.directions)
    np.clip(diffuse, 0.0, None, out=diffuse)
    frame = rig.ambient[None, None, :] + rig.gain * (diffuse @ rig.colors)
    return np.clip(frame, 0.0, 1.0)


def advect_markers(
    grid: MarkerGrid,
    state: ContactState,
    center_mm: tuple[float, float] = (0.0, 0.0),
    beta: float = 0.3,
) -> np.ndarray:
    """In-plane marker displacement: radially outward from the contact center
    with magnitude beta * gel_share * approach * (r/a) * exp(1 - (r/a)^2)."""
    pos = grid.rest_positions_mm
    if state.approach_mm <= 0.0 or state.contact_radius_mm <= 0.0:
        return pos.copy()
    rel = pos - np.asarray(center_mm)[None, :]
    r = np.linalg.norm(rel, axis=1)
    rho = r / state.contact_radius_mm
    mag = beta * state.gel_share * state.approach_mm * rho * np.exp(1.0 - rho**2)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(r[:, None] > 0, rel / np.where(r == 0, 1.0, r)[:, None], 0.0)
    return pos + mag[:, None] * unit


def draw_markers(
    frame: np.ndarray, positions_mm: np.ndarray, spec: GelSpec, dot_radius_mm: float = 0.25
) -> np.ndarray:
    """Rasterize black discs (1 px feathered edge) over a shaded frame."""
    out = frame.copy()
    h_px, w_px = frame.shape[:2]
    pitch = spec.pixel_pitch_mm
    w_mm, h_mm = spec.sensing_area_mm
    r_px = dot_radius_mm / pitch

    # one bounding stencil per marker, scattered with multiply.at so that
    # overlapping dots occlude multiplicatively
    cx = (positions_mm[:, 0] + w_mm / 2.0) / pitch - 0.5
    cy = (positions_mm[:, 1] + h_mm / 2.0) / pitch - 0.5
    half = int(math.ceil(r_px + 1.5))
    off = np.arange(-half, half + 1)
    cxi, cyi = np.round(cx).astype(int), np.round(cy).astype(int)
    px, py = np.broadcast_arrays(
        cxi[:, None, None] + off[None, None, :], cyi[:, None, None] + off[None, :, None]
    )
    dist = np.hypot(px - cx[:, None, None], py - cy[:, None, None])
    cover = np.clip(r_px + 0.5 - dist, 0.0, 1.0)
    valid = (px >= 0) & (px < w_px) & (py >= 0) & (py < h_px) & (cover > 0)
    keep = np.ones(h_px * w_px)
    np.multiply.at(keep, (py[valid] * w_px + px[valid]), 1.0 - cover[valid])
    out *= keep.reshape(h_px, w_px)[:, :, None]
    return out


def add_sensor_noise(frame: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Zero-mean Gaussian pixel noise, applied last, clamped back to [0, 1]."""
    if sigma <= 0.0:
        return frame
    return np.clip(frame + rng.normal(0.0, sigma, size=frame.shape), 0.0, 1.0)


def mean_intensity_change(frame: np.ndarray, reference: np.ndarray) -> float:
    """Mean absolute per-pixel, per-channel difference between two frames."""
    if frame.shape != reference.shape:
        raise DomainError(f"resolution mismatch: {frame.shape} vs {reference.shape}")
    return float(np.mean(np.abs(frame - reference)))


def render_press_frame(
    height: HeightMap,
    rig: LightRig,
    spec: GelSpec,
    state: ContactState | None = None,
    markers: MarkerGrid | None = None,
    marker_center_mm: tuple[float, float] = (0.0, 0.0),
    marker_beta: float = 0.3,
    noise_sigma: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Full per-frame pipeline: normals -> shading -> markers -> noise."""
    frame = shade(normals_from_height(height), rig)
    if markers is not None:
        if state is not None:
            positions = advect_markers(markers, state, marker_center_mm, marker_beta)
        else:
            positions = markers.rest_positions_mm
        frame = draw_markers(frame, positions, spec, markers.dot_radius_mm)
    if noise_sigma > 0.0:
        if rng is None:
            raise DomainError("sensor noise requires a seeded RNG")
        frame = add_sensor_noise(frame, noise_sigma, rng)
    return frame
