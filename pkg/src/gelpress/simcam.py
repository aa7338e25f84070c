"""Press-video synthesis: loading profiles (human-like and robot-like) driven
through the mechanics -> render pipeline into full tactile sequences."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import ndimage

from .errors import DomainError, SaturationError
from .mechanics import (
    ContactState,
    ElasticBody,
    GelSpec,
    HeightField,
    IndenterShape,
    Shore00,
    contact_for_shape,
    gel_surface,
    shore00_to_modulus,
)
from .render import (
    LightRig,
    MarkerGrid,
    build_marker_grid,
    default_light_rig,
    mean_intensity_change,
    render_press_frame,
)

GROUP_BASIC = "basic"
GROUP_BAD = "bad_contact"
GROUP_SIMPLE = "simple_shape"
GROUP_COMPLEX = "complex_shape"
GROUPS = (GROUP_BASIC, GROUP_BAD, GROUP_SIMPLE, GROUP_COMPLEX)


@dataclass(frozen=True)
class PressRanges:
    """Sampling ranges for randomized press profiles (30 Hz camera)."""

    fps: float = 30.0
    human_frames: tuple[int, int] = (20, 30)
    human_depth_mm: tuple[float, float] = (1.5, 2.2)
    human_force_n: tuple[float, float] = (2.0, 10.0)
    human_tilt_sd_rad: float = 0.05
    human_tilt_max_rad: float = 0.15
    human_drift_sd_mm_s: float = 0.3
    bad_tilt_rad: tuple[float, float] = (0.2, 0.35)
    bad_drift_mm_s: tuple[float, float] = (2.0, 4.0)
    bad_offcenter_mm: tuple[float, float] = (4.0, 7.0)
    robot_speed_mm_s: tuple[float, float] = (5.0, 7.0)
    robot_force_n: tuple[float, float] = (5.0, 9.0)
    max_depth_fraction: float = 0.95
    gel_thickness_mm: float = 2.4


@dataclass(frozen=True)
class PressProfile:
    """One press trajectory. ``delta_mm[k]`` is the mutual indentation at
    frame k; loading is monotone and starts at zero contact."""

    delta_mm: np.ndarray
    max_force_n: float
    tilt_rad: float
    lateral_drift_mm_per_s: float
    seed: int
    kind: str = "human"
    offcenter_mm: float = 0.0
    fps: float = 30.0


@dataclass
class PressSequence:
    frames: np.ndarray  # (T, H, W, 3) in [0, 1]
    intensity_series: np.ndarray  # (T,), change vs frames[0]
    force_series: np.ndarray  # (T,) N
    label: Shore00
    shape: IndenterShape
    profile: PressProfile
    group_tag: str = GROUP_BASIC
    saturated: bool = False


def human_press_profile(
    seed: int, ranges: PressRanges = PressRanges(), bad_contact: bool = False
) -> PressProfile:
    """Randomized smooth monotone loading with jittered speed, emulating an
    uncontrolled hand press. Reproducible from the seed."""
    rng = np.random.default_rng(seed)
    n_frames = int(rng.integers(ranges.human_frames[0], ranges.human_frames[1] + 1))
    depth = rng.uniform(*ranges.human_depth_mm)
    exponent = rng.uniform(0.7, 1.6)
    base = np.linspace(0.0, 1.0, n_frames) ** exponent
    steps = np.diff(base) * np.exp(rng.normal(0.0, 0.25, n_frames - 1))
    delta = np.concatenate([[0.0], np.cumsum(steps)])
    delta *= depth / delta[-1]
    max_force = rng.uniform(*ranges.human_force_n)

    tilt = min(abs(rng.normal(0.0, ranges.human_tilt_sd_rad)), ranges.human_tilt_max_rad)
    drift = abs(rng.normal(0.0, ranges.human_drift_sd_mm_s))
    offcenter = 0.0
    if bad_contact:
        mode = rng.integers(0, 3)
        if mode == 0:
            tilt = rng.uniform(*ranges.bad_tilt_rad)
        elif mode == 1:
            drift = rng.uniform(*ranges.bad_drift_mm_s)
        else:
            offcenter = rng.uniform(*ranges.bad_offcenter_mm)
    return PressProfile(delta, max_force, tilt, drift, seed, "human", offcenter, ranges.fps)


def robot_press_profile(seed: int, ranges: PressRanges = PressRanges()) -> PressProfile:
    """Constant-speed gripper closing; loading stops when the simulated force
    crosses the sampled threshold (checked during synthesis)."""
    rng = np.random.default_rng(seed)
    speed = rng.uniform(*ranges.robot_speed_mm_s)
    threshold = rng.uniform(*ranges.robot_force_n)
    step = speed / ranges.fps
    max_depth = ranges.max_depth_fraction * ranges.gel_thickness_mm
    n_steps = int(math.floor(max_depth / step))
    delta = np.arange(n_steps + 1) * step
    return PressProfile(delta, threshold, 0.0, 0.0, seed, "robot", 0.0, ranges.fps)


def make_ridged_field(
    seed: int,
    spec: GelSpec,
    sharpness: float = 1.0,
    amplitude_mm: float = 1.0,
) -> HeightField:
    """Band-limited random height field with crest lines; larger ``sharpness``
    means narrower, higher-curvature ridges."""
    if sharpness <= 0 or amplitude_mm <= 0:
        raise DomainError("sharpness and amplitude must be positive")
    rng = np.random.default_rng(seed)
    nx, ny = spec.image_resolution_px
    noise = rng.normal(size=(ny, nx))
    smooth = ndimage.gaussian_filter(noise, sigma=5.0 / sharpness, mode="wrap")
    smooth /= np.max(np.abs(smooth))
    ridge = (1.0 - np.abs(smooth)) ** (0.5 + sharpness)
    return HeightField(amplitude_mm * ridge, spec.pixel_pitch_mm)


@dataclass(frozen=True)
class Scene:
    """Everything about the optics of a synthesized press."""

    spec: GelSpec = GelSpec()
    rig: LightRig = field(default_factory=default_light_rig)
    markers_enabled: bool = True
    dot_radius_mm: float = 0.25
    marker_beta: float = 0.3
    noise_sigma: float = 0.003

    def marker_grid(self) -> MarkerGrid | None:
        if not self.markers_enabled:
            return None
        return build_marker_grid(self.spec, self.dot_radius_mm)


def synth_sequence(
    shape: IndenterShape,
    hardness: Shore00 | float,
    profile: PressProfile,
    scene: Scene = Scene(),
    group_tag: str = GROUP_BASIC,
) -> PressSequence:
    """Run one press through mechanics -> render. Per-frame contact centers
    follow the profile's tilt offset and lateral drift; loading stops at the
    force threshold and truncates (with a flag) on gel saturation."""
    if group_tag not in GROUPS:
        raise DomainError(f"unknown group tag {group_tag!r}")
    label = hardness if isinstance(hardness, Shore00) else Shore00(float(hardness))
    spec = scene.spec
    gel_body = spec.body
    obj_body = shore00_to_modulus(label)
    markers = scene.marker_grid()

    rng = np.random.default_rng(profile.seed)
    tilt_dir = rng.uniform(0.0, 2.0 * math.pi)
    drift_dir = rng.uniform(0.0, 2.0 * math.pi)
    off_dir = rng.uniform(0.0, 2.0 * math.pi)
    tilt_off = math.tan(profile.tilt_rad) * spec.thickness_mm
    base_center = np.array(
        [
            tilt_off * math.cos(tilt_dir) + profile.offcenter_mm * math.cos(off_dir),
            tilt_off * math.sin(tilt_dir) + profile.offcenter_mm * math.sin(off_dir),
        ]
    )
    drift_vec = profile.lateral_drift_mm_per_s * np.array(
        [math.cos(drift_dir), math.sin(drift_dir)]
    )

    frames, forces = [], []
    saturated = False
    for k, delta in enumerate(profile.delta_mm):
        center = base_center + drift_vec * (k / profile.fps)
        try:
            state = contact_for_shape(shape, gel_body, obj_body, float(delta), spec)
        except SaturationError:
            saturated = True
            break
        height = gel_surface(shape, state, spec, tuple(center))
        frame = render_press_frame(
            height,
            scene.rig,
            spec,
            state=state,
            markers=markers,
            marker_center_mm=tuple(center),
            marker_beta=scene.marker_beta,
            noise_sigma=scene.noise_sigma,
            rng=rng,
        )
        frames.append(frame)
        forces.append(state.force_n)
        if state.force_n >= profile.max_force_n:
            break

    if not frames:
        raise DomainError("profile saturates the gel at its first frame")
    stack = np.stack(frames)
    intensity = np.array([mean_intensity_change(f, stack[0]) for f in stack])
    return PressSequence(
        stack, intensity, np.array(forces), label, shape, profile, group_tag, saturated
    )
