"""Flat key-value configuration (INI sections).

The packaged default.cfg is the reference: it defines every valid key and
its default. A user file overrides individual keys; unknown sections or keys
are rejected so typos fail loudly.
"""

from __future__ import annotations

import configparser
from importlib import resources
from pathlib import Path

from .dataset import DatasetPlan
from .errors import ConfigError
from .mechanics import GelSpec, Shore00
from .net.model import NetConfig
from .pipeline import TAU_SIGMA_FACTOR
from .render import default_light_rig
from .simcam import PressRanges, Scene
from .traineval import TrainConfig


def _read_default() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    with resources.files("gelpress").joinpath("default.cfg").open() as fh:
        parser.read_file(fh)
    return parser


def load_config(path: str | Path | None = None) -> configparser.ConfigParser:
    cfg = _read_default()
    if path is not None:
        reference = _read_default()
        user = configparser.ConfigParser(inline_comment_prefixes=("#",))
        if not Path(path).exists():
            raise ConfigError(f"config file {path} does not exist")
        try:
            user.read(path)
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        for section in user.sections():
            if not reference.has_section(section):
                raise ConfigError(f"{path}: unknown config section [{section}]")
            for key, value in user.items(section):
                if not reference.has_option(section, key):
                    raise ConfigError(f"{path}: unknown config key [{section}] {key}")
                cfg.set(section, key, value)
    return cfg


def _floats(raw: str) -> tuple[float, ...]:
    try:
        return tuple(float(v.strip()) for v in raw.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad float list {raw!r}") from exc


def _ints(raw: str) -> tuple[int, ...]:
    try:
        return tuple(int(v.strip()) for v in raw.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad int list {raw!r}") from exc


def _seed(cfg, section: str) -> int:
    raw = cfg.get(section, "seed", fallback="").strip()
    if not raw:
        raise ConfigError(f"[{section}] seed is mandatory (no wall-clock seeding)")
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] seed must be an integer, got {raw!r}") from exc


def gel_spec(cfg) -> GelSpec:
    g = cfg["gel"]
    return GelSpec(
        hardness=Shore00(g.getfloat("hardness_shore00")),
        thickness_mm=g.getfloat("thickness_mm"),
        sensing_area_mm=(g.getfloat("area_width_mm"), g.getfloat("area_height_mm")),
        marker_pitch_mm=g.getfloat("marker_pitch_mm"),
        image_resolution_px=(g.getint("resolution_x"), g.getint("resolution_y")),
    )


def scene(cfg) -> Scene:
    lights = cfg["lights"]
    azimuths = _floats(lights.get("azimuths_deg"))
    if len(azimuths) != 3:
        raise ConfigError("exactly three light azimuths expected")
    rig = default_light_rig(
        elevation_deg=lights.getfloat("elevation_deg"),
        azimuths_deg=azimuths,
        gain=lights.getfloat("gain"),
        ambient=lights.getfloat("ambient"),
    )
    markers = cfg["markers"]
    return Scene(
        spec=gel_spec(cfg),
        rig=rig,
        markers_enabled=markers.getboolean("enabled"),
        dot_radius_mm=markers.getfloat("dot_radius_mm"),
        marker_beta=markers.getfloat("advection_beta"),
        noise_sigma=cfg["noise"].getfloat("sigma"),
    )


def press_ranges(cfg) -> PressRanges:
    p = cfg["press"]
    return PressRanges(
        fps=p.getfloat("fps"),
        human_frames=(p.getint("human_frames_min"), p.getint("human_frames_max")),
        human_depth_mm=(p.getfloat("human_depth_min_mm"), p.getfloat("human_depth_max_mm")),
        human_force_n=(p.getfloat("human_force_min_n"), p.getfloat("human_force_max_n")),
        human_tilt_sd_rad=p.getfloat("human_tilt_sd_rad"),
        human_tilt_max_rad=p.getfloat("human_tilt_max_rad"),
        human_drift_sd_mm_s=p.getfloat("human_drift_sd_mm_s"),
        bad_tilt_rad=(p.getfloat("bad_tilt_min_rad"), p.getfloat("bad_tilt_max_rad")),
        bad_drift_mm_s=(p.getfloat("bad_drift_min_mm_s"), p.getfloat("bad_drift_max_mm_s")),
        bad_offcenter_mm=(p.getfloat("bad_offcenter_min_mm"), p.getfloat("bad_offcenter_max_mm")),
        robot_speed_mm_s=(p.getfloat("robot_speed_min_mm_s"), p.getfloat("robot_speed_max_mm_s")),
        robot_force_n=(p.getfloat("robot_force_min_n"), p.getfloat("robot_force_max_n")),
        max_depth_fraction=p.getfloat("max_depth_fraction"),
        gel_thickness_mm=cfg["gel"].getfloat("thickness_mm"),
    )


def dataset_plan(cfg) -> DatasetPlan:
    d = cfg["dataset"]
    return DatasetPlan(
        seed=_seed(cfg, "dataset"),
        hardness_levels=d.getint("hardness_levels"),
        hardness_range=(d.getfloat("hardness_min"), d.getfloat("hardness_max")),
        sphere_radii_mm=_floats(d.get("sphere_radii_mm")),
        cylinder_radii_mm=_floats(d.get("cylinder_radii_mm")),
        seeds_per_cell=d.getint("seeds_per_cell"),
        basic_human_per_cell=d.getint("basic_human_per_cell"),
        basic_robot_per_cell=d.getint("basic_robot_per_cell"),
        bad_contact_per_cell=d.getint("bad_contact_per_cell"),
        complex_per_cell=d.getint("complex_per_cell"),
        complex_train_sharpness=(
            d.getfloat("complex_train_sharp_min"),
            d.getfloat("complex_train_sharp_max"),
        ),
        complex_test_sharpness=(
            d.getfloat("complex_test_sharp_min"),
            d.getfloat("complex_test_sharp_max"),
        ),
        complex_amplitude_mm=(d.getfloat("complex_amp_min_mm"), d.getfloat("complex_amp_max_mm")),
        holdout_hardness_offset=d.getint("holdout_hardness_offset"),
        holdout_hardness_stride=d.getint("holdout_hardness_stride"),
        holdout_radii_mm=_floats(d.get("holdout_radii_mm")),
    )


def net_config(cfg) -> NetConfig:
    n = cfg["net"]
    return NetConfig(
        conv_channels=_ints(n.get("conv_channels")),
        lstm_hidden=n.getint("lstm_hidden"),
        feature_dim=n.getint("feature_dim"),
        input_downsample=n.getint("input_downsample"),
        huber_kappa=n.getfloat("huber_kappa"),
        target_scale=n.getfloat("target_scale"),
        input_scale=n.getfloat("input_scale"),
    )


def train_config(cfg) -> TrainConfig:
    t = cfg["train"]
    return TrainConfig(
        learning_rate=t.getfloat("learning_rate"),
        iterations=t.getint("iterations"),
        lr_step=t.getint("lr_step"),
        lr_decay=t.getfloat("lr_decay"),
        batch_size=t.getint("batch_size"),
        momentum=t.getfloat("momentum"),
        seed=_seed(cfg, "train"),
    )


def tau(cfg) -> float:
    raw = cfg["pipeline"].get("tau").strip().lower()
    if raw == "auto":
        return TAU_SIGMA_FACTOR * cfg["noise"].getfloat("sigma")
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[pipeline] tau must be 'auto' or a number, got {raw!r}") from exc


def kernel_backend(cfg) -> str:
    return cfg["backend"].get("kernels", "auto").strip()
