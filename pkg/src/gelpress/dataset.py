"""Dataset generation and the on-disk layout.

A dataset is a flat list of press sequences. On disk:

    root/
      manifest.json                   # version, one record per sequence
      sequences/<id>/frame_0000.png   # 8-bit RGB frames
      sequences/<id>/meta.json        # profile parameters, intensity series

Frames are quantized to uint8 once, at generation time; every consumer
(training, evaluation, ingestion round-trips) sees the quantized pixels, so
in-memory and on-disk pipelines are bit-identical.
"""

from __future__ import annotations

import json
import math
import re
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ConfigError, DomainError, ManifestError
from .mechanics import Cylinder, Flat, GelSpec, IndenterShape, Sphere
from .render import mean_intensity_change
from .simcam import (
    GROUP_BAD,
    GROUP_BASIC,
    GROUP_COMPLEX,
    PressProfile,
    PressRanges,
    Scene,
    human_press_profile,
    make_ridged_field,
    robot_press_profile,
    synth_sequence,
)

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class DatasetPlan:
    """What to generate: a full grid of hardness levels x shapes x seeds.

    Each cell of the grid yields ``seeds_per_cell`` sequences split into
    slots: plain human presses, one robot press, bad-contact presses, and
    presses against random ridged height fields (the complex-shape group).
    Complex presses at held-out hardness levels draw their ridge sharpness
    from a separate, sharper range: the held-out geometry is novel in the
    sharp direction, mirroring the failure mode the evaluation looks for.
    """

    seed: int = 20339
    hardness_levels: int = 16
    hardness_range: tuple[float, float] = (8.0, 87.0)
    sphere_radii_mm: tuple[float, ...] = (4.0, 6.0, 10.0, 20.0, 40.0)
    cylinder_radii_mm: tuple[float, ...] = (4.0, 6.0, 10.0, 20.0, 40.0)
    seeds_per_cell: int = 10
    basic_human_per_cell: int = 5
    basic_robot_per_cell: int = 1
    bad_contact_per_cell: int = 2
    complex_per_cell: int = 2
    complex_train_sharpness: tuple[float, float] = (0.4, 1.0)
    complex_test_sharpness: tuple[float, float] = (1.0, 1.6)
    complex_amplitude_mm: tuple[float, float] = (0.5, 1.2)
    holdout_hardness_offset: int = 2
    holdout_hardness_stride: int = 4
    holdout_radii_mm: tuple[float, ...] = (6.0, 20.0)

    def __post_init__(self):
        used = (
            self.basic_human_per_cell
            + self.basic_robot_per_cell
            + self.bad_contact_per_cell
            + self.complex_per_cell
        )
        if used != self.seeds_per_cell:
            raise ConfigError(
                f"cell slots sum to {used} but seeds_per_cell is {self.seeds_per_cell}"
            )

    def levels(self) -> np.ndarray:
        return np.linspace(*self.hardness_range, self.hardness_levels)

    def holdout_levels(self) -> np.ndarray:
        return self.levels()[self.holdout_hardness_offset :: self.holdout_hardness_stride]

    def shape_cells(self) -> list[tuple[str, float]]:
        return [("sphere", r) for r in self.sphere_radii_mm] + [
            ("cylinder", r) for r in self.cylinder_radii_mm
        ]

    def n_sequences(self) -> int:
        return self.hardness_levels * len(self.shape_cells()) * self.seeds_per_cell


@dataclass
class SequenceRecord:
    """One press video plus everything the pipeline needs about it."""

    id: str
    frames: np.ndarray  # (T, H, W, 3) uint8
    intensity: np.ndarray  # (T,) change vs frame 0, from the quantized frames
    label: float | None  # Shore 00, None for unlabeled (ingested) data
    shape_tag: str
    family: str
    radius_mm: float | None
    group: str
    profile_kind: str
    seed: int
    saturated: bool = False
    meta: dict = field(default_factory=dict)

    def float_frames(self) -> np.ndarray:
        return self.frames.astype(np.float64) / 255.0


def quantize_frames(frames: np.ndarray) -> np.ndarray:
    return np.clip(np.round(frames * 255.0), 0, 255).astype(np.uint8)


def intensity_from_frames(frames_u8: np.ndarray) -> np.ndarray:
    ref = frames_u8[0].astype(np.float64) / 255.0
    return np.array(
        [mean_intensity_change(f.astype(np.float64) / 255.0, ref) for f in frames_u8]
    )


def _sequence_seed(plan_seed: int, level_idx: int, shape_idx: int, slot: int) -> int:
    # readable, collision-free for any sane grid size
    return plan_seed * 1_000_000 + level_idx * 10_000 + shape_idx * 100 + slot


def _build_one(
    plan: DatasetPlan,
    scene: Scene,
    ranges: PressRanges,
    level_idx: int,
    shape_idx: int,
    slot: int,
) -> SequenceRecord:
    level = float(plan.levels()[level_idx])
    family, radius = plan.shape_cells()[shape_idx]
    seq_seed = _sequence_seed(plan.seed, level_idx, shape_idx, slot)
    rng = np.random.default_rng(seq_seed)

    n_basic = plan.basic_human_per_cell
    n_robot = n_basic + plan.basic_robot_per_cell
    n_bad = n_robot + plan.bad_contact_per_cell

    profile_kind = "human"
    group = GROUP_BASIC
    shape: IndenterShape
    meta: dict = {}
    if family == "sphere":
        shape = Sphere(radius)
        shape_tag = f"sphere:{radius:g}"
    else:
        axis = float(rng.uniform(0.0, math.pi))
        shape = Cylinder(radius, axis)
        shape_tag = f"cylinder:{radius:g}"
        meta["axis_angle_rad"] = axis

    if slot < n_basic:
        profile = human_press_profile(seq_seed, ranges)
    elif slot < n_robot:
        profile_kind = "robot"
        profile = robot_press_profile(seq_seed, ranges)
    elif slot < n_bad:
        group = GROUP_BAD
        profile = human_press_profile(seq_seed, ranges, bad_contact=True)
    else:
        group = GROUP_COMPLEX
        held = any(np.isclose(level, plan.holdout_levels()))
        sharp_range = plan.complex_test_sharpness if held else plan.complex_train_sharpness
        sharpness = float(rng.uniform(*sharp_range))
        amplitude = float(rng.uniform(*plan.complex_amplitude_mm))
        shape = make_ridged_field(seq_seed, scene.spec, sharpness, amplitude)
        family, radius = "field", None
        shape_tag = f"field:{seq_seed}:{sharpness:.3f}:{amplitude:.3f}"
        meta.update({"sharpness": sharpness, "amplitude_mm": amplitude})
        profile = human_press_profile(seq_seed, ranges)

    seq = synth_sequence(shape, level, profile, scene, group)
    frames_u8 = quantize_frames(seq.frames)
    meta.update(
        {
            "profile": {
                "delta_mm": [float(d) for d in seq.profile.delta_mm],
                "max_force_n": seq.profile.max_force_n,
                "tilt_rad": seq.profile.tilt_rad,
                "lateral_drift_mm_per_s": seq.profile.lateral_drift_mm_per_s,
                "offcenter_mm": seq.profile.offcenter_mm,
                "kind": seq.profile.kind,
                "fps": seq.profile.fps,
            },
            "force_series_n": [float(f) for f in seq.force_series],
        }
    )
    return SequenceRecord(
        id=f"{level_idx:02d}-{shape_idx:02d}-{slot:02d}",
        frames=frames_u8,
        intensity=intensity_from_frames(frames_u8),
        label=level,
        shape_tag=shape_tag,
        family=family,
        radius_mm=radius,
        group=group,
        profile_kind=profile_kind,
        seed=seq_seed,
        saturated=seq.saturated,
        meta=meta,
    )


def build_dataset(
    plan: DatasetPlan,
    scene: Scene = Scene(),
    ranges: PressRanges | None = None,
    progress=None,
) -> list[SequenceRecord]:
    """Generate the full grid. Deterministic for a fixed plan seed."""
    if ranges is None:
        ranges = PressRanges(gel_thickness_mm=scene.spec.thickness_mm)
    records = []
    total = plan.n_sequences()
    for li in range(plan.hardness_levels):
        for si in range(len(plan.shape_cells())):
            for slot in range(plan.seeds_per_cell):
                records.append(_build_one(plan, scene, ranges, li, si, slot))
                if progress is not None:
                    progress(len(records), total)
    return records


# --- on-disk layout ------------------------------------------------------------


def _manifest_record(rec: SequenceRecord) -> dict:
    return {
        "id": rec.id,
        "dir": f"sequences/{rec.id}",
        "label": rec.label if rec.label is not None else "unknown",
        "shape": rec.shape_tag,
        "family": rec.family,
        "radius_mm": rec.radius_mm,
        "group": rec.group,
        "profile_kind": rec.profile_kind,
        "seed": rec.seed,
        "n_frames": int(len(rec.frames)),
        "saturated": rec.saturated,
    }


def write_dataset(records: list[SequenceRecord], root: str | Path) -> Path:
    """Write frames, per-sequence metadata and the manifest; returns the
    manifest path. Byte-identical for identical inputs."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    for rec in records:
        seq_dir = root / "sequences" / rec.id
        seq_dir.mkdir(parents=True, exist_ok=True)
        for k, frame in enumerate(rec.frames):
            Image.fromarray(frame, "RGB").save(seq_dir / f"frame_{k:04d}.png")
        meta = dict(rec.meta)
        meta["intensity_series"] = [float(v) for v in rec.intensity]
        with open(seq_dir / "meta.json", "w") as fh:
            json.dump(meta, fh, sort_keys=True, indent=1)
    manifest = {
        "format_version": MANIFEST_VERSION,
        "records": [_manifest_record(r) for r in sorted(records, key=lambda r: r.id)],
    }
    path = root / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)
    return path


def read_manifest(root: str | Path) -> dict:
    root = Path(root)
    path = root / "manifest.json" if root.is_dir() else root
    if not path.exists():
        raise ManifestError(f"no manifest at {path}")
    try:
        with open(path) as fh:
            manifest = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: not valid JSON: {exc}") from exc
    version = manifest.get("format_version")
    if not isinstance(version, int) or version > MANIFEST_VERSION:
        raise ManifestError(
            f"{path}: manifest version {version!r} not supported (<= {MANIFEST_VERSION})"
        )
    ids = [r["id"] for r in manifest.get("records", [])]
    if len(ids) != len(set(ids)):
        raise ManifestError(f"{path}: duplicate sequence ids")
    return manifest


_FRAME_NUM = re.compile(r"(\d+)")


def _numeric_frame_sort(paths: list[Path]) -> list[Path]:
    def key(p: Path):
        nums = _FRAME_NUM.findall(p.stem)
        return (int(nums[-1]) if nums else 0, p.name)

    return sorted(paths, key=key)


def load_dataset(root: str | Path) -> list[SequenceRecord]:
    """Reconstruct records from a written dataset (or an ingested manifest)."""
    root = Path(root)
    manifest = read_manifest(root)
    records = []
    for entry in manifest["records"]:
        seq_dir = root / entry["dir"]
        if not seq_dir.is_dir():
            raise ManifestError(f"missing sequence directory {seq_dir}")
        frame_paths = _numeric_frame_sort(
            [p for p in seq_dir.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg", ".bmp")]
        )
        if not frame_paths:
            raise ManifestError(f"{seq_dir}: no frames")
        frames = np.stack([np.asarray(Image.open(p).convert("RGB")) for p in frame_paths])
        meta_path = seq_dir / "meta.json"
        meta = {}
        if meta_path.exists():
            with open(meta_path) as fh:
                meta = json.load(fh)
        intensity = (
            np.array(meta["intensity_series"])
            if "intensity_series" in meta
            else intensity_from_frames(frames)
        )
        label = entry["label"]
        records.append(
            SequenceRecord(
                id=entry["id"],
                frames=frames,
                intensity=intensity,
                label=None if label == "unknown" else float(label),
                shape_tag=entry.get("shape", "unknown"),
                family=entry.get("family", "unknown"),
                radius_mm=entry.get("radius_mm"),
                group=entry.get("group", GROUP_BASIC),
                profile_kind=entry.get("profile_kind", "human"),
                seed=int(entry.get("seed", 0)),
                saturated=bool(entry.get("saturated", False)),
                meta=meta,
            )
        )
    return records


def ingest_dataset(raw_dir: str | Path, labels_csv: str | Path | None) -> dict:
    """Build a manifest for an external directory of per-sequence frame folders.

    Labels come from a two-column CSV (sequence id, Shore 00); sequences
    missing from it are admitted with label "unknown" for predict-only use.
    Returns the manifest dict (caller writes it).
    """
    raw_dir = Path(raw_dir)
    if not raw_dir.is_dir():
        raise ManifestError(f"{raw_dir} is not a directory")
    labels: dict[str, float] = {}
    if labels_csv is not None:
        with open(labels_csv) as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                parts = [p.strip() for p in line.split(",")]
                if len(parts) < 2:
                    raise ManifestError(f"{labels_csv}:{line_no}: expected 'id,label'")
                sid, raw_label = parts[0], parts[1]
                try:
                    value = float(raw_label)
                except ValueError as exc:
                    if line_no == 1:  # header row
                        continue
                    raise ManifestError(f"{labels_csv}:{line_no}: bad label {raw_label!r}") from exc
                if sid in labels:
                    raise ManifestError(f"{labels_csv}:{line_no}: duplicate id {sid!r}")
                if not (0.0 <= value <= 100.0):
                    raise ManifestError(f"{labels_csv}:{line_no}: label {value} outside [0, 100]")
                labels[sid] = value

    entries = []
    seq_dirs = sorted(p for p in raw_dir.iterdir() if p.is_dir())
    for seq_dir in seq_dirs:
        frame_paths = _numeric_frame_sort(
            [p for p in seq_dir.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg", ".bmp")]
        )
        if not frame_paths:
            continue
        for p in frame_paths:
            try:
                with Image.open(p) as img:
                    img.verify()
            except Exception as exc:
                raise ManifestError(f"unreadable image {p}: {exc}") from exc
        entries.append(
            {
                "id": seq_dir.name,
                "dir": seq_dir.name,
                "label": labels.get(seq_dir.name, "unknown"),
                "shape": "unknown",
                "family": "unknown",
                "radius_mm": None,
                "group": GROUP_BASIC,
                "profile_kind": "human",
                "seed": 0,
                "n_frames": len(frame_paths),
                "saturated": False,
            }
        )
    if not entries:
        warnings.warn(f"{raw_dir}: no sequences found; writing an empty manifest")
    return {"format_version": MANIFEST_VERSION, "records": entries}
