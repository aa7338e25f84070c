"""Training loop (SGD with step-decayed learning rate and endpoint-truncation
augmentation), the three evaluation splits, and the R^2 / RMSE report."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .dataset import DatasetPlan, SequenceRecord
from .errors import ClipTooShortError, ConfigError, NoContactError, TrainingDiverged
from .net import kernels
from .net.model import CLIP_FRAMES, HardnessNet, predict_hardness
from .pipeline import default_tau, find_end, find_start, select_five, truncate_endpoints

MODES = ("novel_hardness", "novel_shape", "robot")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.001
    iterations: int = 3000
    lr_step: int = 1000
    lr_decay: float = 0.1
    batch_size: int = 16
    momentum: float = 0.9
    seed: int = 7901

    def __post_init__(self):
        if min(self.iterations, self.lr_step, self.batch_size) <= 0:
            raise ConfigError("iterations, lr_step and batch size must be positive")
        if self.learning_rate < 0:  # zero is a valid no-op optimizer
            raise ConfigError("learning rate must be nonnegative")
        if not (0.0 < self.lr_decay <= 1.0):
            raise ConfigError("lr_decay must lie in (0, 1]")


def make_splits(
    records: list[SequenceRecord], mode: str, plan: DatasetPlan = DatasetPlan()
) -> tuple[list[SequenceRecord], list[SequenceRecord]]:
    """The three evaluations:

    * ``novel_hardness`` -- train on human presses of the non-held-out
      hardness levels, test on everything human at the held-out levels;
    * ``novel_shape``    -- hold out two radii per shape family;
    * ``robot``          -- train on human presses, test on robot presses.

    Training always uses human-collected presses only.
    """
    if mode not in MODES:
        raise ConfigError(f"unknown split mode {mode!r} (choose from {MODES})")
    labeled = [r for r in records if r.label is not None]
    human = [r for r in labeled if r.profile_kind == "human"]

    if mode == "novel_hardness":
        held = plan.holdout_levels()
        in_held = lambda r: bool(np.any(np.isclose(r.label, held)))
        train = [r for r in human if not in_held(r)]
        test = [r for r in human if in_held(r)]
    elif mode == "novel_shape":
        held = set(plan.holdout_radii_mm)
        is_held = lambda r: r.family in ("sphere", "cylinder") and r.radius_mm in held
        train = [r for r in human if not is_held(r)]
        test = [r for r in human if is_held(r)]
    else:  # robot
        train = human
        test = [r for r in labeled if r.profile_kind == "robot"]

    if not train or not test:
        raise ConfigError(f"mode {mode!r} yields an empty split on this dataset")
    return train, test


class _FloatView:
    """Lazy uint8 -> [0, 1] float view so clip selection converts only the
    five frames it actually uses."""

    def __init__(self, frames_u8: np.ndarray):
        self._frames = frames_u8

    def __getitem__(self, i):
        return self._frames[i].astype(np.float64) / 255.0

    def __len__(self):
        return len(self._frames)


@dataclass
class _Usable:
    record: SequenceRecord
    start: int
    end: int
    endpoints: list[tuple[int, int]]


def _prepare(records, tau) -> tuple[list[_Usable], list[str]]:
    usable, skipped = [], []
    for rec in records:
        try:
            start = find_start(rec.intensity, tau)
            end = find_end(rec.intensity)
            if end - start < CLIP_FRAMES - 1:
                raise ClipTooShortError(f"{end - start + 1} frames from start to peak")
            endpoints = truncate_endpoints(rec.intensity, tau, start)
        except (NoContactError, ClipTooShortError):
            skipped.append(rec.id)
            continue
        usable.append(_Usable(rec, start, end, endpoints))
    return usable, skipped


def train(
    model: HardnessNet,
    records: list[SequenceRecord],
    config: TrainConfig = TrainConfig(),
    tau: float | None = None,
    log_every: int = 0,
) -> np.ndarray:
    """SGD over randomly sampled clips; every draw picks a random truncation
    endpoint so one video stands in for presses of many maximum forces.
    Returns the per-iteration loss curve."""
    tau = default_tau() if tau is None else tau
    usable, skipped = _prepare(records, tau)
    if skipped:
        warnings.warn(f"skipping {len(skipped)} sequences with no usable clip: {skipped[:5]}...")
    if not usable:
        raise ConfigError("no trainable sequences")

    rng = np.random.default_rng(config.seed)
    params = model.params()
    velocity = [np.zeros_like(p.value) for p in params]
    losses = np.empty(config.iterations)

    with threadpool_limits(limits=kernels.blas_limit(), user_api="blas"):
        return _train_loop(model, config, usable, rng, params, velocity, losses, log_every)


def _train_loop(model, config, usable, rng, params, velocity, losses, log_every):
    for it in range(config.iterations):
        lr = config.learning_rate * config.lr_decay ** (it // config.lr_step)
        picks = rng.integers(0, len(usable), size=config.batch_size)
        clips = np.empty(
            (config.batch_size, CLIP_FRAMES) + usable[0].record.frames.shape[1:], dtype=np.float64
        )
        labels = np.empty(config.batch_size)
        for j, idx in enumerate(picks):
            u = usable[idx]
            if u.endpoints:
                start, end = u.endpoints[rng.integers(0, len(u.endpoints))]
            else:
                start, end = u.start, u.end
            clip = select_five(_FloatView(u.record.frames), u.record.intensity, start, end)
            clips[j] = clip.frames
            labels[j] = u.record.label

        loss = model.loss_and_grads(clips, labels)
        if not math.isfinite(loss):
            raise TrainingDiverged(f"loss became {loss} at iteration {it}")
        for p, v in zip(params, velocity):
            v *= config.momentum
            v += p.grad
            p.value -= lr * v
        losses[it] = loss
        if log_every and (it + 1) % log_every == 0:
            window = losses[max(0, it - log_every + 1) : it + 1]
            print(f"iter {it + 1:6d}  lr {lr:.2e}  loss {window.mean():.5f}")
    return losses


@dataclass
class EvalRow:
    id: str
    shape: str
    group: str
    label: float
    prediction: float


@dataclass
class EvalReport:
    r_squared: float
    rmse: float
    n_videos: int
    rows: list[EvalRow] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    high_range: dict = field(default_factory=dict)  # labels >= 70, reported separately

    def summary_line(self) -> str:
        return f"r2={self.r_squared:.6f} rmse={self.rmse:.6f}"

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("id,shape,group,label,prediction\n")
            for row in self.rows:
                fh.write(
                    f"{row.id},{row.shape},{row.group},{row.label:.6f},{row.prediction:.6f}\n"
                )
            fh.write(f"# {self.summary_line()} n={self.n_videos}\n")


def regression_metrics(labels: np.ndarray, preds: np.ndarray) -> tuple[float, float]:
    """R^2 = 1 - SS_res/SS_tot and RMSE in Shore 00 units."""
    labels = np.asarray(labels, dtype=np.float64)
    preds = np.asarray(preds, dtype=np.float64)
    ss_res = float(np.sum((labels - preds) ** 2))
    ss_tot = float(np.sum((labels - labels.mean()) ** 2))
    rmse = math.sqrt(ss_res / labels.size)
    if ss_tot == 0.0:
        return (1.0 if ss_res == 0.0 else -math.inf), rmse
    return 1.0 - ss_res / ss_tot, rmse


def evaluate(
    model: HardnessNet,
    records: list[SequenceRecord],
    tau: float | None = None,
    batch: int = 32,
) -> EvalReport:
    """Predict every sequence (full loading window, last-three-step average)
    and score against the ground-truth labels."""
    tau = default_tau() if tau is None else tau
    usable, skipped = _prepare(records, tau)
    rows = []
    with threadpool_limits(limits=kernels.blas_limit(), user_api="blas"):
        for lo in range(0, len(usable), batch):
            chunk = usable[lo : lo + batch]
            clips = np.stack(
                [
                    select_five(
                        _FloatView(u.record.frames), u.record.intensity, u.start, u.end
                    ).frames
                    for u in chunk
                ]
            )
            preds = predict_hardness(model.forward_clips(clips))
            for u, pred in zip(chunk, np.atleast_1d(preds)):
                rows.append(
                    EvalRow(
                        u.record.id, u.record.shape_tag, u.record.group, u.record.label, float(pred)
                    )
                )
    if not rows:
        raise ConfigError("nothing to evaluate")
    labels = np.array([r.label for r in rows])
    preds = np.array([r.prediction for r in rows])
    r2, rmse = regression_metrics(labels, preds)
    report = EvalReport(r2, rmse, len(rows), rows, skipped)
    hard = labels >= 70.0
    if np.any(hard):
        report.high_range = {
            "n": int(hard.sum()),
            "rmse": float(np.sqrt(np.mean((labels[hard] - preds[hard]) ** 2))),
            "mean_error": float(np.mean(preds[hard] - labels[hard])),
        }
    return report


def write_loss_csv(losses: np.ndarray, path) -> None:
    with open(path, "w") as fh:
        fh.write("iteration,loss\n")
        for i, v in enumerate(losses):
            fh.write(f"{i},{v:.8f}\n")
