"""The hardness regressor: a small convolutional encoder applied per frame, an
LSTM over the 5 selected frames, and a shared affine head producing one
hardness estimate per step. The object-level prediction averages the last
three steps."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError
from . import kernels
from .layers import Conv2d, Dense, GlobalAvgPool, LSTMCell, MaxPool2d, Param, ReLU, huber_loss

CLIP_FRAMES = 5


@dataclass(frozen=True)
class NetConfig:
    conv_channels: tuple[int, ...] = (16, 32, 64, 64)
    lstm_hidden: int = 64
    feature_dim: int = 64
    input_downsample: int = 3
    huber_kappa: float = 1.0
    # normalization: targets are divided by target_scale for the loss, inputs
    # multiplied by input_scale before the encoder
    target_scale: float = 100.0
    input_scale: float = 6.0

    def to_dict(self) -> dict:
        return {
            "conv_channels": list(self.conv_channels),
            "lstm_hidden": self.lstm_hidden,
            "feature_dim": self.feature_dim,
            "input_downsample": self.input_downsample,
            "huber_kappa": self.huber_kappa,
            "target_scale": self.target_scale,
            "input_scale": self.input_scale,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NetConfig":
        return cls(
            conv_channels=tuple(d["conv_channels"]),
            lstm_hidden=int(d["lstm_hidden"]),
            feature_dim=int(d["feature_dim"]),
            input_downsample=int(d["input_downsample"]),
            huber_kappa=float(d["huber_kappa"]),
            target_scale=float(d["target_scale"]),
            input_scale=float(d["input_scale"]),
        )


class HardnessNet:
    def __init__(self, cfg: NetConfig = NetConfig(), seed: int = 0):
        self.cfg = cfg
        rng = np.random.default_rng(seed)
        self.encoder = []
        c_in = 3
        for i, c_out in enumerate(cfg.conv_channels):
            self.encoder += [
                Conv2d(c_in, c_out, 3, rng, pad=1, need_input_grad=i > 0),
                ReLU(),
                MaxPool2d(),
            ]
            c_in = c_out
        self.encoder += [GlobalAvgPool(), Dense(c_in, cfg.feature_dim, rng)]
        self.lstm = LSTMCell(cfg.feature_dim, cfg.lstm_hidden, rng)
        self.head = Dense(cfg.lstm_hidden, 1, rng)

    # --- parameters ---

    def named_params(self) -> list[tuple[str, Param]]:
        out = []
        for idx, layer in enumerate(self.encoder):
            for p in layer.params():
                out.append((f"encoder.{idx}.{p.name}", p))
        for p in self.lstm.params():
            out.append((f"lstm.{p.name}", p))
        for p in self.head.params():
            out.append((f"head.{p.name}", p))
        return out

    def params(self) -> list[Param]:
        return [p for _, p in self.named_params()]

    def zero_grads(self):
        for p in self.params():
            p.grad[...] = 0.0

    # --- forward / backward ---

    def preprocess(self, clips: np.ndarray) -> np.ndarray:
        """(B, 5, H, W, 3) baseline-subtracted clips -> (B*5, h, w, 3)."""
        clips = np.asarray(clips, dtype=np.float64)
        if clips.ndim != 5 or clips.shape[1] != CLIP_FRAMES or clips.shape[4] != 3:
            raise DomainError(f"expected (B, {CLIP_FRAMES}, H, W, 3) clips, got {clips.shape}")
        b, t, h, w, _ = clips.shape
        x = kernels.block_mean(clips.reshape(b * t, h, w, 3), self.cfg.input_downsample)
        return x * self.cfg.input_scale

    def _forward(self, clips: np.ndarray):
        x = self.preprocess(clips)
        for layer in self.encoder:
            x = layer.forward(x)
        b = clips.shape[0]
        feats = x.reshape(b, CLIP_FRAMES, -1)
        d = self.cfg.lstm_hidden
        h = np.zeros((b, d))
        c = np.zeros((b, d))
        caches, hs = [], []
        for t in range(CLIP_FRAMES):
            h, c, cache = self.lstm.step(feats[:, t], h, c)
            caches.append(cache)
            hs.append(h)
        h_all = np.concatenate(hs, axis=0)  # (5*B, d), t-major
        y_norm = self.head.forward(h_all)[:, 0].reshape(CLIP_FRAMES, b).T  # (B, 5)
        return y_norm, caches

    def _backward(self, dy_norm: np.ndarray, caches):
        b = dy_norm.shape[0]
        dh_all = self.head.backward(dy_norm.T.reshape(CLIP_FRAMES * b, 1))
        dh_steps = dh_all.reshape(CLIP_FRAMES, b, -1)
        dfeat = np.empty((b, CLIP_FRAMES, self.cfg.feature_dim))
        dh_next = np.zeros((b, self.cfg.lstm_hidden))
        dc_next = np.zeros((b, self.cfg.lstm_hidden))
        for t in reversed(range(CLIP_FRAMES)):
            dx, dh_next, dc_next = self.lstm.step_backward(
                caches[t], dh_steps[t] + dh_next, dc_next
            )
            dfeat[:, t] = dx
        g = dfeat.reshape(b * CLIP_FRAMES, -1)
        for layer in reversed(self.encoder):
            g = layer.backward(g)

    def forward_clips(self, clips: np.ndarray) -> np.ndarray:
        """Per-step hardness estimates in Shore 00 units, shape (B, 5)."""
        y_norm, _ = self._forward(clips)
        return y_norm * self.cfg.target_scale

    def loss_and_grads(self, clips: np.ndarray, labels: np.ndarray) -> float:
        """Per-frame Huber loss on the normalized scale, summed over the five
        steps with equal weights and averaged over the batch. Fills parameter
        grads and returns the loss."""
        self.zero_grads()
        y_norm, caches = self._forward(clips)
        target = (np.asarray(labels, dtype=np.float64) / self.cfg.target_scale)[:, None]
        target = np.broadcast_to(target, y_norm.shape)
        elems, grads = huber_loss(y_norm, target, self.cfg.huber_kappa)
        batch = y_norm.shape[0]
        self._backward(grads / batch, caches)
        return float(elems.sum() / batch)


def predict_hardness(y: np.ndarray) -> np.ndarray | float:
    """Object-level estimate: mean of the last three per-step predictions,
    clamped to the Shore 00 range."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape[-1] != CLIP_FRAMES:
        raise DomainError(f"expected {CLIP_FRAMES} per-step predictions, got {y.shape}")
    est = np.clip(y[..., 2:].mean(axis=-1), 0.0, 100.0)
    return float(est) if est.ndim == 0 else est
