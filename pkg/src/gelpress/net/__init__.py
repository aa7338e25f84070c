from .checkpoint import load_checkpoint, save_checkpoint
from .kernels import available_backends, backend_name, use_backend
from .layers import huber_loss
from .model import CLIP_FRAMES, HardnessNet, NetConfig, predict_hardness

__all__ = [
    "CLIP_FRAMES",
    "HardnessNet",
    "NetConfig",
    "available_backends",
    "backend_name",
    "huber_loss",
    "load_checkpoint",
    "predict_hardness",
    "save_checkpoint",
    "use_backend",
]
