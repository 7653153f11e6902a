from .checkpoint import UNetCheckpoint, load_checkpoint, save_checkpoint
from .layers import (
    concat_skip,
    conv2d,
    conv2d_stride2,
    conv2d_transpose_stride2,
    dropout,
    elu,
    maxpool2,
)
from .model import UNet, UNetConfig, param_shapes

__all__ = [
    "UNet", "UNetConfig", "UNetCheckpoint", "param_shapes", "save_checkpoint", "load_checkpoint",
    "conv2d", "conv2d_stride2", "conv2d_transpose_stride2", "concat_skip", "dropout", "elu", "maxpool2",
]
