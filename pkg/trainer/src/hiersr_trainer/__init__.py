"""hiersr-trainer: desk-scale 2x super-resolution model training and a
frame-protocol inference server.

One trained model covers one downscaling level (it maps level i+1 data to
level i).  The pipeline package talks to a served model over the HSR1
wire protocol; nothing here imports that package, only the file format
and the protocol are shared.
"""

from .errors import EmptySet, IndivisibleDimension
from .hvol import read_hvol, write_hvol
from .model import Upscaler2xNet
from .train import TrainConfig, load_artifact, save_artifact, train_level

__version__ = "0.1.0"

__all__ = [
    "EmptySet",
    "IndivisibleDimension",
    "TrainConfig",
    "Upscaler2xNet",
    "load_artifact",
    "read_hvol",
    "save_artifact",
    "train_level",
    "write_hvol",
]
