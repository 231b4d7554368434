"""Contextual encoder backend: train, checkpoint, and serve segment
classification over the wire protocol."""

from .model import LABELS, BoundaryEncoder, EncoderBackend, ModelConfig, load_checkpoint, save_checkpoint
from .server import make_server, serve
from .train import TrainSettings, fine_tune, read_training_file
from .vocab import Vocab, tokenize

__version__ = "0.1.0"
