"""End-to-end MIMO-OFDM link simulator with a from-scratch differentiable
transformer receiver (SigT), its FC-DNN/CSINet/LSTM benchmarks, and a
classical pilot-based receiver oracle."""

from .attention import AttentionParams, multi_head_attention, self_attention
from .baselines import BaselineConfig, CSINetModel, FCDNNModel, LSTMModel
from .factory import build_model, default_model_config, load_model, save_model
from .models import ModelOutput, SigTConfig, SigTModel, detokenize, tokenize
from .phy import (
    ChannelRealization,
    Dataset,
    FrameConfig,
    Sample,
    generate_channel_pool,
    generate_dataset,
    qam_modulate,
)
from .tensor import Tensor
from .training import Adam, Metrics, RunConfig, SGD, aacc, mse_loss, train

__version__ = "0.1.0"

__all__ = [
    "AttentionParams",
    "Adam",
    "BaselineConfig",
    "ChannelRealization",
    "CSINetModel",
    "Dataset",
    "FCDNNModel",
    "FrameConfig",
    "LSTMModel",
    "Metrics",
    "ModelOutput",
    "RunConfig",
    "Sample",
    "SGD",
    "SigTConfig",
    "SigTModel",
    "Tensor",
    "aacc",
    "build_model",
    "default_model_config",
    "detokenize",
    "generate_channel_pool",
    "generate_dataset",
    "load_model",
    "mse_loss",
    "multi_head_attention",
    "qam_modulate",
    "save_model",
    "self_attention",
    "tokenize",
    "train",
]
