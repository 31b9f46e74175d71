"""Model construction by kind string, plus checkpoint round-tripping."""

import numpy as np

from .baselines import BaselineConfig, CSINetModel, FCDNNModel, LSTMModel
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import ConfigError
from .models import SigTConfig, SigTModel
from .phy import FrameConfig
from .training import _MODEL_STREAM

MODEL_KINDS = ("sigt", "fcdnn", "csinet", "lstm")


def build_model(kind, frame, model_cfg, seed):
    """Instantiate a model with its init rng derived from the run seed."""
    rng = np.random.default_rng([seed, _MODEL_STREAM])
    if kind == "sigt":
        return SigTModel(model_cfg, frame, rng)
    if kind == "fcdnn":
        return FCDNNModel(model_cfg, frame, rng)
    if kind == "csinet":
        return CSINetModel(model_cfg, frame, rng)
    if kind == "lstm":
        return LSTMModel(model_cfg, frame, rng)
    raise ConfigError(f"unknown model kind {kind!r}")


def default_model_config(kind, **overrides):
    if kind == "sigt":
        return SigTConfig(**overrides)
    return BaselineConfig(kind=kind, **overrides)


def save_model(path, model):
    config = dict(model.frame.to_dict())
    config.update(model.cfg.to_dict())
    save_checkpoint(path, model.kind, config, model.state())


def _parse_tuple(s):
    return tuple(int(v) for v in str(s).split(",") if v != "")


def load_model(path):
    """Rebuild a model from a checkpoint (kind tag selects the architecture)."""
    kind, config, params = load_checkpoint(path)
    frame = FrameConfig(
        n_s=int(config["n_s"]),
        n_t=int(config["n_t"]),
        n_r=int(config["n_r"]),
        n_i=int(config["n_i"]),
        cp_len=int(config["cp_len"]),
        n_taps=int(config["n_taps"]),
        qam_bits=int(config["qam_bits"]),
    )
    if kind == "sigt":
        cfg = SigTConfig(
            depth=int(config["depth"]),
            heads=int(config["heads"]),
            d_model=int(config["d_model"]),
            d_ff=int(config["d_ff"]),
            aggregation=config["aggregation"],
            pool_kind=config["pool_kind"],
            dropout_p=float(config["dropout_p"]),
            mlp_hidden=int(config["mlp_hidden"]),
        )
    elif kind in ("fcdnn", "csinet", "lstm"):
        cfg = BaselineConfig(
            kind=kind,
            fcdnn_hidden=_parse_tuple(config["fcdnn_hidden"]),
            csinet_channels=_parse_tuple(config["csinet_channels"]),
            csinet_blocks=int(config["csinet_blocks"]),
            lstm_d_model=int(config["lstm_d_model"]),
            lstm_mlp_hidden=int(config["lstm_mlp_hidden"]),
            dropout_p=float(config["dropout_p"]),
        )
    else:
        raise ConfigError(f"checkpoint has unknown model kind {kind!r}")
    model = build_model(kind, frame, cfg, seed=0)
    model.load_state(params)
    return model
