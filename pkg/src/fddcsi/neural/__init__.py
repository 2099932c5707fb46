"""From-scratch dense networks and the neural uplink-to-downlink precoders."""

from .aoa import AoaLabel, aoa_from_position, aoa_from_positions, wrap_angle
from .checkpoint import load_checkpoint, save_checkpoint
from .estimators import AoaEncoderDecoderPrecoder, DNNPrecoder, EncoderDecoderPrecoder
from .loss import ZeroOutputError, cosine_loss_and_grad, mse_loss_and_grad
from .network import EncoderDecoderSpec, Mlp, MlpSpec, Parallel, Sequential, backward, forward
from .representation import complex_from_real, flatten_input, real_from_complex, unflatten_input
from .training import (
    ComposedPrecoder,
    LatentDecoder,
    LatentEncoder,
    NetworkPrecoder,
    TrainConfig,
    compose,
    train,
    train_supervised_decoder,
    train_supervised_encoder,
)

__all__ = [
    "AoaEncoderDecoderPrecoder", "AoaLabel", "ComposedPrecoder", "DNNPrecoder", "EncoderDecoderPrecoder",
    "EncoderDecoderSpec", "LatentDecoder", "LatentEncoder", "Mlp", "MlpSpec", "NetworkPrecoder", "Parallel",
    "Sequential", "TrainConfig", "ZeroOutputError", "aoa_from_position", "aoa_from_positions", "backward",
    "complex_from_real", "compose", "cosine_loss_and_grad", "flatten_input", "forward", "load_checkpoint",
    "mse_loss_and_grad", "real_from_complex", "save_checkpoint", "train", "train_supervised_decoder",
    "train_supervised_encoder", "unflatten_input", "wrap_angle",
]
