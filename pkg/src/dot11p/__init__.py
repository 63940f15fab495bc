"""802.11p OFDM baseband with in-band pseudo-training and LMMSE receivers."""

__version__ = "0.1.0"

from .params import Mcs, mcs_table
from .frames import (
    FrameLayout,
    FrameTooShortError,
    default_ptb,
    effective_bit_rate,
    insert_pseudo_training,
    strip_pseudo_training,
)
from .tx import OfdmGrid, encode_frame, ofdm_demodulate, ofdm_modulate
from .channel import (
    ChannelRealization,
    CorrelationModel,
    DopplerSpec,
    PowerDelayProfile,
    apply_channel,
    effective_rms_delay,
    esn0_to_sigma2,
    exp_pdp,
    gen_fading,
)
from .rx import DecodeResult, ReceiverConfig, decode_frame
from .sim import SimConfig, SimResult, run_point, run_sweep

__all__ = [
    "Mcs",
    "mcs_table",
    "FrameLayout",
    "FrameTooShortError",
    "default_ptb",
    "effective_bit_rate",
    "insert_pseudo_training",
    "strip_pseudo_training",
    "OfdmGrid",
    "encode_frame",
    "ofdm_modulate",
    "ofdm_demodulate",
    "ChannelRealization",
    "CorrelationModel",
    "DopplerSpec",
    "PowerDelayProfile",
    "apply_channel",
    "effective_rms_delay",
    "esn0_to_sigma2",
    "exp_pdp",
    "gen_fading",
    "DecodeResult",
    "ReceiverConfig",
    "decode_frame",
    "SimConfig",
    "SimResult",
    "run_point",
    "run_sweep",
]
