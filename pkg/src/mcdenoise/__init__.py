"""Speech enhancement with Monte-Carlo dropout MLPs and uncertainty-based model selection."""
__version__ = "0.1.0"

from ._backend import BACKEND
from .dsp import StftConfig, istft, stft
from .mc_inference import McConfig, McEstimate, enhance_waveform, mc_forward
from .metrics import EvalReport, correlate, evaluate, sse, ssnr
from .mixer import DatasetManifest, MixSpec, load_manifest, mix_at_snr
from .neuralnet import (MlpModel, TrainConfig, adam_step, backward, fit, forward, init_model,
                        load_model, msle_loss, save_model, train)
from .selector import FrameSelection, ModelBank, enhance_multi, select_frame
from .wavio import Waveform, read_wav, write_wav

__all__ = [
    "BACKEND", "StftConfig", "stft", "istft", "McConfig", "McEstimate", "mc_forward",
    "enhance_waveform", "EvalReport", "sse", "ssnr", "correlate", "evaluate", "DatasetManifest",
    "MixSpec", "load_manifest", "mix_at_snr", "MlpModel", "TrainConfig", "init_model", "forward",
    "backward", "msle_loss", "adam_step", "fit", "train", "save_model", "load_model",
    "FrameSelection", "ModelBank", "select_frame", "enhance_multi", "Waveform", "read_wav",
    "write_wav",
]
