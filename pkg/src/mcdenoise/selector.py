"""Per-frame minimum-uncertainty selection across a bank of MC-dropout models."""
from dataclasses import dataclass

import numpy as np

from .dsp import StftConfig, istft, stft
from .mc_inference import McConfig, mc_forward


@dataclass
class FrameSelection:
    frame_index: int
    chosen_model_id: str
    chosen_index: int
    var_traces: np.ndarray
    chosen_mean: np.ndarray


class ModelBank:
    """Ordered (model_id, model) pairs sharing one architecture."""

    def __init__(self, models):
        self.models = [(str(mid), m) for mid, m in models]
        if not self.models:
            raise ValueError("model bank is empty")
        archs = {m.arch for _, m in self.models}
        if len(archs) != 1:
            raise ValueError(f"models in a bank must share an architecture, got {sorted(archs)}")
        ids = [mid for mid, _ in self.models]
        if any("," in mid or "\n" in mid for mid in ids):
            raise ValueError("model ids may not contain commas or newlines")
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate model ids in bank: {ids}")

    def __len__(self):
        return len(self.models)

    @property
    def ids(self):
        return [mid for mid, _ in self.models]


def select_min(var_traces):
    """Index of the smallest uncertainty along the last axis; ties go to the lowest index."""
    v = np.asarray(var_traces, dtype=np.float64)
    if v.shape[-1] == 0:
        raise ValueError("no candidates to select from")
    if np.isnan(v).any():
        raise ValueError("uncertainty contains NaN")
    return np.argmin(v, axis=-1)


def _bank_estimates(bank, mag, mc_cfg, independent_masks):
    return [mc_forward(model, mag, mc_cfg, stream=i if independent_masks else 0)
            for i, (_, model) in enumerate(bank.models)]


def select_frame(bank, x, mc_cfg=None, independent_masks=False, frame_index=0):
    """Run every model's MC estimate on one frame and keep the least uncertain one."""
    ests = _bank_estimates(bank, np.asarray(x)[None, :], mc_cfg or McConfig(), independent_masks)
    traces = np.array([e.var_trace[0] for e in ests])
    i = int(select_min(traces))
    return FrameSelection(frame_index, bank.ids[i], i, traces, ests[i].mean[0])


def select_frames(bank, mag, mc_cfg=None, independent_masks=False):
    """Vectorised :func:`select_frame` over a (n_frames, 257) spectrogram.

    Returns ``(chosen_index, var_traces, chosen_mean)`` with var_traces shaped
    (n_frames, M). Each model's T passes are reused for both its uncertainty
    and its mean.
    """
    ests = _bank_estimates(bank, mag, mc_cfg or McConfig(), independent_masks)
    traces = np.stack([e.var_trace for e in ests], axis=1)
    chosen = select_min(traces)
    means = np.stack([e.mean for e in ests])
    return chosen, traces, means[chosen, np.arange(len(chosen))]


def enhance_multi(bank, noisy, stft_cfg=None, mc_cfg=None, independent_masks=False):
    """Enhance with the per-frame minimum-variance model; returns (samples, selections).

    By default all models see the same dropout masks for pass t (the mask
    stream depends only on the seed and pass index), so identical models tie
    and adding a model leaves the others' passes unchanged. Set
    ``independent_masks`` to give model i its own stream keyed by i.
    """
    stft_cfg = stft_cfg or StftConfig()
    noisy = np.asarray(getattr(noisy, "samples", noisy), dtype=np.float64)
    mag, phase = stft(noisy, stft_cfg)
    chosen, traces, est = select_frames(bank, mag, mc_cfg, independent_masks)
    log = [FrameSelection(f, bank.ids[c], int(c), traces[f], est[f]) for f, c in enumerate(chosen)]
    return istft(est, phase, stft_cfg, out_len=len(noisy)), log


def write_selection_log(path, selections, model_ids):
    """CSV: header ``frame_idx,chosen_model_id,var_0,...,var_{M-1}`` then one row per frame."""
    header = ["frame_idx", "chosen_model_id"] + [f"var_{i}" for i in range(len(model_ids))]
    with open(path, "w") as fh:
        fh.write("# models: " + ",".join(model_ids) + "\n")
        fh.write(",".join(header) + "\n")
        for s in selections:
            fh.write(f"{s.frame_index},{s.chosen_model_id},"
                     + ",".join(repr(float(v)) for v in s.var_traces) + "\n")


def read_selection_log(path):
    """Parse a selection log back into (frame_idx, chosen_model_id, var_traces) rows."""
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#") or line.startswith("frame_idx"):
                continue
            parts = line.strip().split(",")
            rows.append((int(parts[0]), parts[1], np.array([float(v) for v in parts[2:]])))
    return rows
