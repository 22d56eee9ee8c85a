"""Command-line entry point: ``mcdenoise <command> ...``.

Commands: mix, train, enhance, enhance-multi, evaluate, correlate, and synth
(writes a synthetic demo corpus). Every randomised step derives from
``--seed`` (falling back to $MCDENOISE_SEED, then 0). Each run writes its
resolved configuration as JSON next to its main output.
"""
import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .dsp import StftConfig, stft
from .mc_inference import McConfig, enhance_waveform, mc_forward
from .metrics import correlate, evaluate, frame_squared_error, write_frame_csv, write_report
from .mixer import enumerate_jobs, load_manifest, mix_at_snr, snr_db
from .neuralnet import TrainConfig, load_model, save_model, train
from .selector import ModelBank, enhance_multi, write_selection_log
from .wavio import Waveform, read_wav, write_wav

logger = logging.getLogger("mcdenoise")


def _default_seed():
    raw = os.environ.get("MCDENOISE_SEED")
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"error: MCDENOISE_SEED must be an integer, got {raw!r}")


def _write_config(path, args, **sections):
    cfg = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "func"}
    cfg = {k: ([str(x) for x in v] if isinstance(v, list) else v) for k, v in cfg.items()}
    cfg.update({k: v.to_dict() for k, v in sections.items()})
    cfg["backend"] = BACKEND
    cfg["version"] = __version__
    Path(path).write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")


def _stft_cfg(args):
    return StftConfig(frame_len=args.frame_len, hop=args.hop, fft_size=args.fft_size,
                      n_bins=args.fft_size // 2 + 1)


def _sibling(path, suffix):
    path = Path(path)
    return path.with_name(path.name + suffix)


# -- commands --------------------------------------------------------------

def cmd_mix(args):
    manifest = load_manifest(args.manifest)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = enumerate_jobs(manifest, args.seed)
    cache = {}

    def get(p):
        if p not in cache:
            cache[p] = read_wav(p).samples
        return cache[p]

    rows = []
    for i, job in enumerate(jobs):
        clean = get(job.clean_id)
        noisy, scaled = mix_at_snr(clean, get(job.noise_id), job.snr_db, job.noise_offset, return_noise=True)
        name = f"{i:04d}_{Path(job.clean_id).stem}__{Path(job.noise_id).stem}__{job.snr_db:g}dB.wav"
        write_wav(out / name, Waveform(noisy), fmt=args.format)
        rows.append((name, job.clean_id, job.noise_id, repr(job.snr_db), str(job.noise_offset),
                     repr(snr_db(clean, scaled)), str(job.seed)))
    with open(out / "index.tsv", "w") as fh:
        fh.write("noisy\tclean\tnoise\tsnr_db\tnoise_offset\tachieved_snr_db\tseed\n")
        for r in rows:
            fh.write("\t".join(r) + "\n")
    _write_config(out / "mix_config.json", args)
    print(f"wrote {len(rows)} mixtures to {out}")


def cmd_train(args):
    manifest = load_manifest(args.manifest)
    if len(manifest) == 0:
        raise ValueError(f"{args.manifest}: manifest has no entries")
    stft_cfg = _stft_cfg(args)
    tcfg = TrainConfig(learning_rate=args.lr, batch_size=args.batch_size, epochs=args.epochs,
                       weight_decay=args.weight_decay, seed=args.seed, dropout_rate=args.dropout,
                       hidden=tuple(int(h) for h in args.hidden.split(",")), optimizer=args.optimizer)
    if tcfg.learning_rate == 0:
        logger.warning("--lr 0: parameters will stay at their initial values")
    model = train(manifest, stft_cfg, tcfg)
    save_model(model, args.out)
    with open(_sibling(args.out, ".loss.csv"), "w") as fh:
        fh.write("epoch,loss\n")
        for e, loss in enumerate(model.meta["loss_log"], start=1):
            fh.write(f"{e},{loss!r}\n")
    _write_config(_sibling(args.out, ".config.json"), args, stft=stft_cfg, train=tcfg)
    log = model.meta["loss_log"]
    if log:
        print(f"trained on {model.meta['n_frames']} frames; loss {log[0]:.6g} -> {log[-1]:.6g}")


def _mc_cfg(args):
    return McConfig(t_passes=args.passes, seed=args.seed, tau_inv=args.tau_inv)


def cmd_enhance(args):
    model = load_model(args.model)
    if args.deterministic:
        model = model.with_dropout(0.0)
    noisy = read_wav(args.input)
    stft_cfg, mc_cfg = _stft_cfg(args), _mc_cfg(args)
    enhanced, var_trace = enhance_waveform(model, noisy.samples, stft_cfg, mc_cfg)
    write_wav(args.output, Waveform(enhanced, noisy.sample_rate), fmt=args.format)
    with open(_sibling(args.output, ".uncertainty.csv"), "w") as fh:
        fh.write("frame_idx,var_trace\n")
        for i, v in enumerate(var_trace):
            fh.write(f"{i},{float(v)!r}\n")
    _write_config(_sibling(args.output, ".config.json"), args, stft=stft_cfg, mc=mc_cfg)
    print(f"enhanced {len(var_trace)} frames -> {args.output}")


def _model_ids(paths):
    stems = [Path(p).stem.replace(",", "_") for p in paths]
    return [s if stems.count(s) == 1 else f"{s}#{i}" for i, s in enumerate(stems)]


def cmd_enhance_multi(args):
    bank = ModelBank(zip(_model_ids(args.models), (load_model(p) for p in args.models)))
    noisy = read_wav(args.input)
    stft_cfg, mc_cfg = _stft_cfg(args), _mc_cfg(args)
    enhanced, log = enhance_multi(bank, noisy.samples, stft_cfg, mc_cfg, args.independent_masks)
    write_wav(args.output, Waveform(enhanced, noisy.sample_rate), fmt=args.format)
    write_selection_log(_sibling(args.output, ".selection.csv"), log, bank.ids)
    _write_config(_sibling(args.output, ".config.json"), args, stft=stft_cfg, mc=mc_cfg)
    counts = {mid: 0 for mid in bank.ids}
    for s in log:
        counts[s.chosen_model_id] += 1
    print(f"enhanced {len(log)} frames -> {args.output}; selections " +
          ", ".join(f"{k}={v}" for k, v in counts.items()))


def cmd_evaluate(args):
    stft_cfg = _stft_cfg(args)
    clean, test = read_wav(args.clean), read_wav(args.test)
    report = evaluate(clean.samples, test.samples, stft_cfg)
    write_report(args.report, report)
    write_frame_csv(_sibling(args.report, ".frames.csv"), report.squared_error)
    _write_config(_sibling(args.report, ".config.json"), args, stft=stft_cfg)
    print(f"SSE {report.sse:.6g}  SSNR {report.ssnr_db:.3f} dB  ({report.n_frames} frames)")


def cmd_correlate(args):
    stft_cfg, mc_cfg = _stft_cfg(args), _mc_cfg(args)
    model = load_model(args.model)
    clean, noisy = read_wav(args.clean), read_wav(args.noisy)
    if len(clean) != len(noisy):
        raise ValueError(f"length mismatch: clean {len(clean)} vs noisy {len(noisy)} samples")
    ref = stft(clean.samples, stft_cfg)[0]
    est = mc_forward(model, stft(noisy.samples, stft_cfg)[0], mc_cfg)
    se = frame_squared_error(est.mean, ref)
    corr = correlate(se, est.var_trace)
    write_frame_csv(args.out_csv, se, est.var_trace)
    r = "undefined" if corr.r is None else repr(corr.r)
    with open(_sibling(args.out_csv, ".summary.txt"), "w") as fh:
        fh.write(f"n_frames: {len(se)}\npearson_r: {r}\n")
    _write_config(_sibling(args.out_csv, ".config.json"), args, stft=stft_cfg, mc=mc_cfg)
    print(f"pearson_r: {r}  ({len(se)} frames)")


def cmd_synth(args):
    """Write a synthetic corpus plus train/test manifests for trying the pipeline."""
    from . import toy

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng([args.seed, 7])
    kinds = args.noises.split(",")
    for kind in kinds:
        write_wav(out / f"noise_{kind}.wav", Waveform(toy.noise(kind, args.noise_seconds, rng)))
    for split, count in (("train", args.n_train), ("test", args.n_test)):
        lines = [f"# split: {split}"]
        for i in range(count):
            name = f"{split}_{i:03d}.wav"
            write_wav(out / name, Waveform(toy.speech_like(args.seconds, rng)))
            for kind in kinds:
                lines.append(f"{name}\tnoise_{kind}.wav\t{args.snrs}")
        (out / f"{split}.tsv").write_text("\n".join(lines) + "\n")
    _write_config(out / "synth_config.json", args)
    print(f"wrote {args.n_train} train / {args.n_test} test utterances and {len(kinds)} noises to {out}")


# -- argument parsing ------------------------------------------------------

def _add_stft(p):
    g = p.add_argument_group("STFT")
    g.add_argument("--frame-len", type=int, default=512, help="frame length in samples (32 ms)")
    g.add_argument("--hop", type=int, default=160, help="frame shift in samples (10 ms)")
    g.add_argument("--fft-size", type=int, default=512)


def _add_mc(p):
    g = p.add_argument_group("Monte-Carlo dropout")
    g.add_argument("-T", "--passes", type=int, default=50, help="stochastic passes per frame")
    g.add_argument("--tau-inv", type=float, default=0.0, help="precision term added to every bin's variance")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="base seed (default: $MCDENOISE_SEED or 0)")
    common.add_argument("--threads", type=int, default=None,
                        help="BLAS threads (default: all cores; use 1 for bit-reproducible output)")
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = argparse.ArgumentParser(prog="mcdenoise", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND} kernels)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mix", parents=[common], help="synthesize noisy mixtures from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--format", choices=("float32", "pcm16"), default="float32")
    p.set_defaults(func=cmd_mix)

    p = sub.add_parser("train", parents=[common], help="train a denoising MLP")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--epochs", type=int, default=20)
    p.add_argument("--lr", type=float, default=1e-4)
    p.add_argument("--batch-size", type=int, default=128)
    p.add_argument("--dropout", type=float, default=0.2, help="dropout rate p (0 trains a no-dropout baseline)")
    p.add_argument("--hidden", default="2048,2048,2048", help="comma-separated hidden layer widths")
    p.add_argument("--weight-decay", type=float, default=0.0)
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    _add_stft(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("enhance", parents=[common], help="enhance with one model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--mc", dest="deterministic", action="store_false", help="MC-dropout mean (default)")
    mode.add_argument("--deterministic", dest="deterministic", action="store_true",
                      help="dropout off (same as --mc with p forced to 0)")
    p.add_argument("--format", choices=("float32", "pcm16"), default="float32")
    _add_mc(p)
    _add_stft(p)
    p.set_defaults(func=cmd_enhance, deterministic=False)

    p = sub.add_parser("enhance-multi", parents=[common], help="per-frame minimum-variance model selection")
    p.add_argument("--models", nargs="+", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--independent-masks", action="store_true",
                   help="give each model its own mask stream instead of sharing one")
    p.add_argument("--format", choices=("float32", "pcm16"), default="float32")
    _add_mc(p)
    _add_stft(p)
    p.set_defaults(func=cmd_enhance_multi)

    p = sub.add_parser("evaluate", parents=[common], help="SSE and segmental SNR against a clean reference")
    p.add_argument("--clean", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--report", required=True)
    _add_stft(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("correlate", parents=[common], help="per-frame squared error vs MC uncertainty")
    p.add_argument("--model", required=True)
    p.add_argument("--clean", required=True)
    p.add_argument("--noisy", required=True)
    p.add_argument("--out-csv", required=True)
    _add_mc(p)
    _add_stft(p)
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic demo corpus and manifests")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--noises", default="pink,white")
    p.add_argument("--snrs", default="0,5,10")
    p.add_argument("--n-train", type=int, default=8)
    p.add_argument("--n-test", type=int, default=4)
    p.add_argument("--seconds", type=float, default=1.5)
    p.add_argument("--noise-seconds", type=float, default=4.0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is None:
        args.seed = _default_seed()
    if args.seed < 0:
        parser.error(f"--seed must be >= 0, got {args.seed}")
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    from threadpoolctl import threadpool_limits

    threads = args.threads or os.cpu_count() or 1
    try:
        with threadpool_limits(limits=threads):
            args.func(args)
    except (ValueError, OSError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
