"""Batch command-line interface.

Every subcommand is a file-to-file transform. Exit codes: 0 success,
1 usage error, 2 data error (the message names the file and the byte
offset or line number). ``--threads`` never changes the output.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import io as dio
from . import metrics, prosody, quantize, timebase
from .core import FeatureMatrix, as_fraction
from .fold import build_pair_vocab, fold, pair_stats, unfold
from .errors import DstokError


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _rational(text: str) -> Fraction:
    try:
        value = as_fraction(text)
    except DstokError:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}")
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return value


# -- file helpers ------------------------------------------------------------

def _inputs(args, attr="inputs") -> list[str]:
    paths = list(getattr(args, attr) or [])
    for manifest in args.manifest or []:
        for line in _read_text(manifest).splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                paths.append(line)
    if not paths:
        raise UsageError("no input files (give paths or --manifest)")
    return paths


def _read_bytes(path: str) -> bytes:
    try:
        return sys.stdin.buffer.read() if path == "-" else Path(path).read_bytes()
    except OSError as e:
        raise DataError(f"{path}: {e.strerror or e}")


def _read_text(path: str) -> str:
    try:
        return _read_bytes(path).decode("utf-8")
    except UnicodeDecodeError as e:
        raise DataError(f"{path}: not UTF-8 text: {e}")


def _load(path: str, reader):
    data = _read_bytes(path)
    try:
        return reader(data)
    except DstokError as e:
        raise DataError(f"{path}: {e}") from e


def _load_many(paths, reader) -> list:
    return [item for _, item in _load_sourced(paths, reader)]


def _load_sourced(paths, reader) -> list[tuple[str, object]]:
    out = []
    for p in paths:
        out.extend((p, item) for item in _load(p, reader))
    return out


def _apply(fn, sourced, *extra):
    """``fn(item, *extra)`` over (path, item) pairs; data errors name file and utterance."""
    out = []
    for path, item in sourced:
        try:
            out.append(fn(item, *extra))
        except DstokError as e:
            raise DataError(f"{path}: utterance {item.utt_id!r}: {e}") from e
    return out


def _write(path: str | None, data: bytes | str):
    if isinstance(data, str):
        data = data.encode("utf-8")
    if path is None or path == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(path).write_bytes(data)


def _write_tokens(path, streams):
    if path and path.endswith(".dst"):
        _write(path, dio.write_token_streams(streams))
    else:
        _write(path, dio.write_token_text(streams))


def _features(paths):
    return _load_sourced(paths, dio.read_feature_matrices)


def _tokens(paths):
    return _load_sourced(paths, dio.read_tokens_any)


def _items(sourced):
    return [item for _, item in sourced]


def _emit_metric(args, value: float, payload: dict, digits=3):
    if args.json:
        print(json.dumps(payload, sort_keys=True))
    else:
        print(f"{value:.{digits}f}")


# -- subcommands ---------------------------------------------------------------

def cmd_kmeans_train(args):
    feats = _features(_inputs(args))
    cfg = quantize.KMeansConfig(k=args.k, seed=args.seed, max_iters=args.max_iters, rel_tol=args.tol)
    try:
        cbs = quantize.kmeans_train_groups(_items(feats), cfg, args.groups, threads=args.threads)
    except DstokError as e:
        raise DataError(f"{', '.join(dict.fromkeys(p for p, _ in feats))}: {e}") from e
    _write(args.output, dio.write_codebooks(cbs))
    if args.json:
        report = [{"k": cb.k, "dims": cb.dims, "iterations_run": cb.iterations_run,
                   "final_inertia": cb.final_inertia} for cb in cbs]
        print(json.dumps(report[0] if len(report) == 1 else report, sort_keys=True))


def cmd_quantize(args):
    cbs = _load(args.codebook, dio.read_codebooks)
    feats = _features(_inputs(args))
    _write_tokens(args.output, _apply(lambda f: quantize.kmeans_assign_groups(f, cbs, threads=args.threads), feats))


def cmd_fold_build(args):
    table = build_pair_vocab(_items(_tokens(_inputs(args))))
    _write(args.output, dio.write_pair_table(table))


def cmd_fold(args):
    table = _load(args.table, dio.read_pair_table)
    _write_tokens(args.output, _apply(fold, _tokens(_inputs(args)), table, args.oov))


def cmd_unfold(args):
    table = _load(args.table, dio.read_pair_table)
    _write_tokens(args.output, _apply(unfold, _tokens(_inputs(args)), table))


def cmd_repeat(args):
    _write_tokens(args.output, _apply(timebase.repeat_tokens, _tokens(_inputs(args)), args.n))


def cmd_collapse(args):
    _write_tokens(args.output, _apply(timebase.collapse_repeats, _tokens(_inputs(args)), args.n))


def cmd_durations(args):
    lines = []
    for path in _inputs(args):
        for i, line in enumerate(_read_text(path).splitlines(), 1):
            if not line.strip():
                continue
            key, sep, rest = line.partition("\t")
            if not sep:
                key, rest = None, line
            try:
                counts = timebase.seconds_to_frames(rest.split(), args.shift)
            except DstokError as e:
                raise DataError(f"{path}: line {i}: {e}") from e
            body = " ".join(str(c) for c in counts)
            lines.append(body if key is None else f"{key}\t{body}")
    _write(args.output, "".join(l + "\n" for l in lines))


def cmd_align_downsample(args):
    tracks = _load_sourced(_inputs(args), dio.read_alignments)
    _write(args.output, dio.write_alignments(_apply(timebase.downsample_track, tracks, args.factor)))


def cmd_align_expand(args):
    tracks = _load_many(_inputs(args), dio.read_alignments)
    text = "".join(
        dio.format_frame_labels(t.utt_id, t.frame_shift_s, timebase.expand_labels(t)) + "\n" for t in tracks
    )
    _write(args.output, text)


def cmd_align_compress(args):
    tracks = []
    for path in _inputs(args):
        for i, line in enumerate(_read_text(path).splitlines(), 1):
            if not line.strip():
                continue
            try:
                utt, shift, labels = dio.parse_frame_labels(line, i)
                tracks.append(timebase.compress_labels(labels, shift, utt))
            except DstokError as e:
                raise DataError(f"{path}: line {i}: {e}") from e
    _write(args.output, dio.write_alignments(tracks))


def cmd_prosody_deltas(args):
    feats = _features(_inputs(args))
    _write(args.output, dio.write_feature_matrices(_apply(prosody.add_deltas, feats, args.orders)))


def _read_mean(path) -> np.ndarray:
    try:
        return np.array([float(x) for x in _read_text(path).split()], dtype=np.float64)
    except ValueError as e:
        raise DataError(f"{path}: {e}") from e


def cmd_cmn_stats(args):
    mean = prosody.cmn_stats(_items(_features(_inputs(args))))
    _write(args.output, "".join(repr(float(m)) + "\n" for m in mean))


def cmd_cmn_apply(args):
    mean = _read_mean(args.stats)
    feats = _features(_inputs(args))
    _write(args.output, dio.write_feature_matrices(_apply(prosody.apply_cmn, feats, mean)))


def cmd_phone_average(args):
    tracks = {t.utt_id: t for t in _load_many([args.align], dio.read_alignments)}

    def average(f):
        if f.utt_id not in tracks:
            raise DataError(f"{args.align}: no alignment for utterance {f.utt_id!r}")
        track = tracks[f.utt_id]
        return FeatureMatrix(f.utt_id, track.frame_shift_s, prosody.phone_average(f, track))

    _write(args.output, dio.write_feature_matrices(_apply(average, _features(_inputs(args)))))


def cmd_prosody_label(args):
    cb = _load(args.codebook, dio.read_codebook)

    def label(f):
        labels = prosody.prosody_labels(f.values, cb)
        return f"{f.utt_id}\t{' '.join(str(int(l)) for l in labels)}\n"

    _write(args.output, "".join(_apply(label, _features(_inputs(args)))))


def cmd_bitrate(args):
    if args.inputs or args.manifest:
        if args.rate is not None or args.vocab:
            raise UsageError("give either --rate/--vocab or token files, not both")
        report = metrics.corpus_bitrate(_items(_tokens(_inputs(args))), args.mode)
    else:
        if args.rate is None or not args.vocab:
            raise UsageError("--rate and --vocab are required without token files")
        vocabs = [v for group in args.vocab for v in group]
        report = metrics.stream_bitrate(args.rate, vocabs, args.mode)
    _emit_metric(args, report.total_bps, report.as_dict())


def _vocab_list(text: str) -> list[int]:
    try:
        vocabs = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a vocabulary list: {text!r}")
    if any(v < 1 for v in vocabs):
        raise argparse.ArgumentTypeError(f"vocabulary sizes must be >= 1: {text!r}")
    return vocabs


def _keyed_texts(path) -> dict[str, str]:
    return {key: rest for _, key, rest in dio.read_keyed_lines(_read_bytes(path))}


def _error_rate(args, unit):
    norm = metrics.TextNormalizer.preset(args.normalize)
    refs, hyps = _keyed_texts(args.ref), _keyed_texts(args.hyp)
    total = metrics.EditDistanceResult(0, 0, 0, 0)
    for key, ref in refs.items():
        if key not in hyps:
            raise DataError(f"{args.hyp}: no hypothesis for utterance {key!r}")
        fn = metrics.char_errors if unit == "cer" else metrics.word_errors
        total = total + fn(ref, hyps[key], norm)
    try:
        rate = total.rate
    except DstokError as e:
        raise DataError(f"{args.ref}: {e}") from e
    payload = {unit: rate, "substitutions": total.substitutions, "insertions": total.insertions,
               "deletions": total.deletions, "ref_len": total.ref_len, "utterances": len(refs)}
    _emit_metric(args, rate, payload, digits=6)


def cmd_cer(args):
    _error_rate(args, "cer")


def cmd_wer(args):
    _error_rate(args, "wer")


def _f0_contours(path) -> dict[str, np.ndarray]:
    data = _read_bytes(path)
    if data[:4] == dio.MAGIC_FEATURES:
        mats = _load(path, dio.read_feature_matrices)
        return {m.utt_id: m.values[:, 0].astype(np.float64) for m in mats}
    out = {}
    for i, key, rest in dio.read_keyed_lines(data):
        try:
            out[key] = np.array([float(x) for x in rest.split()], dtype=np.float64)
        except ValueError as e:
            raise DataError(f"{path}: line {i}: {e}") from e
    return out


def cmd_f0_rmse(args):
    refs, hyps = _f0_contours(args.ref), _f0_contours(args.hyp)
    ref_all, hyp_all = [], []
    for key, ref in refs.items():
        if key not in hyps:
            raise DataError(f"{args.hyp}: no contour for utterance {key!r}")
        if len(ref) != len(hyps[key]):
            raise DataError(f"{args.hyp}: utterance {key!r} has {len(hyps[key])} frames, reference has {len(ref)}")
        ref_all.append(ref)
        hyp_all.append(hyps[key])
    if not ref_all:
        raise DataError(f"{args.ref}: no contours")
    value = metrics.log_f0_rmse(np.concatenate(ref_all), np.concatenate(hyp_all))
    _emit_metric(args, value, {"log_f0_rmse": value, "utterances": len(ref_all)}, digits=6)


def cmd_stats_pairs(args):
    stats = pair_stats(_items(_tokens(_inputs(args))))
    if args.json:
        print(json.dumps(stats.as_dict(), sort_keys=True))
    else:
        for k, v in stats.as_dict().items():
            print(f"{k}\t{v}")


# -- parser --------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=_positive_int, default=1,
                        help="worker threads (never changes the output)")
    common.add_argument("--manifest", action="append", metavar="FILE",
                        help="file listing input paths, one per line")
    common.add_argument("--json", action="store_true", help="print metrics as a JSON object")

    p = _Parser(prog="dstok", description="Discrete speech token toolkit.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def add(name, fn, help, inputs="*", output=True):
        sp = sub.add_parser(name, parents=[common], help=help, description=help)
        if inputs:
            sp.add_argument("inputs", nargs=inputs, metavar="INPUT")
        if output:
            sp.add_argument("-o", "--output", help="output path (default: stdout)")
        sp.set_defaults(func=fn)
        return sp

    sp = add("kmeans-train", cmd_kmeans_train, "train a k-means codebook on feature files")
    sp.add_argument("--k", type=_positive_int, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-iters", type=_positive_int, default=100)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--groups", type=_positive_int, default=1,
                    help="split feature dims into G equal groups, one codebook (and token stream) each")

    sp = sub.add_parser("quantize", parents=[common],
                        help="assign feature frames to codebook tokens (one stream per codebook record)")
    sp.add_argument("codebook")
    sp.add_argument("inputs", nargs="*", metavar="INPUT")
    sp.add_argument("-o", "--output")
    sp.set_defaults(func=cmd_quantize)

    add("fold-build", cmd_fold_build, "build a pair-fold table from 2-stream token files")
    sp = add("fold", cmd_fold, "fold 2-stream tokens into one stream")
    sp.add_argument("--table", required=True)
    sp.add_argument("--oov", choices=["error", "reserve"], default="error")
    sp = add("unfold", cmd_unfold, "expand folded tokens back into two streams")
    sp.add_argument("--table", required=True)

    sp = add("repeat", cmd_repeat, "repeat every token frame N times")
    sp.add_argument("--n", type=_positive_int, required=True)
    sp = add("collapse", cmd_collapse, "undo repeat: keep one frame per constant block")
    sp.add_argument("--n", type=_positive_int, required=True)

    sp = add("durations", cmd_durations, "convert durations in seconds to frame counts")
    sp.add_argument("--shift", type=_rational, required=True, help="frame shift in seconds, e.g. 1/86")

    sp = add("align-downsample", cmd_align_downsample, "coarsen alignments by an integer factor")
    sp.add_argument("--factor", type=_positive_int, required=True)
    add("align-expand", cmd_align_expand, "alignments to per-frame labels")
    add("align-compress", cmd_align_compress, "per-frame labels to alignments")

    sp = add("prosody-deltas", cmd_prosody_deltas, "append first/second backward differences")
    sp.add_argument("--orders", type=int, choices=[0, 1, 2], default=2)
    add("cmn-stats", cmd_cmn_stats, "per-dimension corpus mean")
    sp = add("cmn-apply", cmd_cmn_apply, "subtract corpus mean")
    sp.add_argument("--stats", required=True)
    sp = add("phone-average", cmd_phone_average, "average features over aligned phones")
    sp.add_argument("--align", required=True)
    sp = add("prosody-label", cmd_prosody_label, "nearest-centroid label per phone vector")
    sp.add_argument("--codebook", required=True)

    sp = add("bitrate", cmd_bitrate, "bitrate of --rate/--vocab streams or of token files", output=False)
    sp.add_argument("--mode", choices=["exact", "ceil"], default="exact")
    sp.add_argument("--rate", type=_rational)
    sp.add_argument("--vocab", type=_vocab_list, action="append",
                    help="vocabulary size(s), comma-separated or repeated")

    for name, fn in (("cer", cmd_cer), ("wer", cmd_wer)):
        sp = add(name, fn, f"{name.upper()} between keyed reference and hypothesis files",
                 inputs=None, output=False)
        sp.add_argument("ref")
        sp.add_argument("hyp")
        sp.add_argument("--normalize", choices=["none", "basic", "strict"], default="basic")

    sp = add("f0-rmse", cmd_f0_rmse, "log-F0 RMSE over jointly voiced frames", inputs=None, output=False)
    sp.add_argument("ref")
    sp.add_argument("hyp")

    sp = sub.add_parser("stats", help="corpus statistics")
    stats_sub = sp.add_subparsers(dest="stats_command", parser_class=_Parser, required=True)
    sp = stats_sub.add_parser("pairs", parents=[common], help="unique-pair report for 2-stream tokens")
    sp.add_argument("inputs", nargs="*", metavar="INPUT")
    sp.set_defaults(func=cmd_stats_pairs)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        args.func(args)
    except UsageError as e:
        print(f"dstok {args.command}: error: {e}", file=sys.stderr)
        return 1
    except DataError as e:
        print(f"dstok {args.command}: {e}", file=sys.stderr)
        return 2
    except DstokError as e:
        print(f"dstok {args.command}: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
