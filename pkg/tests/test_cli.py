import json
import shutil
import subprocess
import sys

import numpy as np
import pytest

from dstok import io as dio
from dstok.cli import main
from dstok.core import AlignmentTrack, FeatureMatrix, TokenStream
from dstok.fold import build_pair_vocab, fold, unfold
from dstok.prosody import add_deltas, apply_cmn, cmn_stats
from dstok.timebase import collapse_repeats, repeat_tokens

from conftest import random_two_stream


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def corpus(tmp_path, rng):
    streams = [random_two_stream(rng, f"u{i}", 200, 6, 5) for i in range(3)]
    path = tmp_path / "two.dst"
    dio.write_token_streams(streams, path)
    return streams, path


@pytest.fixture
def feats(tmp_path, rng):
    mats = [FeatureMatrix(f"u{i}", "1/50", rng.normal(size=(40, 3))) for i in range(2)]
    path = tmp_path / "feats.dsf"
    dio.write_feature_matrices(mats, path)
    return mats, path


def test_bitrate_examples(capsys):
    assert run(capsys, "bitrate", "--mode", "exact", "--rate", "25/1", "--vocab", "1024")[1] == "250.000\n"
    assert run(capsys, "bitrate", "--mode", "ceil", "--rate", "50/1", "--vocab", "2000")[1] == "550.000\n"
    code, out, _ = run(capsys, "bitrate", "--rate", "50", "--vocab", "320,320", "--json")
    assert code == 0
    payload = json.loads(out)
    assert payload["total_bps"] == pytest.approx(100 * np.log2(320))
    assert payload["mode"] == "exact"


def test_usage_errors_exit_1(capsys):
    code, _, err = run(capsys, "bitrate", "--rate", "25", "--vocab", "1024", "--bogus")
    assert code == 1 and "--bogus" in err
    code, _, err = run(capsys, "bitrate", "--rate", "25")
    assert code == 1 and "--vocab" in err
    code, _, err = run(capsys, "repeat", "--n", "0", "x")
    assert code == 1 and "--n" in err
    assert run(capsys)[0] == 1
    assert run(capsys, "no-such-command")[0] == 1
    assert run(capsys, "fold-build")[0] == 1


def test_data_errors_exit_2_and_name_file(capsys, tmp_path):
    bad = tmp_path / "bad.dsf"
    bad.write_bytes(b"DSF1\x01")
    code, _, err = run(capsys, "cmn-stats", bad)
    assert code == 2 and "bad.dsf" in err and "offset" in err
    code, _, err = run(capsys, "cmn-stats", tmp_path / "missing.dsf")
    assert code == 2 and "missing.dsf" in err


def test_fold_unfold_match_library(capsys, tmp_path, corpus):
    streams, path = corpus
    table_path, folded_path, back_path = tmp_path / "t.dsp", tmp_path / "f.dst", tmp_path / "b.dst"
    assert run(capsys, "fold-build", path, "-o", table_path)[0] == 0
    table = build_pair_vocab(streams)
    assert table_path.read_bytes() == dio.write_pair_table(table)
    assert run(capsys, "fold", "--table", table_path, path, "-o", folded_path)[0] == 0
    folded = [fold(s, table) for s in streams]
    assert folded_path.read_bytes() == dio.write_token_streams(folded)
    assert run(capsys, "unfold", "--table", table_path, folded_path, "-o", back_path)[0] == 0
    assert back_path.read_bytes() == dio.write_token_streams([unfold(f, table) for f in folded])
    assert back_path.read_bytes() == path.read_bytes()


def test_fold_oov(capsys, tmp_path):
    train = tmp_path / "train.txt"
    dio.write_token_text([TokenStream("a", 50, (4, 4), [[0, 0], [1, 1]])], train)
    other = tmp_path / "other.txt"
    dio.write_token_text([TokenStream("b", 50, (4, 4), [[0, 0], [3, 3]])], other)
    run(capsys, "fold-build", train, "-o", tmp_path / "t.dsp")
    code, _, err = run(capsys, "fold", "--table", tmp_path / "t.dsp", other)
    assert code == 2 and "other.txt" in err and "'b'" in err
    code, out, _ = run(capsys, "fold", "--table", tmp_path / "t.dsp", "--oov", "reserve", other)
    assert code == 0 and out == "b\t50/1\t3\t0 2\n"


def test_repeat_collapse_match_library(capsys, tmp_path, corpus):
    streams, path = corpus
    rep = tmp_path / "r.dst"
    assert run(capsys, "repeat", "--n", 3, path, "-o", rep)[0] == 0
    assert rep.read_bytes() == dio.write_token_streams([repeat_tokens(s, 3) for s in streams])
    back = tmp_path / "c.dst"
    assert run(capsys, "collapse", "--n", 3, rep, "-o", back)[0] == 0
    assert [collapse_repeats(repeat_tokens(s, 3), 3) for s in streams] == dio.read_token_streams(back)
    assert back.read_bytes() == path.read_bytes()
    code, _, err = run(capsys, "collapse", "--n", 7, path)
    assert code == 2


def test_text_token_output(capsys, tmp_path):
    src = tmp_path / "x.txt"
    src.write_text("u1\t25/1\t1024\t3 9\n")
    code, out, _ = run(capsys, "repeat", "--n", 2, src)
    assert code == 0 and out == "u1\t50/1\t1024\t3 3 9 9\n"


def test_manifest(capsys, tmp_path, corpus):
    _, path = corpus
    manifest = tmp_path / "list.txt"
    manifest.write_text(f"# corpus\n{path}\n\n{path}\n")
    code, out, _ = run(capsys, "stats", "pairs", "--manifest", manifest, "--json")
    direct = run(capsys, "stats", "pairs", path, path, "--json")[1]
    assert code == 0 and out == direct
    assert json.loads(out)["total_frames"] == 1200


def test_bitrate_from_token_files(capsys, tmp_path):
    toks = tmp_path / "t.txt"
    dio.write_token_text([TokenStream("a", 25, (1024,), [1, 2, 3])], toks)
    assert run(capsys, "bitrate", toks)[1] == "250.000\n"
    assert run(capsys, "bitrate", toks, "--rate", "25")[0] == 1


def test_durations(capsys, tmp_path):
    src = tmp_path / "d.txt"
    src.write_text("a\t0.25 0.25 0.5\n1.0\n")
    code, out, _ = run(capsys, "durations", "--shift", "1/86", src)
    assert code == 0 and out == "a\t22 21 43\n86\n"
    src.write_text("a\t0.1 -0.1\n")
    code, _, err = run(capsys, "durations", "--shift", "1/86", src)
    assert code == 2 and "line 1" in err


def test_alignment_commands(capsys, tmp_path):
    src = tmp_path / "a.txt"
    dio.write_alignments([AlignmentTrack("u", "1/100", [("sil", 3), ("a", 4), ("b", 1)])], src)
    assert run(capsys, "align-downsample", "--factor", 2, src)[1] == "u\t1/50\tsil:2 a:2\n"
    code, out, _ = run(capsys, "align-expand", src, "-o", tmp_path / "f.txt")
    assert (tmp_path / "f.txt").read_text() == "u\t1/100\tsil sil sil a a a a b\n"
    assert run(capsys, "align-compress", tmp_path / "f.txt")[1] == src.read_text()


def test_prosody_commands(capsys, tmp_path, feats):
    mats, path = feats
    d = tmp_path / "d.dsf"
    assert run(capsys, "prosody-deltas", path, "-o", d)[0] == 0
    with_deltas = [add_deltas(m) for m in mats]
    assert d.read_bytes() == dio.write_feature_matrices(with_deltas)
    stats = tmp_path / "mean.txt"
    assert run(capsys, "cmn-stats", d, "-o", stats)[0] == 0
    mean = cmn_stats(with_deltas)
    assert [float(x) for x in stats.read_text().split()] == mean.tolist()
    normed = tmp_path / "n.dsf"
    assert run(capsys, "cmn-apply", "--stats", stats, d, "-o", normed)[0] == 0
    assert normed.read_bytes() == dio.write_feature_matrices([apply_cmn(m, mean) for m in with_deltas])

    align = tmp_path / "al.txt"
    dio.write_alignments([AlignmentTrack("u0", "1/50", [("a", 30), ("b", 10)]),
                          AlignmentTrack("u1", "1/50", [("c", 40)])], align)
    avg = tmp_path / "avg.dsf"
    assert run(capsys, "phone-average", "--align", align, normed, "-o", avg)[0] == 0
    avgs = dio.read_feature_matrices(avg)
    assert [m.frames for m in avgs] == [2, 1]

    cb = tmp_path / "cb.dsc"
    assert run(capsys, "kmeans-train", "--k", 2, avg, "-o", cb)[0] == 0
    code, out, _ = run(capsys, "prosody-label", "--codebook", cb, avg)
    assert code == 0
    lines = out.splitlines()
    assert [l.split("\t")[0] for l in lines] == ["u0", "u1"]
    assert all(int(x) in (0, 1) for l in lines for x in l.split("\t")[1].split())

    short = tmp_path / "short.txt"
    dio.write_alignments([AlignmentTrack("u0", "1/50", [("a", 3)])], short)
    code, _, err = run(capsys, "phone-average", "--align", short, normed)
    assert code == 2 and "u0" in err


def test_cer_wer(capsys, tmp_path):
    ref, hyp = tmp_path / "ref.txt", tmp_path / "hyp.txt"
    ref.write_text("u1\tthe cat sat\nu2\tHello\n")
    hyp.write_text("u2\thello\nu1\tthe hat sat\n")
    assert run(capsys, "wer", ref, hyp)[1] == f"{1 / 4:.6f}\n"
    assert run(capsys, "cer", ref, hyp)[1] == f"{1 / 16:.6f}\n"
    assert run(capsys, "wer", ref, hyp, "--normalize", "none")[1] == f"{2 / 4:.6f}\n"
    payload = json.loads(run(capsys, "wer", ref, hyp, "--json")[1])
    assert payload["substitutions"] == 1 and payload["ref_len"] == 4
    hyp.write_text("u1\tthe cat sat\n")
    code, _, err = run(capsys, "wer", ref, hyp)
    assert code == 2 and "u2" in err


def test_f0_rmse(capsys, tmp_path):
    ref, hyp = tmp_path / "r.txt", tmp_path / "h.txt"
    ref.write_text("a\t100 0 200\n")
    hyp.write_text(f"a\t{100 * np.e!r} 50 0\n")
    assert run(capsys, "f0-rmse", ref, hyp)[1] == "1.000000\n"
    hyp.write_text("a\t100 100\n")
    assert run(capsys, "f0-rmse", ref, hyp)[0] == 2
    binref = tmp_path / "r.dsf"
    dio.write_feature_matrix(FeatureMatrix("a", "1/50", [[100.0], [0.0], [200.0]]), binref)
    hyp.write_text("a\t100 0 200\n")
    assert run(capsys, "f0-rmse", binref, hyp)[1] == "0.000000\n"


def test_pipeline_and_thread_invariance(capsys, tmp_path, rng):
    mats = [FeatureMatrix(f"u{i}", "1/50", rng.normal(size=(300, 4))) for i in range(3)]
    feats = tmp_path / "f.dsf"
    dio.write_feature_matrices(mats, feats)
    outputs = []
    for threads in (1, 4):
        d = tmp_path / f"t{threads}"
        d.mkdir()
        common = ["--threads", threads]
        assert run(capsys, "kmeans-train", "--k", 8, "--seed", 3, feats, "-o", d / "cb.dsc", *common)[0] == 0
        assert run(capsys, "quantize", d / "cb.dsc", feats, "-o", d / "tok.dst", *common)[0] == 0
        assert run(capsys, "repeat", "--n", 1, d / "tok.dst", "-o", d / "tok1.dst")[0] == 0
        outputs.append([(d / n).read_bytes() for n in ("cb.dsc", "tok.dst", "tok1.dst")])
    assert outputs[0] == outputs[1]
    code, out, _ = run(capsys, "bitrate", tmp_path / "t1" / "tok.dst")
    assert code == 0 and out == "150.000\n"


@pytest.mark.skipif(shutil.which("dstok") is None, reason="console script not installed")
def test_console_script():
    p = subprocess.run(["dstok", "bitrate", "--rate", "25/1", "--vocab", "1024"],
                       capture_output=True, text=True)
    assert p.returncode == 0 and p.stdout == "250.000\n"


def test_module_entry():
    p = subprocess.run([sys.executable, "-m", "dstok.cli", "bitrate", "--mode", "ceil",
                        "--rate", "50", "--vocab", "2000"], capture_output=True, text=True)
    assert p.returncode == 0 and p.stdout == "550.000\n"


def test_grouped_pipeline(capsys, tmp_path, rng):
    feats = tmp_path / "f.dsf"
    dio.write_feature_matrices([FeatureMatrix("u", "1/50", rng.normal(size=(200, 4)))], feats)
    assert run(capsys, "kmeans-train", "--k", 5, "--groups", 2, feats, "-o", tmp_path / "cb.dsc")[0] == 0
    assert len(dio.read_codebooks(tmp_path / "cb.dsc")) == 2
    assert run(capsys, "quantize", tmp_path / "cb.dsc", feats, "-o", tmp_path / "t.dst")[0] == 0
    (ts,) = dio.read_token_streams(tmp_path / "t.dst")
    assert ts.vocab_sizes == (5, 5)
    assert run(capsys, "kmeans-train", "--k", 5, "--groups", 3, feats)[0] == 2
