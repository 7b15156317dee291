import json
import subprocess
import sys

import numpy as np
import pytest

from ecgalign import read_array
from ecgalign.cli import ConfigError, RunConfig, main, run_align, run_bench, run_synth


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("corpus")
    run_synth(d, 10, "array", bpm=50, bpm_max=140, jitter=0.02, snr_db=20, seed=3)
    return d


def outputs(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir()) if p.name != "summary.json"}


def test_synth_writes_requested_formats(tmp_path):
    for fmt, ext in (("wfdb", ".hea"), ("csv", ".csv"), ("array", ".npy")):
        paths = run_synth(tmp_path / fmt, 2, fmt, seed=1)
        assert [p.suffix for p in paths] == [ext, ext]


def test_worker_count_does_not_change_bytes(corpus, tmp_path):
    runs = {}
    for w in (1, 3):
        cfg = RunConfig(inputs=[str(corpus)], input_format="array", strategy="hrc",
                        workers=w, out=str(tmp_path / f"w{w}"))
        assert run_align(cfg)["exit_code"] == 0
        runs[w] = outputs(tmp_path / f"w{w}")
    assert len(runs[1]) == 10 and runs[1] == runs[3]


def test_input_order_does_not_change_content(corpus, tmp_path):
    files = sorted(corpus.glob("*.npy"))
    a = RunConfig(input_format="array", out=str(tmp_path / "a"))
    b = RunConfig(input_format="array", out=str(tmp_path / "b"))
    run_align(a, files)
    run_align(b, files[::-1])
    assert outputs(tmp_path / "a") == outputs(tmp_path / "b")


def test_corrupt_record_is_isolated(corpus, tmp_path):
    src = tmp_path / "in"
    src.mkdir()
    for p in sorted(corpus.glob("*.npy"))[:9]:
        (src / p.name).write_bytes(p.read_bytes())
    (src / "broken.npy").write_bytes(b"\x93NUMPY\x01\x00garbage")
    code = main(["align", "--input", str(src), "--format", "array", "--out", str(tmp_path / "o"),
                 "--workers", "2"])
    summary = json.loads((tmp_path / "o" / "summary.json").read_text())
    assert code == 2 and summary["succeeded"] == 9 and len(summary["failures"]) == 1
    assert summary["failures"][0]["record"] == "broken"
    assert len(outputs(tmp_path / "o")) == 9


def test_total_failure_exit_code(tmp_path):
    (tmp_path / "x.npy").write_bytes(b"nope")
    assert main(["align", "--input", str(tmp_path / "x.npy"), "--fs", "500",
                 "--out", str(tmp_path / "o")]) == 3


def test_config_errors_exit_1(tmp_path, corpus):
    assert main(["align", "--input", str(tmp_path / "missing*")]) == 1
    assert main(["align", "--input", str(corpus), "--strategy", "spline"]) == 1
    assert main(["align", "--input", str(corpus), "--workers", "0"]) == 1
    assert main(["align", "--input", str(corpus), "--bpm", "60", "--offset", "900"]) == 1
    assert main(["align", "--input", str(corpus), "--strategy", "none", "--output-kind", "full"]) == 1
    assert main(["frobnicate"]) == 1


def test_config_file_and_flag_override(tmp_path, corpus):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text(f"# batch settings\ninput = {corpus}\nformat = array\nstrategy = hrc\n"
                        f"output-kind = median\nout = {tmp_path / 'from_file'}\nout_format = csv\n")
    assert main(["align", "--config", str(cfg_file), "--strategy", "linear"]) == 0
    files = sorted((tmp_path / "from_file").glob("*.csv"))
    assert len(files) == 10
    header = files[0].read_text().splitlines()[0]
    assert header.split(",")[1] == "II"
    rows = files[0].read_text().splitlines()[1:]
    assert len(rows) == 500  # median beat at the default 60 bpm template
    (tmp_path / "bad.cfg").write_text("colour = blue\n")
    assert main(["align", "--config", str(tmp_path / "bad.cfg")]) == 1


def test_median_subcommand_and_none_strategy(tmp_path, corpus):
    assert main(["median", "--input", str(corpus), "--format", "array", "--strategy", "none",
                 "--out", str(tmp_path / "m")]) == 0
    shapes = {read_array(p).shape[0] for p in (tmp_path / "m").glob("*.npy")}
    assert shapes == {12}


def test_hrc_flags_reach_alignment(tmp_path, corpus):
    base = ["align", "--input", str(corpus), "--format", "array", "--strategy", "hrc"]
    assert main(base + ["--out", str(tmp_path / "a")]) == 0
    assert main(base + ["--out", str(tmp_path / "b"), "--hrc-fmax", "0.5", "--hrc-ap", "0.003",
                        "--hrc-bp", "0.1", "--hrc-at", "0.002", "--hrc-bt", "0.5"]) == 0
    assert outputs(tmp_path / "a") != outputs(tmp_path / "b")
    assert main(base + ["--out", str(tmp_path / "c"), "--hrc-fmax", "1.5"]) == 1


def test_template_flags(tmp_path, corpus):
    assert main(["align", "--input", str(corpus), "--format", "array", "--duration", "8",
                 "--bpm", "75", "--offset", "100", "--out", str(tmp_path / "t")]) == 0
    arr = read_array(next((tmp_path / "t").glob("*.npy")))
    assert arr.shape == (12, 4000)


def test_bench_report(tmp_path, corpus):
    cfg = RunConfig(inputs=[str(corpus)], input_format="array")
    rows = run_bench(cfg, (1, 2), repeats=3, report=tmp_path / "bench.csv")
    assert [r["workers"] for r in rows] == [1, 2]
    assert all(r["median_s"] > 0 and len(r["times"]) == 3 and r["identical"] for r in rows)
    lines = (tmp_path / "bench.csv").read_text().splitlines()
    assert lines[0] == "workers,median_s,identical" and len(lines) == 3
    with pytest.raises(ConfigError):
        run_bench(RunConfig(inputs=[str(tmp_path / "nothing")]))


def test_bench_cli(tmp_path, corpus):
    assert main(["bench", "--input", str(corpus), "--format", "array", "--worker-counts", "1,2",
                 "--repeats", "1", "--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "b" / "bench.csv").exists()
    assert main(["bench", "--input", str(tmp_path / "empty"), "--out", str(tmp_path / "b")]) == 1


def test_analyze_subcommands(tmp_path, capsys):
    from ecgalign import write_array
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(0, 1, (20, 1000)), rng.normal(3, 1, (20, 1000))])
    y = np.repeat([0, 1], 20)
    write_array(tmp_path / "X.npy", X)
    np.savetxt(tmp_path / "y.csv", y, fmt="%d")
    out = str(tmp_path / "res")

    def run(*args):
        capsys.readouterr()
        assert main(["analyze", *args, "--out", out]) == 0
        return json.loads(capsys.readouterr().out)

    assert len(run("pca", "--input", str(tmp_path / "X.npy"), "--k", "2")["explained_variance"]) == 2
    assert len(run("pca", "--input", str(tmp_path / "X.npy"), "--wave", "QRS")["explained_variance"]) == 1
    assert sorted(set(run("kmeans", "--input", str(tmp_path / "X.npy"), "--k", "2")["labels"])) == [0, 1]
    assert len(run("ward", "--input", str(tmp_path / "X.npy"), "--k", "2")["labels"]) == 40
    np.savetxt(tmp_path / "pred.csv", y[::-1], fmt="%d")
    assert run("vmeasure", "--input", str(tmp_path / "pred.csv"), "--labels", str(tmp_path / "y.csv"))["v_measure"] == 1.0
    np.savetxt(tmp_path / "p.csv", np.full(40, 0.9))
    assert run("ece", "--input", str(tmp_path / "p.csv"), "--labels", str(tmp_path / "y.csv"))["ece"] == pytest.approx(0.4)
    res = run("gpi", "--input", str(tmp_path / "X.npy"), "--labels", str(tmp_path / "y.csv"),
              "--train", str(tmp_path / "X.npy"), "--train-labels", str(tmp_path / "y.csv"),
              "--n-repeats", "2")
    assert res["baseline_auc"] == 1.0
    assert (tmp_path / "res" / "importance.csv").read_text().count("\n") == 2 * 19 + 1
    assert main(["analyze", "ece", "--input", str(tmp_path / "p.csv"), "--out", out]) == 1


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "ecgalign", "synth", "--count", "1", "--format", "csv",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 0 and json.loads(res.stdout)["written"] == 1
