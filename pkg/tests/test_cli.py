import re

import numpy as np
import pytest

from dualprox import dataio
from dualprox.cli import main


def read_summary(path):
    pairs = dict(line.split("=", 1) for line in path.read_text().splitlines())
    return pairs


def mask_elapsed(csv_bytes):
    """Blank the wall-clock column; timing is excluded from determinism."""
    lines = csv_bytes.decode().splitlines()
    out = []
    for line in lines:
        if line.startswith("#") or line.startswith("iter,"):
            out.append(line)
            continue
        cells = line.split(",")
        cells[1] = "T"
        out.append(",".join(cells))
    return "\n".join(out)


def test_denoise_synthetic_writes_outputs(tmp_path):
    # 32x32 is the smallest size where the default penalty weight keeps
    # the block structure rather than merging it away
    out = tmp_path / "run"
    code = main([
        "denoise", "--synthetic", "32x32", "--sigma", "0.05", "--seed", "1",
        "--max-iters", "60", "--out-dir", str(out),
    ])
    assert code == 0
    assert (out / "trace.csv").exists()
    assert (out / "denoised.pgm").exists()
    assert (out / "noisy.pgm").exists()
    summary = read_summary(out / "summary.txt")
    assert float(summary["psnr_out"]) > float(summary["psnr_in"])
    header = (out / "trace.csv").read_text().splitlines()
    assert header[0].startswith("# denoise")
    assert header[1] == "iter,elapsed_s,objective,lagrangian,lyapunov,dx_norm,dy_norm,kkt_x,kkt_y"


def test_denoise_zero_iterations_outputs_noisy_unchanged(tmp_path):
    out = tmp_path / "run"
    code = main([
        "denoise", "--synthetic", "16x16", "--sigma", "0.05", "--seed", "1",
        "--max-iters", "0", "--out-dir", str(out),
    ])
    assert code == 0
    noisy = (out / "noisy.pgm").read_bytes()
    denoised = (out / "denoised.pgm").read_bytes()
    assert noisy == denoised
    assert read_summary(out / "summary.txt")["iters"] == "0"


def test_denoise_sigma_zero_sentinel_and_trace(tmp_path):
    out = tmp_path / "run"
    code = main([
        "denoise", "--synthetic", "16x16", "--sigma", "0", "--seed", "1",
        "--max-iters", "500", "--out-dir", str(out),
    ])
    assert code == 0
    summary = read_summary(out / "summary.txt")
    assert summary["psnr_in"] == "inf"
    objs = [
        float(line.split(",")[2])
        for line in (out / "trace.csv").read_text().splitlines()[2:]
    ]
    rises = sum(
        1 for a, b in zip(objs, objs[1:]) if b > a + 1e-10 * (1 + abs(a))
    )
    assert rises <= 0.05 * (len(objs) - 1)


def test_denoise_input_file_roundtrip(tmp_path):
    src = tmp_path / "src.pgm"
    img = dataio.ImageBuffer(8, 8, np.tile(np.repeat([0.2, 0.8], 4), 8))
    dataio.write_pgm(src, img)
    out = tmp_path / "run"
    code = main([
        "denoise", "--input", str(src), "--sigma", "0.03", "--seed", "2",
        "--max-iters", "40", "--out-dir", str(out),
    ])
    assert code == 0


def test_denoise_requires_source(tmp_path):
    assert main(["denoise", "--out-dir", str(tmp_path / "x")]) == 2


def test_denoise_determinism_byte_identical(tmp_path):
    args = [
        "denoise", "--synthetic", "16x16", "--sigma", "0.05", "--seed", "3",
        "--max-iters", "50",
    ]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out-dir", str(out1)]) == 0
    assert main(args + ["--out-dir", str(out2)]) == 0
    assert (out1 / "denoised.pgm").read_bytes() == (out2 / "denoised.pgm").read_bytes()
    assert (out1 / "noisy.pgm").read_bytes() == (out2 / "noisy.pgm").read_bytes()
    assert mask_elapsed((out1 / "trace.csv").read_bytes()) == mask_elapsed(
        (out2 / "trace.csv").read_bytes()
    )


def test_lasso_synthetic_writes_per_seed_and_aggregate(tmp_path):
    out = tmp_path / "l"
    code = main([
        "lasso", "--synthetic", "60,8", "--estimator", "svrg", "--seeds", "3",
        "--batch", "2", "--max-epochs", "5", "--normalize-rows",
        "--out-dir", str(out),
    ])
    assert code == 0
    for seed in range(3):
        assert (out / f"seed_{seed}_trace.csv").exists()
    agg = (out / "aggregate.csv").read_text().splitlines()
    assert agg[1] == "iter,comp_evals,mean_objective,mean_lagrangian_s,mean_lyapunov_s,mean_dx,mean_dy,seeds_ok"
    assert agg[2].endswith(",3")  # seeds_ok column
    summary = read_summary(out / "summary.txt")
    assert summary["seeds_ok"] == "3"


def test_lasso_full_estimator_matches_full_batch_svrg(tmp_path):
    base = [
        "lasso", "--synthetic", "40,6", "--seeds", "1", "--max-epochs", "6",
        "--normalize-rows",
    ]
    out1, out2 = tmp_path / "full", tmp_path / "svrg"
    assert main(base + ["--estimator", "full", "--out-dir", str(out1)]) == 0
    assert main(base + ["--estimator", "svrg", "--batch", "40", "--out-dir", str(out2)]) == 0
    t1 = mask_elapsed((out1 / "seed_0_trace.csv").read_bytes())
    t2 = mask_elapsed((out2 / "seed_0_trace.csv").read_bytes())
    # identical sequences except the flag echo line
    assert t1.splitlines()[1:] == t2.splitlines()[1:]


def test_lasso_libsvm_input(tmp_path):
    data = tmp_path / "d.txt"
    rng = np.random.default_rng(0)
    lines = []
    for i in range(30):
        feats = " ".join(f"{j + 1}:{rng.standard_normal():.6f}" for j in range(4))
        label = 1 if rng.uniform() > 0.5 else -1
        lines.append(f"{label} {feats}")
    data.write_text("\n".join(lines) + "\n")
    out = tmp_path / "run"
    code = main([
        "lasso", "--data", str(data), "--estimator", "saga", "--seeds", "2",
        "--batch", "3", "--max-epochs", "4", "--normalize-rows",
        "--out-dir", str(out),
    ])
    assert code == 0


def test_lasso_v_file_and_mismatch(tmp_path):
    vfile = tmp_path / "v.csv"
    np.savetxt(vfile, np.zeros((3, 3)), delimiter=",")
    out = tmp_path / "run"
    code = main([
        "lasso", "--synthetic", "30,4", "--v-file", str(vfile),
        "--seeds", "1", "--max-epochs", "2", "--out-dir", str(out),
    ])
    assert code == 2  # 3x3 graph vs 4 features


def test_prox_check_passes_for_each_kind():
    assert main(["prox-check", "--reg", "l1", "--lam", "2", "--points", "100"]) == 0
    assert main(["prox-check", "--reg", "l0", "--lam", "0.1", "--points", "100"]) == 0
    assert main(["prox-check", "--reg", "lp", "--lam", "1", "--p", "0.5", "--r", "1",
                 "--points", "100"]) == 0
    assert main(["prox-check", "--reg", "scad", "--lam", "1", "--gamma", "3",
                 "--r", "0.5", "--points", "100"]) == 0


def test_prox_check_rejects_invalid_gamma():
    assert main(["prox-check", "--reg", "scad", "--lam", "1", "--gamma", "2",
                 "--r", "0.5"]) == 2


def test_spectra_identity(capsys):
    assert main(["spectra", "--op", "identity", "--n", "4"]) == 0
    out = capsys.readouterr().out
    assert "op_norm: 1" in out
    assert "surjective: yes" in out


def test_spectra_gradient2d_prints_caveat(capsys):
    assert main(["spectra", "--op", "gradient2d", "--height", "8", "--width", "8"]) == 0
    out = capsys.readouterr().out
    assert "hat_lambda: 0" in out
    assert "surjective: no" in out
    assert "scalar approximation" in out


def test_spectra_stacked_identity_over_identity(tmp_path, capsys):
    vfile = tmp_path / "v.csv"
    np.savetxt(vfile, np.eye(3), delimiter=",")
    assert main(["spectra", "--op", "stacked", "--csv", str(vfile)]) == 0
    out = capsys.readouterr().out
    # gram of [I; I] is [[I, I], [I, I]]: singular
    assert "min_eig_gram: 0" in out
    assert "surjective: no" in out


def test_unknown_subcommand_usage_error():
    assert main(["frobnicate"]) == 2


def test_spectra_dense_from_csv(tmp_path, capsys):
    mat = tmp_path / "m.csv"
    mat.write_text("2.0,0.0\n0.0,1.0\n")
    assert main(["spectra", "--op", "dense", "--csv", str(mat)]) == 0
    out = capsys.readouterr().out
    assert "op_norm: 2" in out
    assert "surjective: yes" in out


def test_help_lists_defaults(capsys):
    assert main(["denoise", "--help"]) == 0
    out = capsys.readouterr().out
    assert "default: 0.1" in out   # penalty weight
    assert "default: -1.0" in out  # lower gradient bound
