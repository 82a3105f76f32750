import os

from sumformer.cli import (
    EXIT_CONFIG,
    EXIT_OK,
    EXIT_VERIFY_FAILED,
    main,
    read_config_file,
)

FAST_VERIFY = [
    "--n", "2,3", "--d", "1",
]


def _read(path):
    with open(path) as fh:
        return fh.read()


def test_bench_writes_scaling_csv(tmp_path):
    out = str(tmp_path / "bench")
    assert main(["bench", "--out", out]) == EXIT_OK
    lines = _read(os.path.join(out, "bench.csv")).strip().splitlines()
    assert lines[0] == "variant,n,d_model,k,macs"
    rows = [ln.split(",") for ln in lines[1:]]
    by_variant = {}
    for variant, n, _, _, macs in rows:
        by_variant.setdefault(variant, []).append(int(macs))
    for a, b in zip(by_variant["standard"], by_variant["standard"][1:]):
        assert 3.6 <= b / a <= 4.4
    for variant in ("linformer", "performer"):
        for a, b in zip(by_variant[variant], by_variant[variant][1:]):
            assert 1.8 <= b / a <= 2.2


def test_train_zero_epochs_single_row(tmp_path):
    out = str(tmp_path / "t0")
    code = main([
        "train", "--out", out, "--epochs", "0", "--points", "20",
        "--d-latent", "4", "--target", "quadratic_sum",
    ])
    assert code == EXIT_OK
    lines = _read(os.path.join(out, "curve.csv")).strip().splitlines()
    assert lines[0] == "epoch,split,metric,value"
    assert len(lines) == 2
    assert lines[1].startswith("0,val,rel_l2,")


def test_train_reruns_are_byte_identical(tmp_path):
    args = ["train", "--epochs", "5", "--points", "30", "--d-latent", "4",
            "--target", "quadratic_sum", "--seed", "3"]
    out_a, out_b = str(tmp_path / "a"), str(tmp_path / "b")
    assert main(args + ["--out", out_a]) == EXIT_OK
    assert main(args + ["--out", out_b]) == EXIT_OK
    assert _read(os.path.join(out_a, "curve.csv")) == _read(os.path.join(out_b, "curve.csv"))
    assert _read(os.path.join(out_a, "manifest.txt")) == _read(os.path.join(out_b, "manifest.txt"))


def test_train_curve_has_expected_cadence(tmp_path):
    out = str(tmp_path / "cadence")
    assert main([
        "train", "--out", out, "--epochs", "20", "--points", "30",
        "--d-latent", "4", "--target", "quadratic_sum",
    ]) == EXIT_OK
    lines = _read(os.path.join(out, "curve.csv")).strip().splitlines()[1:]
    val_epochs = [int(ln.split(",")[0]) for ln in lines if ",val," in ln]
    assert val_epochs == [0, 5, 10, 15, 20]


def test_train_200_epoch_curve_has_at_least_40_points(tmp_path):
    out = str(tmp_path / "long")
    assert main([
        "train", "--out", out, "--epochs", "200", "--points", "40",
        "--d-latent", "2", "--target", "quadratic_sum",
    ]) == EXIT_OK
    lines = _read(os.path.join(out, "curve.csv")).strip().splitlines()[1:]
    val_rows = [ln for ln in lines if ",val," in ln]
    assert len(val_rows) >= 40


def test_sweep_single_cell(tmp_path):
    out = str(tmp_path / "s1")
    code = main([
        "sweep", "--out", out, "--epochs", "2", "--points", "20",
        "--d", "1", "--d-latent", "4", "--seed", "0", "--target", "quadratic_sum",
    ])
    assert code == EXIT_OK
    lines = _read(os.path.join(out, "sweep.csv")).strip().splitlines()
    assert lines[0] == "d,d_prime,seed,best_val_err,dprime_formula"
    assert len(lines) == 2


def test_sweep_grid_and_formula_column(tmp_path):
    out = str(tmp_path / "s2")
    code = main([
        "sweep", "--out", out, "--epochs", "1", "--points", "20",
        "--d", "1,2", "--d-latent", "2,4,8", "--seed", "0,1", "--target", "quadratic_sum",
    ])
    assert code == EXIT_OK
    lines = _read(os.path.join(out, "sweep.csv")).strip().splitlines()[1:]
    assert len(lines) == 12  # 2 d x 3 d' x 2 seeds
    formulas = {(int(r[0]), int(r[4])) for r in (ln.split(",") for ln in lines)}
    assert formulas == {(1, 3), (2, 9)}


def test_unknown_config_key_rejected_before_output(tmp_path):
    config = tmp_path / "bad.cfg"
    config.write_text("bogus_key = 1\n")
    out = str(tmp_path / "never")
    code = main(["train", "--config", str(config), "--out", out])
    assert code == EXIT_CONFIG
    assert not os.path.exists(out)


def test_unknown_target_rejected(tmp_path):
    out = str(tmp_path / "never2")
    code = main(["train", "--target", "nope", "--out", out, "--epochs", "1", "--points", "10"])
    assert code == EXIT_CONFIG
    assert not os.path.exists(out)


def test_config_file_and_flag_precedence(tmp_path):
    config = tmp_path / "cfg"
    config.write_text("epochs = 1\npoints = 20\ntarget = quadratic_sum\nd_latent = 4\n")
    out = str(tmp_path / "prec")
    assert main(["train", "--config", str(config), "--out", out, "--epochs", "0"]) == EXIT_OK
    lines = _read(os.path.join(out, "curve.csv")).strip().splitlines()
    assert len(lines) == 2  # flag epochs=0 wins over file epochs=1


def test_read_config_file_parses_types(tmp_path):
    config = tmp_path / "types.cfg"
    config.write_text("# comment\nn = 3\nlr = 0.5\ntarget = cubic_coupling\nd = 1,2\n")
    values = read_config_file(str(config))
    assert values == {"n": 3, "lr": 0.5, "target": "cubic_coupling", "d": [1, 2]}


def test_verify_passes_with_small_config(tmp_path):
    out = str(tmp_path / "verify")
    code = main(["verify", "--out", out] + FAST_VERIFY)
    assert code == EXIT_OK
    report = _read(os.path.join(out, "verify_report.txt"))
    assert "status=fail" not in report
    assert report.count("name=") == 8


def test_verify_literal_n_scaling_fails(tmp_path):
    out = str(tmp_path / "verify_n")
    code = main(["verify", "--out", out, "--linformer-wv-scale", "n"] + FAST_VERIFY)
    assert code == EXIT_VERIFY_FAILED
    report = _read(os.path.join(out, "verify_report.txt"))
    line = next(ln for ln in report.splitlines() if "sigma_recovery_linformer" in ln)
    assert "status=fail" in line
    residual = float(line.split("max_residual=")[1].split()[0])
    assert residual >= 1e-2
    assert os.path.exists(os.path.join(out, "witness_sigma_recovery_linformer.txt"))


def test_verify_zero_tolerance_fails(tmp_path):
    out = str(tmp_path / "verify_t0")
    code = main(["verify", "--out", out, "--tol", "0"] + FAST_VERIFY)
    assert code == EXIT_VERIFY_FAILED


def test_verify_rejects_bad_wv_scale(tmp_path):
    out = str(tmp_path / "verify_bad")
    code = main(["verify", "--out", out, "--linformer-wv-scale", "q"] + FAST_VERIFY)
    assert code == EXIT_CONFIG
