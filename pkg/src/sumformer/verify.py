"""Property suites behind the ``verify`` command.

Each check returns a record {name, status, max_residual, witness_path};
the driver writes the report and any witness inputs to the output
directory.  Tolerances are per check but can be overridden globally
(setting them to 0 demonstrates that they are load-bearing).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .attention import attention_matrix, build_sum_extraction
from .autodiff import Tape, central_difference, gradient
from .equivariance import check_equivariance
from .mlp import MlpSpec, init_mlp_params, mlp_forward, mlp_param_nodes, mlp_taped
from .model import (
    build_discrete_sumformer,
    build_mlp_sumformer,
    build_polynomial_sumformer,
    discrete_forward,
    sumformer_forward,
)
from .multisym import enumerate_multidegrees, generation_oracle, power_sum_vector
from .targets import get_target


@dataclass
class CheckRecord:
    name: str
    status: str
    max_residual: float
    witness_path: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"


@dataclass
class VerifyConfig:
    n_list: list[int] = field(default_factory=lambda: [2, 3, 4])
    d_list: list[int] = field(default_factory=lambda: [1, 2])
    samples: int = 20
    trials: int = 20
    omega_seeds: int = 3
    gradient_seeds: int = 20
    tol: float | None = None
    linformer_wv_scale: str = "k"
    delta: int = 4


def _tol(config: VerifyConfig, default: float) -> float:
    return default if config.tol is None else config.tol


def _sigma_residual(construction, x: np.ndarray) -> float:
    out = construction.forward(x)
    expected = power_sum_vector(x, construction.basis)
    return float(np.max(np.abs(out[:, -construction.d_latent:] - expected)))


def _sigma_recovery(variant: str, config: VerifyConfig, seeds=(0,), wv_scale="k"):
    worst = 0.0
    witness = None
    for n in config.n_list:
        for d in config.d_list:
            basis = enumerate_multidegrees(d, n)
            for seed in seeds:
                kwargs = {}
                if variant in ("linformer", "performer"):
                    if n < 2:
                        continue
                    kwargs["k"] = n - 1
                if variant == "linformer":
                    kwargs["wv_scale"] = wv_scale
                if variant == "performer":
                    kwargs["seed"] = seed
                con = build_sum_extraction(variant, n, d, basis, **kwargs)
                rng = np.random.default_rng(1000 + seed)
                for _ in range(config.samples):
                    x = rng.uniform(size=(n, d))
                    residual = _sigma_residual(con, x)
                    if residual > worst:
                        worst, witness = residual, x
    return worst, witness


def check_sigma_standard(config: VerifyConfig) -> tuple[CheckRecord, np.ndarray | None]:
    worst, witness = _sigma_recovery("standard", config)
    tol = _tol(config, 1e-10)
    return CheckRecord("sigma_recovery_standard", "pass" if worst <= tol else "fail", worst), witness


def check_sigma_linformer(config: VerifyConfig) -> tuple[CheckRecord, np.ndarray | None]:
    worst, witness = _sigma_recovery("linformer", config, wv_scale=config.linformer_wv_scale)
    tol = _tol(config, 1e-10)
    return CheckRecord("sigma_recovery_linformer", "pass" if worst <= tol else "fail", worst), witness


def check_sigma_performer(config: VerifyConfig) -> tuple[CheckRecord, np.ndarray | None]:
    worst, witness = _sigma_recovery("performer", config, seeds=range(config.omega_seeds))
    tol = _tol(config, 1e-8)
    return CheckRecord("sigma_recovery_performer", "pass" if worst <= tol else "fail", worst), witness


def check_averaging_attention(config: VerifyConfig) -> tuple[CheckRecord, np.ndarray | None]:
    """The constant-query construction must produce exactly uniform weights."""
    worst = 0.0
    witness = None
    basis = enumerate_multidegrees(1, 2)
    rng = np.random.default_rng(7)
    for n in sorted(set(config.n_list) | {2, 3, 5, 64}):
        con = build_sum_extraction("standard", n, 1, basis)
        x = rng.uniform(size=(n, 1))
        a = attention_matrix(con.lift(x), con.network.blocks[0].heads[0])
        residual = float(np.max(np.abs(a - 1.0 / n)))
        if residual > worst:
            worst, witness = residual, x
    tol = _tol(config, 1e-12)
    return CheckRecord("averaging_attention", "pass" if worst <= tol else "fail", worst), witness


def check_equivariance_models(config: VerifyConfig) -> tuple[CheckRecord, np.ndarray | None]:
    n, d = 4, 2
    basis = enumerate_multidegrees(d, n)
    mlp_model = build_mlp_sumformer(d, 6, seed=0)
    poly_model = build_polynomial_sumformer(n, d, seed=0)
    models = [
        ("mlp", lambda x: sumformer_forward(mlp_model, x)),
        ("poly", lambda x: sumformer_forward(poly_model, x)),
        ("standard", build_sum_extraction("standard", n, d, basis).forward),
        ("linformer", build_sum_extraction("linformer", n, d, basis, k=n - 1).forward),
        ("performer", build_sum_extraction("performer", n, d, basis, k=n - 1, seed=0).forward),
    ]
    worst = 0.0
    witness = None
    for _, fn in models:
        report = check_equivariance(fn, n, d, trials=config.trials, seed=11)
        if report.max_violation > worst:
            worst, witness = report.max_violation, report.witness_input
    tol = _tol(config, 1e-10)
    return CheckRecord("equivariance_models", "pass" if worst <= tol else "fail", worst), witness


def check_discrete_exactness(config: VerifyConfig) -> tuple[CheckRecord, np.ndarray | None]:
    """Anchors reproduce g exactly; within-cell outputs are constant;
    permuted inputs give exactly permuted outputs."""
    target = get_target("quadratic_sum")
    n, d, delta = 2, 1, config.delta
    ds = build_discrete_sumformer(target.g, delta, n, d)
    worst = 0.0
    witness = None
    rng = np.random.default_rng(5)
    f = target.lifted()
    for _ in range(config.samples):
        anchors = rng.integers(0, delta, size=(n, d)) / delta
        residual = float(np.max(np.abs(discrete_forward(ds, anchors) - f(anchors))))
        x = rng.uniform(size=(n, d))
        cells = np.floor(x * delta)
        same_cell = (cells + rng.uniform(0, 1, size=x.shape)) / delta
        residual = max(residual, float(np.max(np.abs(
            discrete_forward(ds, x) - discrete_forward(ds, same_cell)
        ))))
        perm = rng.permutation(n)
        residual = max(residual, float(np.max(np.abs(
            discrete_forward(ds, x[perm]) - discrete_forward(ds, x)[perm]
        ))))
        if residual > worst:
            worst, witness = residual, x
    tol = _tol(config, 0.0)
    return CheckRecord("discrete_exactness", "pass" if worst <= tol else "fail", worst), witness


def check_generation_oracle(config: VerifyConfig) -> tuple[CheckRecord, np.ndarray | None]:
    def pairwise_product(x):
        n = x.shape[0]
        return sum(float(x[i, 0] * x[j, 0]) for i in range(n) for j in range(i + 1, n))

    def first_power_sum(x):
        return float(np.sum(x[:, 0]))

    def mixed_elementary(x):
        return float(x[0, 0] * x[1, 1] + x[1, 0] * x[0, 1])

    cases = [
        (pairwise_product, 1, 2),
        (first_power_sum, 1, 3),
        (mixed_elementary, 2, 2),
    ]
    worst = 0.0
    for target_fn, d, n in cases:
        report = generation_oracle(target_fn, d, n, sample_count=config.samples * 25, seed=3)
        worst = max(worst, report.residual)
    tol = _tol(config, 1e-8)
    return CheckRecord("generation_oracle", "pass" if worst <= tol else "fail", worst), None


def gradient_check_once(seed: int, step: float = 1e-5) -> float:
    """Max relative error between tape gradients and central differences
    for one random small MLP regression loss, resampled away from kinks."""
    rng = np.random.default_rng(seed)
    widths = (int(rng.integers(2, 6)), int(rng.integers(2, 17)), int(rng.integers(1, 5)))
    spec = MlpSpec(widths)
    params = init_mlp_params(spec, rng)
    y = rng.uniform(-1, 1, size=(3, widths[-1]))
    for _ in range(200):
        x = rng.uniform(-1, 1, size=(3, widths[0]))
        h = x
        margins = []
        for i, (w, b) in enumerate(params[:-1]):
            h = h @ w + b
            margins.append(float(np.min(np.abs(h))))
            h = np.where(h > 0, h, 0.0)
        if min(margins) >= 1e-3:
            break
    else:
        raise RuntimeError("could not sample inputs away from ReLU kinks")

    tape = Tape()
    nodes = mlp_param_nodes(tape, params)
    pred = mlp_taped(tape, spec, nodes, tape.constant(x))
    loss = tape.mean(tape.square(tape.sub(pred, tape.constant(y))))
    grads = gradient(tape, loss)
    flat_ad = [grads[p] for p in tape.parameters]

    flat_values = [a for pair in params for a in pair]

    def loss_fn(values):
        rebuilt = [(values[2 * i], values[2 * i + 1]) for i in range(spec.n_layers)]
        out = mlp_forward(spec, rebuilt, x)
        return float(np.mean((out - y) ** 2))

    flat_fd = central_difference(loss_fn, flat_values, step)
    worst = 0.0
    for ad, fd in zip(flat_ad, flat_fd):
        denom = np.maximum(np.maximum(np.abs(ad), np.abs(fd)), 1e-6)
        worst = max(worst, float(np.max(np.abs(ad - fd) / denom)))
    return worst


def check_gradients(config: VerifyConfig) -> tuple[CheckRecord, np.ndarray | None]:
    worst = 0.0
    for seed in range(config.gradient_seeds):
        worst = max(worst, gradient_check_once(seed))
    tol = _tol(config, 1e-5)
    return CheckRecord("gradient_check", "pass" if worst <= tol else "fail", worst), None


ALL_CHECKS = [
    check_sigma_standard,
    check_sigma_linformer,
    check_sigma_performer,
    check_averaging_attention,
    check_equivariance_models,
    check_discrete_exactness,
    check_generation_oracle,
    check_gradients,
]


def run_verification(config: VerifyConfig, out_dir: str | None = None) -> list[CheckRecord]:
    records = []
    for check in ALL_CHECKS:
        record, witness = check(config)
        if not record.passed and witness is not None and out_dir is not None:
            path = os.path.join(out_dir, f"witness_{record.name}.txt")
            np.savetxt(path, np.atleast_2d(witness))
            record.witness_path = path
        records.append(record)
    return records


def write_report(path: str, records: list[CheckRecord]):
    lines = []
    for r in records:
        lines.append(
            f"name={r.name} status={r.status} max_residual={r.max_residual!r} "
            f"witness_path={r.witness_path or '-'}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
