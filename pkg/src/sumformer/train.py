"""Dataset generation, Adam training of sum-aggregation models, and sweeps.

Equivariant targets are sampled on uniform inputs in [0,1]^{n x d}.
Batches stack all token rows of the batch sequences into one matrix, so
the per-sequence feature sums reduce to fixed-size row-group sums and
the whole step stays inside the tape's matrix primitives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tape, gradient
from .errors import ContractError, DivisionGuardError, TrainingDivergedError
from .mlp import mlp_forward, mlp_param_nodes, mlp_taped
from .model import MlpCombiner, MlpFeatureMap, PolynomialFeatureMap, SumformerModel
from .multisym import monomial_feature_matrix
from .targets import TargetFunction


@dataclass(frozen=True)
class OptimizerConfig:
    """Adam settings; batch_size None means full-batch steps."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int | None = 100


@dataclass
class Dataset:
    inputs: np.ndarray   # (count, n, d)
    targets: np.ndarray  # (count, n, d), exactly f(inputs) at generation time
    train_idx: np.ndarray
    val_idx: np.ndarray
    seed: int
    target_name: str

    @property
    def n(self) -> int:
        return self.inputs.shape[1]

    @property
    def d(self) -> int:
        return self.inputs.shape[2]


def generate_dataset(
    target: TargetFunction,
    n: int,
    d: int,
    count: int,
    split_fraction: float = 0.8,
    seed: int = 0,
) -> Dataset:
    """Uniform inputs, exact targets, deterministic split (first rows train)."""
    if count < 2:
        raise ContractError("count must be >= 2")
    if not (0.0 < split_fraction < 1.0):
        raise ContractError("split_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    inputs = rng.uniform(size=(count, n, d))
    f = target.lifted()
    targets = np.stack([f(x) for x in inputs])
    n_train = int(count * split_fraction)
    n_train = min(max(n_train, 1), count - 1)
    return Dataset(
        inputs=inputs,
        targets=targets,
        train_idx=np.arange(n_train),
        val_idx=np.arange(n_train, count),
        seed=seed,
        target_name=target.name,
    )


def relative_l2_error(pred, truth) -> float:
    """||pred - truth||_2 / ||truth||_2 over all entries, flattened."""
    p = np.asarray(pred, dtype=np.float64).reshape(-1)
    t = np.asarray(truth, dtype=np.float64).reshape(-1)
    if p.shape != t.shape:
        raise ContractError(f"shape mismatch: {p.shape} vs {t.shape}")
    denom = float(np.linalg.norm(t))
    if denom == 0.0:
        raise DivisionGuardError("reference set has zero norm")
    return float(np.linalg.norm(p - t)) / denom


class Adam:
    """Per-array first/second moment state with bias correction."""

    def __init__(self, arrays: list[np.ndarray], config: OptimizerConfig):
        self.config = config
        self.t = 0
        self.m = [np.zeros_like(a) for a in arrays]
        self.v = [np.zeros_like(a) for a in arrays]

    def step(self, arrays: list[np.ndarray], grads: list[np.ndarray]):
        cfg = self.config
        self.t += 1
        b1t = 1.0 - cfg.beta1**self.t
        b2t = 1.0 - cfg.beta2**self.t
        for a, g, m, v in zip(arrays, grads, self.m, self.v):
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * g
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * (g * g)
            if cfg.lr != 0.0:
                a -= cfg.lr * (m / b1t) / (np.sqrt(v / b2t) + cfg.eps)


def trainable_arrays(model: SumformerModel) -> list[np.ndarray]:
    """Flat list of parameter arrays in tape order (phi layers, then psi)."""
    arrays: list[np.ndarray] = []
    for params in model.trainable_params():
        for w, b in params:
            arrays.extend([w, b])
    return arrays


def batch_forward(model: SumformerModel, seqs: np.ndarray) -> np.ndarray:
    """Vectorized forward over a stack of sequences (S, n, d) -> (S, n, d).

    Matches the taped training forward operation for operation (plain
    row order, no canonical sort), so recorded losses and evaluation
    metrics refer to the same function.
    """
    s_count, n, d = seqs.shape
    rows = seqs.reshape(s_count * n, d)
    if isinstance(model.phi, PolynomialFeatureMap):
        phi_rows = monomial_feature_matrix(rows, model.phi.basis)
    else:
        phi_rows = mlp_forward(model.phi.spec, model.phi.params, rows)
    sig = phi_rows.reshape(s_count, n, model.d_latent).sum(axis=1)
    psi_in = np.hstack([rows, np.repeat(sig, n, axis=0)])
    if not isinstance(model.psi, MlpCombiner):
        raise ContractError("training requires an MLP psi")
    pred = mlp_forward(model.psi.spec, model.psi.params, psi_in)
    return pred.reshape(s_count, n, d)


@dataclass
class TrainReport:
    """Validation curve (every 5 epochs), per-epoch train losses, and config echo."""

    val_errors: list[tuple[int, float]] = field(default_factory=list)
    train_losses: list[float] = field(default_factory=list)
    best_validation_error: float = math.inf
    epochs: int = 0
    seed: int = 0
    config: dict = field(default_factory=dict)


VALIDATION_EVERY = 5


def _loss_step(model: SumformerModel, x_seqs: np.ndarray, y_seqs: np.ndarray):
    """One taped forward + MSE loss over a batch of sequences."""
    s_count, n, d = x_seqs.shape
    rows = x_seqs.reshape(s_count * n, d)
    tape = Tape()
    x_node = tape.constant(rows)
    if isinstance(model.phi, MlpFeatureMap):
        phi_nodes = mlp_param_nodes(tape, model.phi.params, "phi.")
        phi_out = mlp_taped(tape, model.phi.spec, phi_nodes, x_node)
        sig = tape.group_sum(phi_out, n)
        sig_rows = tape.repeat_rows(sig, n)
        psi_in = tape.concat_cols(x_node, sig_rows)
    else:
        phi_rows = monomial_feature_matrix(rows, model.phi.basis)
        sig = phi_rows.reshape(s_count, n, model.d_latent).sum(axis=1)
        psi_in = tape.constant(np.hstack([rows, np.repeat(sig, n, axis=0)]))
    psi_nodes = mlp_param_nodes(tape, model.psi.params, "psi.")
    pred = mlp_taped(tape, model.psi.spec, psi_nodes, psi_in)
    diff = tape.sub(pred, tape.constant(y_seqs.reshape(s_count * n, d)))
    loss = tape.mean(tape.square(diff))
    return float(loss.value[0, 0]), tape, loss


def train(
    model: SumformerModel,
    data: Dataset,
    epochs: int,
    config: OptimizerConfig | None = None,
    seed: int = 0,
) -> TrainReport:
    """Minimize MSE with Adam; record validation relative-L2 every 5 epochs.

    Raises TrainingDivergedError (carrying the report so far) if the loss
    leaves the finite range.
    """
    if config is None:
        config = OptimizerConfig()
    arrays = trainable_arrays(model)
    if not arrays:
        raise ContractError("model has no trainable parameters")
    adam = Adam(arrays, config)
    rng = np.random.default_rng(seed)
    x_train = data.inputs[data.train_idx]
    y_train = data.targets[data.train_idx]
    x_val = data.inputs[data.val_idx]
    y_val = data.targets[data.val_idx]

    report = TrainReport(
        epochs=epochs,
        seed=seed,
        config={
            "lr": config.lr, "beta1": config.beta1, "beta2": config.beta2,
            "eps": config.eps, "batch_size": config.batch_size,
            "epochs": epochs, "seed": seed, "dataset_seed": data.seed,
            "target": data.target_name,
        },
    )

    def record_validation(epoch: int):
        err = relative_l2_error(batch_forward(model, x_val), y_val)
        report.val_errors.append((epoch, err))
        report.best_validation_error = min(report.best_validation_error, err)

    record_validation(0)
    n_train = x_train.shape[0]
    batch = config.batch_size if config.batch_size is not None else n_train
    batch = min(batch, n_train)

    for epoch in range(1, epochs + 1):
        if config.batch_size is None:
            order = np.arange(n_train)
        else:
            order = rng.permutation(n_train)
        sq_sum = 0.0
        entries = 0
        for start in range(0, n_train, batch):
            idx = order[start:start + batch]
            loss_value, tape, loss = _loss_step(model, x_train[idx], y_train[idx])
            if not math.isfinite(loss_value):
                raise TrainingDivergedError(
                    f"loss became {loss_value} at epoch {epoch}", report=report
                )
            grads = gradient(tape, loss)
            adam.step(arrays, [grads[p] for p in tape.parameters])
            size = idx.size * data.n * data.d
            sq_sum += loss_value * size
            entries += size
        report.train_losses.append(sq_sum / entries)
        if epoch % VALIDATION_EVERY == 0:
            record_validation(epoch)
    return report


@dataclass(frozen=True)
class SweepRow:
    d: int
    d_prime: int
    seed: int
    best_val_err: float
    dprime_formula: int


def latent_sweep(
    target: TargetFunction,
    n: int,
    d_list: list[int],
    dprime_list: list[int],
    epochs: int,
    points: int,
    seeds: list[int],
    config: OptimizerConfig | None = None,
    hidden: tuple[int, ...] | None = None,
) -> list[SweepRow]:
    """Best validation error per (d, d', seed); same data across d' cells.

    The formula column records C(n+d, d) - 1, the latent width at which
    the exact monomial feature map exists for this n and d.
    """
    from .model import DEFAULT_HIDDEN, build_mlp_sumformer

    if not d_list or not dprime_list or not seeds:
        raise ContractError("d_list, dprime_list, seeds must be nonempty")
    if hidden is None:
        hidden = DEFAULT_HIDDEN
    rows = []
    datasets: dict[tuple[int, int], Dataset] = {}
    for d in d_list:
        for d_prime in dprime_list:
            for seed in seeds:
                key = (d, seed)
                if key not in datasets:
                    datasets[key] = generate_dataset(target, n, d, points, 0.8, seed)
                model = build_mlp_sumformer(d, d_prime, seed, hidden)
                report = train(model, datasets[key], epochs, config, seed)
                rows.append(SweepRow(
                    d=d, d_prime=d_prime, seed=seed,
                    best_val_err=report.best_validation_error,
                    dprime_formula=math.comb(n + d, d) - 1,
                ))
    return rows


# ---------------------------------------------------------------------------
# CSV / manifest output
# ---------------------------------------------------------------------------

def write_curve_csv(path, report: TrainReport):
    """Columns epoch,split,metric,value; train MSE per epoch, val rel-L2 per record."""
    lines = ["epoch,split,metric,value"]
    for epoch, err in report.val_errors:
        lines.append(f"{epoch},val,rel_l2,{err!r}")
    for epoch, loss in enumerate(report.train_losses, start=1):
        lines.append(f"{epoch},train,mse,{loss!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_sweep_csv(path, rows: list[SweepRow]):
    lines = ["d,d_prime,seed,best_val_err,dprime_formula"]
    for r in rows:
        lines.append(f"{r.d},{r.d_prime},{r.seed},{r.best_val_err!r},{r.dprime_formula}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_manifest(path, config: dict):
    """Full config echo, one sorted key per line (no timestamps: reruns are identical)."""
    lines = [f"{key} = {config[key]!r}" for key in sorted(config)]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
