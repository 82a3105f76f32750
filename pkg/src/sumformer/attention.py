"""Attention heads (standard, low-rank projected, random-feature), blocks,
networks, and the fixed-weight constructions that write the feature sum
into dedicated output columns.

The sum-extraction construction lifts each token x to
[1, x, phi(x), 0_{d'}] (model dim m = 1 + d + 2d'), runs one attention
block whose queries and keys read only the constant leading 1 (so the
attention averages uniformly over tokens), and whose value matrix routes
scaled phi-features into the trailing d' columns.  One linear token-wise
layer plus the block's residual connections then produce rows
[1, x_i, phi(x_i), Sigma] with Sigma = sum_i phi(x_i).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .errors import (
    ConditioningError,
    ContractError,
    ShapeError,
    UnsupportedInspectionError,
)
from .linalg import require_finite, require_matrix, softmax_rows
from .mlp import MlpParams, MlpSpec, mlp_forward
from .multisym import DegreeBasis, monomial_feature_matrix


class MacCounter:
    """Tally of multiply-accumulate operations, for complexity audits."""

    def __init__(self):
        self.total = 0

    def matmul(self, p: int, q: int, r: int):
        self.total += p * q * r

    def dots(self, count: int, length: int):
        self.total += count * length


def _mm(a: np.ndarray, b: np.ndarray, counter: MacCounter | None) -> np.ndarray:
    if counter is not None:
        counter.matmul(a.shape[0], a.shape[1], b.shape[1])
    return a @ b


@dataclass(frozen=True)
class StandardHeadSpec:
    """softmax((X Wq)(X Wk)^T / sqrt(m)) X Wv with row-wise softmax."""

    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray

    variant = "standard"


@dataclass(frozen=True)
class LinformerHeadSpec:
    """softmax((X Wq)(E X Wk)^T / sqrt(m)) F X Wv with k x n projections E, F."""

    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    e: np.ndarray
    f: np.ndarray

    variant = "linformer"

    @property
    def k(self) -> int:
        return self.e.shape[0]

    @property
    def n(self) -> int:
        return self.e.shape[1]


@dataclass(frozen=True)
class PerformerHeadSpec:
    """a(X Wq) (a(X Wk)^T (X Wv)) with the positive random-feature map a."""

    w_q: np.ndarray
    w_k: np.ndarray
    w_v: np.ndarray
    omegas: np.ndarray  # k x m, one feature vector per row

    variant = "performer"

    @property
    def k(self) -> int:
        return self.omegas.shape[0]


HeadSpec = Union[StandardHeadSpec, LinformerHeadSpec, PerformerHeadSpec]


def _check_head_input(x: np.ndarray, spec: HeadSpec) -> int:
    require_matrix(x, "X")
    require_finite(x, "X")
    m = spec.w_q.shape[0]
    for name in ("w_q", "w_k", "w_v"):
        w = getattr(spec, name)
        if w.shape != (m, m):
            raise ShapeError(f"{name} must be {m}x{m}, got {w.shape}")
    if x.shape[1] != m:
        raise ShapeError(f"X has width {x.shape[1]}, weights expect {m}")
    return m


def standard_head(x: np.ndarray, spec: StandardHeadSpec, counter: MacCounter | None = None) -> np.ndarray:
    m = _check_head_input(x, spec)
    q = _mm(x, spec.w_q, counter)
    k = _mm(x, spec.w_k, counter)
    v = _mm(x, spec.w_v, counter)
    a = softmax_rows(_mm(q, k.T, counter) / np.sqrt(m))
    return _mm(a, v, counter)


def linformer_head(x: np.ndarray, spec: LinformerHeadSpec, counter: MacCounter | None = None) -> np.ndarray:
    m = _check_head_input(x, spec)
    n = x.shape[0]
    if spec.e.shape != spec.f.shape or spec.e.shape[1] != n:
        raise ShapeError(f"E/F must be k x {n}, got {spec.e.shape} and {spec.f.shape}")
    if spec.k >= n:
        raise ContractError(f"projection rank k={spec.k} must be < n={n}")
    # (E X) W_k and (F X) W_v keep every intermediate at k or n rows; no
    # n x n matrix is ever formed.
    q = _mm(x, spec.w_q, counter)
    k_proj = _mm(_mm(spec.e, x, counter), spec.w_k, counter)
    v_proj = _mm(_mm(spec.f, x, counter), spec.w_v, counter)
    a = softmax_rows(_mm(q, k_proj.T, counter) / np.sqrt(m))
    return _mm(a, v_proj, counter)


def performer_features(x: np.ndarray, omegas: np.ndarray, counter: MacCounter | None = None) -> np.ndarray:
    """(1/sqrt(k)) exp(-|x|^2 / 2) [exp(w_1.x), ..., exp(w_k.x)] for one vector x."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if omegas.ndim != 2 or omegas.shape[1] != x.shape[0]:
        raise ShapeError(f"omegas shape {omegas.shape} vs vector length {x.shape[0]}")
    k = omegas.shape[0]
    if counter is not None:
        counter.dots(1, x.shape[0])       # squared norm
        counter.dots(k, x.shape[0])       # k projections
    return np.exp(omegas @ x - 0.5 * float(x @ x)) / np.sqrt(k)


def _performer_features_rows(rows: np.ndarray, omegas: np.ndarray, counter: MacCounter | None) -> np.ndarray:
    k = omegas.shape[0]
    if counter is not None:
        counter.dots(rows.shape[0], rows.shape[1])
        counter.dots(rows.shape[0] * k, rows.shape[1])
    norms = np.sum(rows * rows, axis=1, keepdims=True)
    return np.exp(rows @ omegas.T - 0.5 * norms) / np.sqrt(k)


def performer_head(x: np.ndarray, spec: PerformerHeadSpec, counter: MacCounter | None = None) -> np.ndarray:
    _check_head_input(x, spec)
    if spec.omegas.shape[1] != x.shape[1]:
        raise ShapeError(f"omegas width {spec.omegas.shape[1]} vs model dim {x.shape[1]}")
    q = _performer_features_rows(_mm(x, spec.w_q, counter), spec.omegas, counter)
    k = _performer_features_rows(_mm(x, spec.w_k, counter), spec.omegas, counter)
    v = _mm(x, spec.w_v, counter)
    # Right-associated product: the k x m intermediate comes first.
    return _mm(q, _mm(k.T, v, counter), counter)


def head_forward(x: np.ndarray, spec: HeadSpec, counter: MacCounter | None = None) -> np.ndarray:
    if isinstance(spec, StandardHeadSpec):
        return standard_head(x, spec, counter)
    if isinstance(spec, LinformerHeadSpec):
        return linformer_head(x, spec, counter)
    if isinstance(spec, PerformerHeadSpec):
        return performer_head(x, spec, counter)
    raise TypeError(f"unknown head spec {type(spec)!r}")


def attention_matrix(x: np.ndarray, spec: HeadSpec) -> np.ndarray:
    """The row-stochastic matrix A (n x n standard, n x k projected).

    The random-feature variant never materializes an attention matrix,
    so asking for one is an error rather than an approximation.
    """
    if isinstance(spec, PerformerHeadSpec):
        raise UnsupportedInspectionError(
            "random-feature attention has no softmax matrix to inspect"
        )
    m = _check_head_input(x, spec)
    q = x @ spec.w_q
    if isinstance(spec, StandardHeadSpec):
        return softmax_rows(q @ (x @ spec.w_k).T / np.sqrt(m))
    if spec.k >= x.shape[0]:
        raise ContractError(f"projection rank k={spec.k} must be < n={x.shape[0]}")
    return softmax_rows(q @ ((spec.e @ x) @ spec.w_k).T / np.sqrt(m))


@dataclass(frozen=True)
class TransformerBlockSpec:
    """Block(X) = X + FC(X + Att(X)); Att concatenates heads through w_o."""

    heads: tuple[HeadSpec, ...]
    w_o: np.ndarray
    fc_spec: MlpSpec
    fc_params: tuple[tuple[np.ndarray, np.ndarray], ...]
    zero_attention: bool = False


@dataclass(frozen=True)
class TransformerNetworkSpec:
    blocks: tuple[TransformerBlockSpec, ...]


def block_forward(x: np.ndarray, block: TransformerBlockSpec, counter: MacCounter | None = None) -> np.ndarray:
    require_matrix(x, "X")
    if block.zero_attention:
        att = np.zeros_like(x)
    else:
        outputs = [head_forward(x, h, counter) for h in block.heads]
        att = _mm(np.hstack(outputs), block.w_o, counter)
    inner = x + att
    out = x + mlp_forward(block.fc_spec, list(block.fc_params), inner)
    return require_finite(out, "block output")


def transformer_forward(net: TransformerNetworkSpec, x: np.ndarray, counter: MacCounter | None = None) -> np.ndarray:
    for block in net.blocks:
        x = block_forward(x, block, counter)
    return x


def constant_mlp(width: int, bias: np.ndarray) -> tuple[MlpSpec, tuple]:
    """Single linear layer with zero weights and a fixed bias row."""
    spec = MlpSpec((width, width))
    params = ((np.zeros((width, width)), np.asarray(bias, dtype=np.float64).reshape(1, width)),)
    return spec, params


def linear_mlp(weight: np.ndarray) -> tuple[MlpSpec, tuple]:
    """Single linear layer y = x @ weight with zero bias."""
    w = np.asarray(weight, dtype=np.float64)
    spec = MlpSpec((w.shape[0], w.shape[1]))
    params = ((w, np.zeros((1, w.shape[1]))),)
    return spec, params


# ---------------------------------------------------------------------------
# Sum-extraction construction
# ---------------------------------------------------------------------------

PhiMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SumExtractionConstruction:
    """Fixed-weight network mapping raw X to rows [1, x_i, phi(x_i), Sigma]."""

    variant: str
    n: int
    d: int
    basis: DegreeBasis
    model_dim: int
    network: TransformerNetworkSpec
    phi_kind: str  # "monomial" or "mlp"
    phi_spec: MlpSpec | None = None
    phi_params: MlpParams | None = None
    k: int | None = None
    seed: int | None = None
    lambda_value: float | None = None
    post_scale: float | None = None
    wv_scale: str = "k"
    _phi: PhiMap = field(default=None, repr=False, compare=False)

    @property
    def d_latent(self) -> int:
        return self.basis.size

    def phi_rows(self, x: np.ndarray) -> np.ndarray:
        return self._phi(x)

    def lift(self, x: np.ndarray) -> np.ndarray:
        """Token-wise lift of raw n x d input to the 1 + d + 2d' layout."""
        if x.ndim != 2 or x.shape[1] != self.d:
            raise ShapeError(f"input shape {x.shape}, expected n x {self.d}")
        n = x.shape[0]
        return np.hstack([
            np.ones((n, 1)),
            x,
            self.phi_rows(x),
            np.zeros((n, self.d_latent)),
        ])

    def forward(self, x: np.ndarray, counter: MacCounter | None = None) -> np.ndarray:
        return transformer_forward(self.network, self.lift(x), counter)

    def extract_sum(self, x: np.ndarray) -> np.ndarray:
        """The Sigma block of the output (identical in every row; row 0 returned)."""
        return self.forward(x)[0, -self.d_latent:]


def _construction_wq(m: int) -> np.ndarray:
    """First column e_1, all other columns zero: queries/keys read the constant 1."""
    w = np.zeros((m, m))
    w[0, 0] = 1.0
    return w


def _construction_wv(d: int, d_latent: int, scale: float) -> np.ndarray:
    """Routes phi-columns into the trailing d' columns, scaled."""
    m = 1 + d + 2 * d_latent
    w = np.zeros((m, m))
    lo = 1 + d
    hi = 1 + d + d_latent
    w[lo:hi, hi:] = scale * np.eye(d_latent)
    return w


def _select_last_columns(m: int, d_latent: int, scale: float) -> np.ndarray:
    """Linear map keeping only the trailing d' columns, scaled."""
    w = np.zeros((m, m))
    hi = m - d_latent
    w[hi:, hi:] = scale * np.eye(d_latent)
    return w


def build_sum_extraction(
    variant: str,
    n: int,
    d: int,
    basis: DegreeBasis,
    phi_net: tuple[MlpSpec, MlpParams] | None = None,
    k: int | None = None,
    seed: int | None = None,
    wv_scale: str = "k",
) -> SumExtractionConstruction:
    """Build the fixed-weight sum-extraction network for one head variant.

    The block's queries and keys depend only on the constant leading 1 of
    the lifted layout, so every attention weight is uniform.  The value
    matrix carries a scale that exactly cancels the averaging:

    - standard: scale n, since A = (1/n) 1_{n x n};
    - linformer: E = (1/n) 1_{k x n} and F = (1/k) 1_{k x n}; the value
      rows seen by the attention are already summed over all n tokens, so
      the cancelling scale is k (``wv_scale="n"`` selects the literal
      alternative, which overshoots by n/k and exists for comparison);
    - performer: with fixed feature vectors the query/key Gram matrix is
      lambda * 1_{n x n} with lambda = (1/k) e^{-1} sum_j exp(2 w_{j,1});
      scale n in the value matrix and 1/(lambda n) folded into the
      token-wise layer undo it.

    The token-wise layer of the block selects the trailing d' columns of
    (X + Att(X)); with the block's outer residual this leaves rows
    [1, x_i, phi(x_i), Sigma].
    """
    if n < 1:
        raise ContractError("n must be >= 1")
    if basis.d != d:
        raise ShapeError(f"basis built for d={basis.d}, construction wants d={d}")
    d_latent = basis.size
    m = 1 + d + 2 * d_latent

    if phi_net is None:
        phi_kind, phi_spec, phi_params = "monomial", None, None
        phi = lambda rows: monomial_feature_matrix(rows, basis)
    else:
        phi_spec, phi_params = phi_net
        if phi_spec.in_width != d or phi_spec.out_width != d_latent:
            raise ShapeError(
                f"phi net maps {phi_spec.in_width}->{phi_spec.out_width}, need {d}->{d_latent}"
            )
        phi_kind = "mlp"
        phi = lambda rows: mlp_forward(phi_spec, phi_params, rows)

    w_q = _construction_wq(m)
    w_k = _construction_wq(m)
    lambda_value = None
    post_scale = None

    if variant == "standard":
        head: HeadSpec = StandardHeadSpec(w_q, w_k, _construction_wv(d, d_latent, float(n)))
        fc_scale = 1.0
    elif variant == "linformer":
        if k is None or not (1 <= k < n):
            raise ContractError(f"linformer needs 1 <= k < n, got k={k}, n={n}")
        if wv_scale not in ("k", "n"):
            raise ContractError(f"wv_scale must be 'k' or 'n', got {wv_scale!r}")
        scale = float(k if wv_scale == "k" else n)
        head = LinformerHeadSpec(
            w_q, w_k, _construction_wv(d, d_latent, scale),
            e=np.full((k, n), 1.0 / n),
            f=np.full((k, n), 1.0 / k),
        )
        fc_scale = 1.0
    elif variant == "performer":
        if k is None or not (1 <= k < n):
            raise ContractError(f"performer needs 1 <= k < n, got k={k}, n={n}")
        rng = np.random.default_rng(seed)
        omegas = rng.standard_normal((k, m))
        # All query and key rows equal e_1, so the Gram value is analytic.
        lambda_value = float(np.exp(-1.0) * np.mean(np.exp(2.0 * omegas[:, 0])))
        if not (1e-300 < abs(lambda_value) < 1e300):
            raise ConditioningError(
                f"gram constant {lambda_value} out of safe range; resample omegas"
            )
        head = PerformerHeadSpec(w_q, w_k, _construction_wv(d, d_latent, float(n)), omegas)
        post_scale = 1.0 / (lambda_value * n)
        fc_scale = post_scale
    else:
        raise ContractError(f"unknown variant {variant!r}")

    fc_spec, fc_params = linear_mlp(_select_last_columns(m, d_latent, fc_scale))
    block = TransformerBlockSpec(
        heads=(head,), w_o=np.eye(m), fc_spec=fc_spec, fc_params=fc_params,
    )
    network = TransformerNetworkSpec(blocks=(block,))
    return SumExtractionConstruction(
        variant=variant, n=n, d=d, basis=basis, model_dim=m, network=network,
        phi_kind=phi_kind, phi_spec=phi_spec, phi_params=phi_params,
        k=k, seed=seed, lambda_value=lambda_value, post_scale=post_scale,
        wv_scale=wv_scale, _phi=phi,
    )


def mac_count(variant: str, n: int, d_model: int, k: int | None = None) -> int:
    """Exact multiply-accumulate count of one head forward pass.

    Mirrors the algorithms above: matmul p x q @ q x r costs p*q*r, the
    random-feature map costs one squared norm plus k projections per row.
    """
    if n < 1 or d_model < 1:
        raise ContractError("n and d_model must be positive")
    m = d_model
    if variant == "standard":
        return 3 * n * m * m + 2 * n * n * m
    if k is None or k < 1:
        raise ContractError(f"variant {variant!r} needs k >= 1")
    if variant == "linformer":
        return n * m * m + 2 * k * m * m + 4 * n * k * m
    if variant == "performer":
        return 3 * n * m * m + 2 * n * m + 4 * n * k * m
    raise ContractError(f"unknown variant {variant!r}")


def audited_mac_count(variant: str, n: int, d_model: int, k: int | None = None, seed: int = 0) -> int:
    """Run the head on random data with a counter and report observed MACs."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(size=(n, d_model))
    w = [rng.uniform(-1, 1, size=(d_model, d_model)) for _ in range(3)]
    if variant == "standard":
        spec: HeadSpec = StandardHeadSpec(*w)
    elif variant == "linformer":
        spec = LinformerHeadSpec(*w, e=rng.uniform(size=(k, n)), f=rng.uniform(size=(k, n)))
    elif variant == "performer":
        spec = PerformerHeadSpec(*w, omegas=rng.standard_normal((k, d_model)))
    else:
        raise ContractError(f"unknown variant {variant!r}")
    counter = MacCounter()
    head_forward(x, spec, counter)
    return counter.total
