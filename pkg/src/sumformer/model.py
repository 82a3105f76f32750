"""The sum-aggregation sequence model and its exact constructions.

A model computes Sigma = sum_k phi(x_k) once per sequence and then maps
each token through psi(x_i, Sigma).  phi is either the exact monomial
feature map over a degree basis or a trainable MLP; psi is either a
trainable MLP or fixed polynomial arithmetic (used by the exact
continuous construction).  A separate piecewise-constant realization
quantizes tokens to a grid and looks up outputs from a table keyed by
(own cell, histogram of the other cells).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement, product
from typing import Callable, Union

import numpy as np

from .equivariance import lift
from .errors import BudgetError, DomainError, ShapeError
from .mlp import MlpParams, MlpSpec, init_mlp_params, mlp_forward
from .multisym import (
    DegreeBasis,
    MultiDegree,
    enumerate_multidegrees,
    monomial_feature_matrix,
)

DEFAULT_HIDDEN = (50, 50, 50, 50, 50)


# ---------------------------------------------------------------------------
# phi / psi variants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PolynomialFeatureMap:
    """Exact monomial features over a degree basis (no trainable state)."""

    basis: DegreeBasis

    @property
    def out_width(self) -> int:
        return self.basis.size

    def rows(self, x: np.ndarray) -> np.ndarray:
        return monomial_feature_matrix(x, self.basis)


@dataclass
class MlpFeatureMap:
    spec: MlpSpec
    params: MlpParams

    @property
    def out_width(self) -> int:
        return self.spec.out_width

    def rows(self, x: np.ndarray) -> np.ndarray:
        return mlp_forward(self.spec, self.params, x)


@dataclass(frozen=True)
class LatentPolynomial:
    """Vector-valued polynomial in the d' latent coordinates.

    ``terms`` pairs a coefficient vector (length = model output dim) with
    an exponent tuple over the latent coordinates; the value at s is
    sum_t coeff_t * prod_j s_j^(e_t_j).
    """

    terms: tuple[tuple[np.ndarray, tuple[int, ...]], ...]

    def __call__(self, s: np.ndarray) -> np.ndarray:
        if not self.terms:
            raise ShapeError("empty latent polynomial")
        out = np.zeros_like(self.terms[0][0])
        for coeff, exps in self.terms:
            out = out + coeff * np.prod(s ** np.asarray(exps), axis=-1)
        return out


@dataclass(frozen=True)
class PolynomialCombiner:
    """psi(x, Sigma) = sum_alpha x^alpha * sigma_alpha(Sigma - phi(x)).

    Subtracting the token's own features from Sigma hands each
    sigma_alpha the power sums of the *other* tokens, which by the
    generation property of power sums suffices to express any
    multisymmetric dependence on them.
    """

    terms: tuple[tuple[MultiDegree, LatentPolynomial], ...]
    out_width: int

    def apply(self, x_rows: np.ndarray, phi_rows: np.ndarray, sigma: np.ndarray) -> np.ndarray:
        n = x_rows.shape[0]
        out = np.zeros((n, self.out_width))
        others = sigma[np.newaxis, :] - phi_rows
        for alpha, latent_poly in self.terms:
            mono = np.prod(x_rows ** np.asarray(alpha), axis=1)
            for i in range(n):
                out[i] += mono[i] * latent_poly(others[i])
        return out


@dataclass
class MlpCombiner:
    spec: MlpSpec
    params: MlpParams

    @property
    def out_width(self) -> int:
        return self.spec.out_width

    def apply(self, x_rows: np.ndarray, phi_rows: np.ndarray, sigma: np.ndarray) -> np.ndarray:
        n = x_rows.shape[0]
        stacked = np.hstack([x_rows, np.tile(sigma, (n, 1))])
        return mlp_forward(self.spec, self.params, stacked)


Phi = Union[PolynomialFeatureMap, MlpFeatureMap]
Psi = Union[PolynomialCombiner, MlpCombiner]


@dataclass
class SumformerModel:
    d: int
    d_latent: int
    phi: Phi
    psi: Psi

    def __post_init__(self):
        if self.phi.out_width != self.d_latent:
            raise ShapeError(
                f"phi outputs {self.phi.out_width}, model declares d_latent={self.d_latent}"
            )
        if isinstance(self.psi, MlpCombiner) and self.psi.spec.in_width != self.d + self.d_latent:
            raise ShapeError(
                f"psi expects width {self.psi.spec.in_width}, need {self.d + self.d_latent}"
            )

    def trainable_params(self) -> list[MlpParams]:
        """Parameter lists of the MLP parts, in a fixed order (phi first)."""
        out = []
        if isinstance(self.phi, MlpFeatureMap):
            out.append(self.phi.params)
        if isinstance(self.psi, MlpCombiner):
            out.append(self.psi.params)
        return out


def sumformer_forward(model: SumformerModel, x: np.ndarray) -> np.ndarray:
    """Compute Sigma once, then apply psi token-wise.

    Feature rows are summed in canonical (lexicographic token) order, so
    permuting the input rows permutes the output bitwise.
    """
    if x.ndim != 2 or x.shape[1] != model.d:
        raise ShapeError(f"input shape {x.shape}, model expects n x {model.d}")
    phi_rows = model.phi.rows(x)
    order = np.lexsort(x.T[::-1])
    sigma = np.sum(phi_rows[order], axis=0)
    return model.psi.apply(x, phi_rows, sigma)


def build_mlp_sumformer(
    d: int,
    d_latent: int,
    seed: int = 0,
    hidden: tuple[int, ...] = DEFAULT_HIDDEN,
) -> SumformerModel:
    """Both phi and psi are MLPs (the fully trainable realization)."""
    rng = np.random.default_rng(seed)
    phi_spec = MlpSpec((d, *hidden, d_latent))
    psi_spec = MlpSpec((d + d_latent, *hidden, d))
    return SumformerModel(
        d=d,
        d_latent=d_latent,
        phi=MlpFeatureMap(phi_spec, init_mlp_params(phi_spec, rng)),
        psi=MlpCombiner(psi_spec, init_mlp_params(psi_spec, rng)),
    )


def build_polynomial_sumformer(
    n: int,
    d: int,
    seed: int = 0,
    hidden: tuple[int, ...] = DEFAULT_HIDDEN,
) -> SumformerModel:
    """Exact monomial phi (frozen) with a trainable MLP psi."""
    basis = enumerate_multidegrees(d, n)
    rng = np.random.default_rng(seed)
    psi_spec = MlpSpec((d + basis.size, *hidden, d))
    return SumformerModel(
        d=d,
        d_latent=basis.size,
        phi=PolynomialFeatureMap(basis),
        psi=MlpCombiner(psi_spec, init_mlp_params(psi_spec, rng)),
    )


def build_continuous_sumformer(
    n: int,
    d: int,
    psi_terms: list[tuple[MultiDegree, LatentPolynomial]],
    out_width: int | None = None,
) -> SumformerModel:
    """Fully fixed model: monomial phi and polynomial psi given term by term."""
    basis = enumerate_multidegrees(d, n)
    for alpha, latent_poly in psi_terms:
        if len(alpha) != d:
            raise ShapeError(f"term exponent {alpha} has length {len(alpha)}, want {d}")
        for _, exps in latent_poly.terms:
            if len(exps) != basis.size:
                raise ShapeError(
                    f"latent exponent tuple has arity {len(exps)}, want {basis.size}"
                )
    if out_width is None:
        out_width = d
    return SumformerModel(
        d=d,
        d_latent=basis.size,
        phi=PolynomialFeatureMap(basis),
        psi=PolynomialCombiner(tuple(psi_terms), out_width),
    )


# ---------------------------------------------------------------------------
# Piecewise-constant realization on a grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscreteSumformer:
    """Table lookup over grid cells: quantize the own token, histogram the rest.

    The grid splits [0,1) into delta_cells half-open intervals per axis.
    Cell histograms are integer vectors (sums of one-hot cell encodings),
    so equality of keys is exact and the model is exactly equivariant.
    """

    delta_cells: int
    n: int
    d: int
    table: dict

    @property
    def cell_width(self) -> float:
        return 1.0 / self.delta_cells

    @property
    def num_cells(self) -> int:
        return self.delta_cells**self.d

    def quantize(self, token: np.ndarray) -> tuple[int, ...]:
        """Cell coordinate of one token; entries must lie in [0, 1)."""
        token = np.asarray(token, dtype=np.float64).reshape(-1)
        if np.any(token < 0.0) or np.any(token >= 1.0):
            raise DomainError(f"token {token} outside [0,1)")
        return tuple(np.floor(token * self.delta_cells).astype(int))

    def cell_index(self, cell: tuple[int, ...]) -> int:
        idx = 0
        for c in cell:
            idx = idx * self.delta_cells + c
        return idx

    def cell_one_hot(self, cell: tuple[int, ...]) -> np.ndarray:
        """Unit-vector encoding of one cell; summing these gives a histogram."""
        v = np.zeros(self.num_cells, dtype=np.int64)
        v[self.cell_index(cell)] = 1
        return v

    def anchor(self, cell: tuple[int, ...]) -> np.ndarray:
        """Lower-left corner of the cell's cube."""
        return np.asarray(cell, dtype=np.float64) * self.cell_width


def build_discrete_sumformer(
    g: Callable[[np.ndarray, np.ndarray], np.ndarray],
    delta_cells: int,
    n: int,
    d: int,
) -> DiscreteSumformer:
    """Tabulate g at all grid anchors, keyed by (own cell, histogram of rest)."""
    if delta_cells < 1 or n < 1 or d < 1:
        raise ShapeError("delta_cells, n, d must all be >= 1")
    if delta_cells ** (n * d) > 10**6:
        raise BudgetError(
            f"grid of {delta_cells}^{n * d} anchor combinations exceeds the 1e6 budget"
        )
    ds = DiscreteSumformer(delta_cells=delta_cells, n=n, d=d, table={})
    cells = list(product(range(delta_cells), repeat=d))
    for own in cells:
        own_anchor = ds.anchor(own)
        for rest in combinations_with_replacement(cells, n - 1):
            hist = np.zeros(ds.num_cells, dtype=np.int64)
            for cell in rest:
                hist += ds.cell_one_hot(cell)
            rest_anchors = (
                np.vstack([ds.anchor(c) for c in rest]) if rest else np.zeros((0, d))
            )
            value = np.asarray(g(own_anchor, rest_anchors), dtype=np.float64).reshape(-1)
            if value.shape[0] != d:
                raise ShapeError(f"g returned {value.shape[0]} components, want {d}")
            ds.table[(own, tuple(hist))] = value
    return ds


def discrete_forward(ds: DiscreteSumformer, x: np.ndarray) -> np.ndarray:
    """Quantize, histogram, look up.  Exact on cells: any two inputs with the
    same quantized rows produce identical output."""
    if x.ndim != 2 or x.shape != (ds.n, ds.d):
        raise ShapeError(f"input shape {x.shape}, table built for {ds.n} x {ds.d}")
    cells = [ds.quantize(row) for row in x]
    total_hist = np.zeros(ds.num_cells, dtype=np.int64)
    one_hots = []
    for cell in cells:
        oh = ds.cell_one_hot(cell)
        one_hots.append(oh)
        total_hist += oh
    rows = []
    for cell, oh in zip(cells, one_hots):
        key = (cell, tuple(total_hist - oh))
        rows.append(ds.table[key])
    return np.vstack(rows)


def sup_error(
    model_fn: Callable[[np.ndarray], np.ndarray],
    g: Callable[[np.ndarray, np.ndarray], np.ndarray],
    n: int,
    d: int,
    sample_count: int = 1000,
    seed: int = 0,
) -> float:
    """Monte-Carlo estimate of sup ||f(X) - model(X)||_inf over [0,1)^{n x d}.

    f is the equivariant lift of g.  Sampling gives a lower bound of the
    true supremum; it is reported as such.
    """
    if sample_count < 1:
        raise ShapeError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    f = lift(g)
    worst = 0.0
    for _ in range(sample_count):
        x = rng.uniform(size=(n, d))
        worst = max(worst, float(np.max(np.abs(f(x) - model_fn(x)))))
    return worst
