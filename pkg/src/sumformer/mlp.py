"""Token-wise multi-layer perceptrons: ReLU hidden layers, linear output."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Node, Tape
from .errors import ShapeError

MlpParams = list[tuple[np.ndarray, np.ndarray]]


@dataclass(frozen=True)
class MlpSpec:
    """Layer widths, input first and output last; hidden layers use ReLU."""

    layer_widths: tuple[int, ...]

    def __post_init__(self):
        if len(self.layer_widths) < 2:
            raise ShapeError("an MLP needs at least input and output widths")
        if any(w < 1 for w in self.layer_widths):
            raise ShapeError(f"widths must be positive, got {self.layer_widths}")

    @property
    def in_width(self) -> int:
        return self.layer_widths[0]

    @property
    def out_width(self) -> int:
        return self.layer_widths[-1]

    @property
    def n_layers(self) -> int:
        return len(self.layer_widths) - 1


def init_mlp_params(spec: MlpSpec, rng: np.random.Generator) -> MlpParams:
    """Seeded uniform init in [-sqrt(1/fan_in), +sqrt(1/fan_in)] per layer."""
    params: MlpParams = []
    for fan_in, fan_out in zip(spec.layer_widths, spec.layer_widths[1:]):
        bound = np.sqrt(1.0 / fan_in)
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        b = rng.uniform(-bound, bound, size=(1, fan_out))
        params.append((w, b))
    return params


def zero_mlp_params(spec: MlpSpec) -> MlpParams:
    return [
        (np.zeros((fi, fo)), np.zeros((1, fo)))
        for fi, fo in zip(spec.layer_widths, spec.layer_widths[1:])
    ]


def _check_params(spec: MlpSpec, params: MlpParams):
    if len(params) != spec.n_layers:
        raise ShapeError(f"expected {spec.n_layers} layers of params, got {len(params)}")
    for i, ((w, b), fi, fo) in enumerate(
        zip(params, spec.layer_widths, spec.layer_widths[1:])
    ):
        if w.shape != (fi, fo) or b.shape != (1, fo):
            raise ShapeError(f"layer {i}: weight {w.shape} / bias {b.shape} vs widths {fi}->{fo}")


def mlp_forward(spec: MlpSpec, params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Apply the network row-wise (each row of x is one token)."""
    _check_params(spec, params)
    if x.ndim != 2 or x.shape[1] != spec.in_width:
        raise ShapeError(f"input shape {x.shape} vs expected width {spec.in_width}")
    h = x
    last = spec.n_layers - 1
    for i, (w, b) in enumerate(params):
        h = h @ w + b
        if i != last:
            h = np.where(h > 0.0, h, 0.0)
    return h


def mlp_taped(tape: Tape, spec: MlpSpec, param_nodes: list[tuple[Node, Node]], x: Node) -> Node:
    """Same forward as mlp_forward, recorded on a tape."""
    h = x
    last = spec.n_layers - 1
    for i, (w, b) in enumerate(param_nodes):
        h = tape.add_row(tape.matmul(h, w), b)
        if i != last:
            h = tape.relu(h)
    return h


def mlp_param_nodes(tape: Tape, params: MlpParams, prefix: str = "") -> list[tuple[Node, Node]]:
    return [
        (tape.parameter(w, f"{prefix}W{i}"), tape.parameter(b, f"{prefix}b{i}"))
        for i, (w, b) in enumerate(params)
    ]
