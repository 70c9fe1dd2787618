"""Feed-forward allocation policy: tanh hidden layers, softmax head.

The softmax output has one slot per goal plus a residual slot for
unallocated cash, so every output satisfies the allocation simplex
invariant by construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import CheckpointError
from .tape import Node, Tape

CHECKPOINT_FORMAT = "payplan-policy"
CHECKPOINT_VERSION = 1


@dataclass
class PolicyParams:
    """Dense layer weights (W, b) in forward order; last layer feeds the softmax."""

    layers: list[tuple[np.ndarray, np.ndarray]]
    activation: str = "tanh"

    @property
    def input_dim(self) -> int:
        return self.layers[0][0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.layers[-1][0].shape[0]

    @property
    def hidden_dims(self) -> list[int]:
        return [w.shape[0] for w, _ in self.layers[:-1]]

    def arrays(self) -> list[np.ndarray]:
        """Flat parameter-tensor list [W0, b0, W1, b1, ...]."""
        return [a for pair in self.layers for a in pair]

    @staticmethod
    def from_arrays(arrays: list[np.ndarray], activation: str = "tanh") -> "PolicyParams":
        pairs = list(zip(arrays[0::2], arrays[1::2]))
        return PolicyParams(layers=[(w, b) for w, b in pairs], activation=activation)

    def validate(self) -> None:
        for k, (w, b) in enumerate(self.layers):
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise CheckpointError(f"layer {k} has inconsistent shapes")
            if k > 0 and w.shape[1] != self.layers[k - 1][0].shape[0]:
                raise CheckpointError(f"layer {k} input does not chain with layer {k - 1}")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise CheckpointError(f"layer {k} has non-finite parameters")


def init_params(
    input_dim: int, hidden: list[int], output_dim: int, seed: int
) -> PolicyParams:
    """Symmetric uniform init, half-interval sqrt(6/(fan_in+fan_out)); zero biases."""
    rng = np.random.default_rng(seed)
    dims = [input_dim, *hidden, output_dim]
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        a = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-a, a, size=(fan_out, fan_in))
        layers.append((w, np.zeros(fan_out)))
    return PolicyParams(layers=layers)


def policy_forward(params: PolicyParams, features: np.ndarray) -> np.ndarray:
    """Eager forward pass; returns allocation fractions summing to 1."""
    h = np.asarray(features, dtype=float)
    if h.shape != (params.input_dim,):
        raise CheckpointError(
            f"feature length {h.shape} does not match policy input {params.input_dim}"
        )
    for w, b in params.layers[:-1]:
        h = np.tanh(w @ h + b)
    w, b = params.layers[-1]
    logits = w @ h + b
    e = np.exp(logits - logits.max())
    return e / e.sum()


def param_nodes(tape: Tape, params: PolicyParams) -> list[Node]:
    """Leaf nodes matching the parameter tensors, [W0, b0, W1, b1, ...]."""
    return [tape.leaf(a.shape) for a in params.arrays()]


def build_policy_graph(tape: Tape, nodes: list[Node], features: Node) -> Node:
    """Traced twin of policy_forward over previously created parameter leaves."""
    h = features
    pairs = list(zip(nodes[0::2], nodes[1::2]))
    for w, b in pairs[:-1]:
        h = tape.tanh(tape.add(tape.matvec(w, h), b))
    w, b = pairs[-1]
    return tape.softmax(tape.add(tape.matvec(w, h), b))


# --- checkpoints -----------------------------------------------------------------


def save_checkpoint(path: str | Path, params: PolicyParams, meta: dict | None = None) -> None:
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "activation": params.activation,
        "input_dim": params.input_dim,
        "hidden": params.hidden_dims,
        "output_dim": params.output_dim,
        "meta": meta or {},
        "layers": [
            {"w": w.tolist(), "b": b.tolist()} for w, b in params.layers
        ],
    }
    Path(path).write_text(json.dumps(doc))


def load_checkpoint(path: str | Path) -> tuple[PolicyParams, dict]:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path} is not a policy checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {doc.get('version')}")
    layers = [
        (np.asarray(layer["w"], dtype=float), np.asarray(layer["b"], dtype=float))
        for layer in doc["layers"]
    ]
    params = PolicyParams(layers=layers, activation=doc.get("activation", "tanh"))
    params.validate()
    header = (params.input_dim, params.hidden_dims, params.output_dim)
    declared = (doc["input_dim"], list(doc["hidden"]), doc["output_dim"])
    if header != declared:
        raise CheckpointError(f"checkpoint header {declared} does not match layers {header}")
    return params, doc.get("meta", {})
