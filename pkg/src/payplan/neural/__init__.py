"""Minimal differentiable-programming machinery: tape autodiff, a softmax
policy network, and ADAM."""

from __future__ import annotations

import numpy as np

from .adam import AdamState, adam_step, init_adam
from .backend import available_backends, default_backend_name
from .policy import (
    PolicyParams,
    build_policy_graph,
    init_params,
    load_checkpoint,
    param_nodes,
    policy_forward,
    save_checkpoint,
)
from .tape import CompiledTape, Node, Tape


def value_and_grad(
    build, arrays: list[np.ndarray], backend: str | None = None
) -> tuple[float, list[np.ndarray]]:
    """Trace `build(tape, leaf_nodes) -> scalar node` and differentiate it.

    Returns the scalar value and gradients shaped like the input tensors.
    """
    tape = Tape()
    nodes = [tape.leaf(np.asarray(a).shape) for a in arrays]
    out = build(tape, nodes)
    ct = tape.compile(out, backend)
    for node, a in zip(nodes, arrays):
        ct.set_value(node, a)
    value = ct.forward()
    ct.backward()
    return value, [ct.grad_of(n) for n in nodes]


__all__ = [
    "AdamState",
    "adam_step",
    "init_adam",
    "available_backends",
    "default_backend_name",
    "PolicyParams",
    "build_policy_graph",
    "init_params",
    "load_checkpoint",
    "param_nodes",
    "policy_forward",
    "save_checkpoint",
    "CompiledTape",
    "Node",
    "Tape",
    "value_and_grad",
]
