"""Compiled-vs-pure executor parity on the full training graph, and
per-backend bitwise determinism of training."""

import numpy as np
import pytest

from payplan.neural import available_backends, init_params
from payplan.presets import base_plan
from payplan.rates import constant_trajectory
from payplan.trainer import PlanGraph, TrainConfig, feature_spec, train_constant

needs_compiled = pytest.mark.skipif(
    "compiled" not in available_backends(), reason="compiled executor not built"
)


@needs_compiled
def test_full_plan_graph_value_and_grads_agree():
    plan = base_plan()
    trajectory = constant_trajectory(plan, plan.horizon_months)
    params = init_params(feature_spec(plan).length, [32, 32], plan.n_slots, seed=6)

    results = {}
    for backend in ("compiled", "pure"):
        graph = PlanGraph(plan, hidden=(32, 32), backend=backend)
        graph.bind_params(params.arrays())
        graph.bind_rates(trajectory)
        results[backend] = graph.value_and_param_grads()

    v_c, g_c = results["compiled"]
    v_p, g_p = results["pure"]
    assert v_c == pytest.approx(v_p, rel=1e-12)
    for a, b in zip(g_c, g_p):
        scale = max(np.abs(a).max(), np.abs(b).max(), 1.0)
        assert np.abs(a - b).max() / scale < 1e-12


@needs_compiled
def test_kink_margin_agrees():
    plan = base_plan()
    trajectory = constant_trajectory(plan, plan.horizon_months)
    params = init_params(feature_spec(plan).length, [16], plan.n_slots, seed=1)
    margins = []
    for backend in ("compiled", "pure"):
        graph = PlanGraph(plan, hidden=(16,), backend=backend)
        graph.bind_params(params.arrays())
        graph.bind_rates(trajectory)
        graph.value()
        margins.append(graph.kink_margin)
    assert margins[0] == pytest.approx(margins[1], rel=1e-9)


@pytest.mark.parametrize("backend", available_backends())
def test_training_is_bitwise_deterministic_per_backend(backend):
    plan = base_plan()
    tc = TrainConfig(iterations=25, seed=11, hidden=(16, 16), backend=backend)
    a = train_constant(plan, tc)
    b = train_constant(plan, tc)
    np.testing.assert_array_equal(a.v_history, b.v_history)
    for (w1, b1), (w2, b2) in zip(a.params.layers, b.params.layers):
        np.testing.assert_array_equal(w1, w2)
        np.testing.assert_array_equal(b1, b2)


@needs_compiled
def test_fd_gradient_parallel_matches_serial_python():
    """The threaded compiled sweep equals the pure sweep on a small graph."""
    from payplan.neural import Tape

    x = np.random.default_rng(3).normal(size=6)
    w_const = np.random.default_rng(9).normal(size=(4, 6))
    outs = {}
    for backend in ("compiled", "pure"):
        tape = Tape()
        leaf = tape.leaf(6)
        w = tape.const(w_const)
        out = tape.sum(tape.relu(tape.tanh(tape.matvec(w, leaf))))
        ct = tape.compile(out, backend)
        ct.set_value(leaf, x)
        ct.forward()
        outs[backend] = ct.fd_gradient(ct.coords_of([leaf]), 1e-6)
    np.testing.assert_allclose(outs["compiled"], outs["pure"], rtol=1e-9, atol=1e-12)
