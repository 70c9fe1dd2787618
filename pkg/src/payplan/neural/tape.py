"""Reverse-mode automatic differentiation over a recorded operation tape.

A `Tape` records primitive operations (see `ops`) on flat float64 buffers as
a static single-assignment program: every node's inputs are recorded before
it, so a single reverse sweep yields exact gradients.  The program is traced
once and then executed many times with different leaf values, which is what
makes training through the unrolled monthly dynamics cheap.

`max(0, .)` uses subgradient 0 at the kink, so completed goals stop
receiving gradient.  Executors also report the smallest nonzero distance of
any `max(0, .)` input from its kink ("kink margin"), which callers use to
recognize draws where finite differences are unreliable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import ops
from .backend import get_backend


@dataclass(frozen=True)
class Node:
    """Handle to one buffer of the tape. Matrices are row-major flattened."""

    idx: int
    shape: tuple[int, ...]

    @property
    def size(self) -> int:
        n = 1
        for d in self.shape:
            n *= d
        return n


class Tape:
    """Records primitives; `compile()` freezes them into an executable program."""

    def __init__(self):
        self._sizes: list[int] = []
        self._shapes: list[tuple[int, ...]] = []
        self._instrs: list[tuple[int, int, int, int, int, int, float]] = []
        self._const_values: dict[int, np.ndarray] = {}
        self._leaves: set[int] = set()
        # buffers assembled by copy_into track covered length until sealed
        self._pending_cover: dict[int, int] = {}

    # --- node creation ----------------------------------------------------------

    def _new(self, shape: tuple[int, ...]) -> Node:
        node = Node(len(self._sizes), shape)
        self._sizes.append(node.size)
        self._shapes.append(shape)
        return node

    def leaf(self, shape: int | tuple[int, ...]) -> Node:
        """An input buffer bound at execution time (parameters, rates)."""
        node = self._new(_as_shape(shape))
        self._leaves.add(node.idx)
        return node

    def const(self, values) -> Node:
        """A buffer fixed at trace time."""
        arr = np.ascontiguousarray(values, dtype=np.float64)
        node = self._new(arr.shape if arr.ndim > 0 else (1,))
        self._const_values[node.idx] = arr.reshape(-1)
        return node

    def alloc(self, size: int) -> Node:
        """An output vector assembled piecewise with copy_into, then sealed."""
        node = self._new((size,))
        self._pending_cover[node.idx] = 0
        return node

    # --- recorded operations ------------------------------------------------

    def _check_ready(self, *nodes: Node) -> None:
        for n in nodes:
            if n.idx in self._pending_cover:
                raise ValueError(f"node {n.idx} used before seal()")

    def _emit(self, op: int, out: Node, a: Node, b: Node | None = None,
              aux0: int = 0, aux1: int = 0, alpha: float = 0.0) -> Node:
        self._instrs.append((op, out.idx, a.idx, b.idx if b else -1, aux0, aux1, alpha))
        return out

    def copy_into(self, dst: Node, offset: int, src: Node) -> None:
        self._check_ready(src)
        if dst.idx not in self._pending_cover:
            raise ValueError("copy_into target must come from alloc()")
        if offset != self._pending_cover[dst.idx]:
            raise ValueError(
                f"copy_into must cover the buffer in order (expected offset "
                f"{self._pending_cover[dst.idx]}, got {offset})"
            )
        self._pending_cover[dst.idx] = offset + src.size
        self._instrs.append((ops.OP_COPY, dst.idx, src.idx, -1, offset, 0, 0.0))

    def seal(self, dst: Node) -> Node:
        covered = self._pending_cover.pop(dst.idx, None)
        if covered is None:
            raise ValueError("seal() target must come from alloc()")
        if covered != dst.size:
            raise ValueError(f"buffer only covered to {covered} of {dst.size}")
        return dst

    def concat(self, parts: Sequence[Node]) -> Node:
        out = self.alloc(sum(p.size for p in parts))
        offset = 0
        for p in parts:
            self.copy_into(out, offset, p)
            offset += p.size
        return self.seal(out)

    def _binary(self, op: int, a: Node, b: Node) -> Node:
        self._check_ready(a, b)
        if a.size != b.size:
            raise ValueError(f"size mismatch: {a.size} vs {b.size}")
        return self._emit(op, self._new((a.size,)), a, b)

    def add(self, a: Node, b: Node) -> Node:
        return self._binary(ops.OP_ADD, a, b)

    def sub(self, a: Node, b: Node) -> Node:
        return self._binary(ops.OP_SUB, a, b)

    def mul(self, a: Node, b: Node) -> Node:
        return self._binary(ops.OP_MUL, a, b)

    def scale(self, a: Node, alpha: float) -> Node:
        self._check_ready(a)
        return self._emit(ops.OP_SCALE, self._new((a.size,)), a, alpha=float(alpha))

    def shift(self, a: Node, alpha: float) -> Node:
        """out = a + alpha (elementwise constant shift)."""
        self._check_ready(a)
        return self._emit(ops.OP_SADD, self._new((a.size,)), a, alpha=float(alpha))

    def vsmul(self, a: Node, s: Node) -> Node:
        """out = a * s[0] where s is a length-1 buffer."""
        self._check_ready(a, s)
        if s.size != 1:
            raise ValueError("vsmul scalar operand must have size 1")
        return self._emit(ops.OP_VSMUL, self._new((a.size,)), a, s)

    def matvec(self, matrix: Node, x: Node) -> Node:
        self._check_ready(matrix, x)
        if len(matrix.shape) != 2:
            raise ValueError("matvec needs a matrix-shaped node")
        rows, cols = matrix.shape
        if cols != x.size:
            raise ValueError(f"matvec shape mismatch: {matrix.shape} @ {x.size}")
        return self._emit(
            ops.OP_MATVEC, self._new((rows,)), matrix, x, aux0=rows, aux1=cols
        )

    def tanh(self, a: Node) -> Node:
        self._check_ready(a)
        return self._emit(ops.OP_TANH, self._new((a.size,)), a)

    def relu(self, a: Node) -> Node:
        """max(0, a); the kink's subgradient is 0."""
        self._check_ready(a)
        return self._emit(ops.OP_RELU, self._new((a.size,)), a)

    def softmax(self, a: Node) -> Node:
        self._check_ready(a)
        return self._emit(ops.OP_SOFTMAX, self._new((a.size,)), a)

    def dot(self, a: Node, b: Node) -> Node:
        self._check_ready(a, b)
        if a.size != b.size:
            raise ValueError(f"size mismatch: {a.size} vs {b.size}")
        return self._emit(ops.OP_DOT, self._new((1,)), a, b)

    def sum(self, a: Node) -> Node:
        self._check_ready(a)
        return self._emit(ops.OP_SUM, self._new((1,)), a)

    def slice(self, a: Node, start: int, length: int) -> Node:
        self._check_ready(a)
        if start < 0 or start + length > a.size:
            raise ValueError(f"slice [{start}:{start + length}] out of range {a.size}")
        return self._emit(ops.OP_SLICE, self._new((length,)), a, aux0=start)

    def clamp01(self, a: Node) -> Node:
        """clamp(a, 0, 1) = relu(a) - relu(a - 1), differentiable a.e."""
        return self.sub(self.relu(a), self.relu(self.shift(a, -1.0)))

    # --- compilation ------------------------------------------------------------

    def compile(self, output: Node, backend: str | None = None) -> "CompiledTape":
        if self._pending_cover:
            raise ValueError(f"unsealed alloc buffers: {sorted(self._pending_cover)}")
        if output.size != 1:
            raise ValueError("compiled output must be a scalar (size-1) node")
        return CompiledTape(self, output, backend)


def _as_shape(shape) -> tuple[int, ...]:
    if isinstance(shape, int):
        return (shape,)
    return tuple(int(d) for d in shape)


class CompiledTape:
    """A frozen program plus its value/gradient arenas and an executor."""

    def __init__(self, tape: Tape, output: Node, backend: str | None = None):
        n = len(tape._sizes)
        self.buf_len = np.asarray(tape._sizes, dtype=np.int64)
        self.buf_off = np.zeros(n, dtype=np.int64)
        np.cumsum(self.buf_len[:-1], out=self.buf_off[1:])
        self.arena_size = int(self.buf_off[-1] + self.buf_len[-1]) if n else 0

        instrs = tape._instrs
        self.op = np.asarray([i[0] for i in instrs], dtype=np.int32)
        self.iout = np.asarray([i[1] for i in instrs], dtype=np.int32)
        self.ia = np.asarray([i[2] for i in instrs], dtype=np.int32)
        self.ib = np.asarray([i[3] for i in instrs], dtype=np.int32)
        self.aux0 = np.asarray([i[4] for i in instrs], dtype=np.int32)
        self.aux1 = np.asarray([i[5] for i in instrs], dtype=np.int32)
        self.alpha = np.asarray([i[6] for i in instrs], dtype=np.float64)

        self.output = output
        self.shapes = list(tape._shapes)
        self.values = np.zeros(self.arena_size)
        self.grads = np.zeros(self.arena_size)
        for idx, arr in tape._const_values.items():
            self._slice(self.values, idx)[:] = arr

        self._backend = get_backend(backend)
        self.last_kink_margin = np.inf

    def _slice(self, arena: np.ndarray, idx: int) -> np.ndarray:
        o = self.buf_off[idx]
        return arena[o : o + self.buf_len[idx]]

    def set_value(self, node: Node, values) -> None:
        arr = np.ascontiguousarray(values, dtype=np.float64).reshape(-1)
        if arr.size != node.size:
            raise ValueError(f"expected {node.size} values, got {arr.size}")
        self._slice(self.values, node.idx)[:] = arr

    def value_of(self, node: Node) -> np.ndarray:
        return self._slice(self.values, node.idx).reshape(node.shape).copy()

    def grad_of(self, node: Node) -> np.ndarray:
        return self._slice(self.grads, node.idx).reshape(node.shape).copy()

    def forward(self) -> float:
        self.last_kink_margin = self._backend.forward(self)
        return float(self._slice(self.values, self.output.idx)[0])

    def backward(self) -> None:
        """Reverse sweep; gradients of all buffers accumulate in `grads`."""
        self._backend.backward(self)

    def value_and_grad(self, leaves: Mapping[Node, np.ndarray] | None = None
                       ) -> tuple[float, dict[Node, np.ndarray]]:
        if leaves:
            for node, values in leaves.items():
                self.set_value(node, values)
        value = self.forward()
        self.backward()
        grads = {n: self.grad_of(n) for n in (leaves or {})}
        return value, grads

    def fd_gradient(self, coords: np.ndarray, h: float = 1e-5) -> np.ndarray:
        """Central finite differences of the output over arena coordinates.

        Leaves must be bound first.  Used as the independent oracle against
        the reverse sweep; the compiled backend parallelizes the coordinate
        loop.
        """
        return self._backend.fd_gradient(self, np.asarray(coords, dtype=np.int64), h)

    def coords_of(self, nodes: Iterable[Node]) -> np.ndarray:
        """Flat arena coordinates of the given nodes, in order."""
        parts = [
            np.arange(self.buf_off[n.idx], self.buf_off[n.idx] + self.buf_len[n.idx])
            for n in nodes
        ]
        return np.concatenate(parts).astype(np.int64)

    @property
    def backend_name(self) -> str:
        return self._backend.name
