"""Pure-numpy tape executor: the fallback when the compiled core is absent.

Interprets the same instruction tables as the Cython executor, one numpy call
per primitive.  Correct and portable, roughly an order of magnitude slower on
training-sized programs.
"""

from __future__ import annotations

import numpy as np

from . import ops

name = "pure"


def forward(ct) -> float:
    """Run the program; returns the kink margin (min |x| over nonzero relu inputs)."""
    values = ct.values
    off, length = ct.buf_off, ct.buf_len
    margin = np.inf

    def view(idx):
        o = off[idx]
        return values[o : o + length[idx]]

    for k in range(len(ct.op)):
        op = ct.op[k]
        out = view(ct.iout[k])
        a = view(ct.ia[k])
        if op == ops.OP_COPY:
            s = ct.aux0[k]
            o = off[ct.iout[k]]
            values[o + s : o + s + length[ct.ia[k]]] = a
        elif op == ops.OP_ADD:
            np.add(a, view(ct.ib[k]), out=out)
        elif op == ops.OP_SUB:
            np.subtract(a, view(ct.ib[k]), out=out)
        elif op == ops.OP_MUL:
            np.multiply(a, view(ct.ib[k]), out=out)
        elif op == ops.OP_SCALE:
            np.multiply(a, ct.alpha[k], out=out)
        elif op == ops.OP_SADD:
            np.add(a, ct.alpha[k], out=out)
        elif op == ops.OP_VSMUL:
            np.multiply(a, view(ct.ib[k])[0], out=out)
        elif op == ops.OP_MATVEC:
            rows, cols = ct.aux0[k], ct.aux1[k]
            out[:] = a.reshape(rows, cols) @ view(ct.ib[k])
        elif op == ops.OP_TANH:
            np.tanh(a, out=out)
        elif op == ops.OP_RELU:
            nonzero = a[a != 0.0]
            if nonzero.size:
                margin = min(margin, float(np.abs(nonzero).min()))
            np.maximum(a, 0.0, out=out)
        elif op == ops.OP_SOFTMAX:
            np.exp(a - a.max(), out=out)
            out /= out.sum()
        elif op == ops.OP_DOT:
            out[0] = a @ view(ct.ib[k])
        elif op == ops.OP_SUM:
            out[0] = a.sum()
        elif op == ops.OP_SLICE:
            s = ct.aux0[k]
            out[:] = a[s : s + out.size]
        else:
            raise AssertionError(f"unknown op {op}")
    return margin


def backward(ct) -> None:
    values, grads = ct.values, ct.grads
    off, length = ct.buf_off, ct.buf_len
    grads[:] = 0.0
    grads[off[ct.output.idx]] = 1.0

    def view(idx):
        o = off[idx]
        return values[o : o + length[idx]]

    def gview(idx):
        o = off[idx]
        return grads[o : o + length[idx]]

    for k in range(len(ct.op) - 1, -1, -1):
        op = ct.op[k]
        g = gview(ct.iout[k])
        ga = gview(ct.ia[k])
        if op == ops.OP_COPY:
            s = ct.aux0[k]
            o = off[ct.iout[k]]
            ga += grads[o + s : o + s + length[ct.ia[k]]]
        elif op == ops.OP_ADD:
            ga += g
            gview(ct.ib[k])[:] += g
        elif op == ops.OP_SUB:
            ga += g
            gview(ct.ib[k])[:] -= g
        elif op == ops.OP_MUL:
            ga += view(ct.ib[k]) * g
            gview(ct.ib[k])[:] += view(ct.ia[k]) * g
        elif op == ops.OP_SCALE:
            ga += ct.alpha[k] * g
        elif op == ops.OP_SADD:
            ga += g
        elif op == ops.OP_VSMUL:
            s = view(ct.ib[k])[0]
            ga += s * g
            gview(ct.ib[k])[0] += view(ct.ia[k]) @ g
        elif op == ops.OP_MATVEC:
            rows, cols = ct.aux0[k], ct.aux1[k]
            x = view(ct.ib[k])
            ga += np.outer(g, x).reshape(-1)
            gview(ct.ib[k])[:] += view(ct.ia[k]).reshape(rows, cols).T @ g
        elif op == ops.OP_TANH:
            y = view(ct.iout[k])
            ga += (1.0 - y * y) * g
        elif op == ops.OP_RELU:
            ga += (view(ct.ia[k]) > 0.0) * g
        elif op == ops.OP_SOFTMAX:
            y = view(ct.iout[k])
            ga += y * (g - (g @ y))
        elif op == ops.OP_DOT:
            ga += g[0] * view(ct.ib[k])
            gview(ct.ib[k])[:] += g[0] * view(ct.ia[k])
        elif op == ops.OP_SUM:
            ga += g[0]
        elif op == ops.OP_SLICE:
            s = ct.aux0[k]
            ga[s : s + length[ct.iout[k]]] += g
        else:
            raise AssertionError(f"unknown op {op}")


def fd_gradient(ct, coords: np.ndarray, h: float) -> np.ndarray:
    out_off = ct.buf_off[ct.output.idx]
    result = np.empty(coords.size)
    for j, c in enumerate(coords):
        saved = ct.values[c]
        ct.values[c] = saved + h
        forward(ct)
        f_plus = ct.values[out_off]
        ct.values[c] = saved - h
        forward(ct)
        f_minus = ct.values[out_off]
        ct.values[c] = saved
        result[j] = (f_plus - f_minus) / (2.0 * h)
    forward(ct)  # restore computed buffers to the unperturbed point
    return result
