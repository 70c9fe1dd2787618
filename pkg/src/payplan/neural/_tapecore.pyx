# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled tape executor: interprets the recorded instruction tables with
plain C loops, releasing the GIL.  Semantics match `pure` exactly; the
finite-difference sweep parallelizes its coordinate loop with OpenMP."""

from libc.math cimport tanh as c_tanh, exp as c_exp, fabs, INFINITY
from libc.string cimport memcpy, memset
from libc.stdint cimport int64_t

from cython.parallel cimport parallel, prange, threadid
cimport openmp

import numpy as np

name = "compiled"

cdef enum:
    OP_COPY = 1
    OP_ADD = 2
    OP_SUB = 3
    OP_MUL = 4
    OP_SCALE = 5
    OP_SADD = 6
    OP_VSMUL = 7
    OP_MATVEC = 8
    OP_TANH = 9
    OP_RELU = 10
    OP_SOFTMAX = 11
    OP_DOT = 12
    OP_SUM = 13
    OP_SLICE = 14

# consumed by a unit test to keep these constants in sync with ops.py
OPCODES = {
    "copy": OP_COPY, "add": OP_ADD, "sub": OP_SUB, "mul": OP_MUL,
    "scale": OP_SCALE, "sadd": OP_SADD, "vsmul": OP_VSMUL, "matvec": OP_MATVEC,
    "tanh": OP_TANH, "relu": OP_RELU, "softmax": OP_SOFTMAX, "dot": OP_DOT,
    "sum": OP_SUM, "slice": OP_SLICE,
}


cdef double _forward_kernel(
    Py_ssize_t n_instr,
    const int* op, const int* iout, const int* ia, const int* ib,
    const int* aux0, const int* aux1, const double* alpha,
    const int64_t* off, const int64_t* blen,
    double* v,
) noexcept nogil:
    cdef Py_ssize_t k, i, j, n, rows, cols
    cdef double* out
    cdef const double* a
    cdef const double* b
    cdef double acc, mx, s, margin = INFINITY
    for k in range(n_instr):
        out = v + off[iout[k]]
        a = v + off[ia[k]]
        n = blen[iout[k]]
        if op[k] == OP_COPY:
            memcpy(out + aux0[k], a, blen[ia[k]] * sizeof(double))
        elif op[k] == OP_ADD:
            b = v + off[ib[k]]
            for i in range(n):
                out[i] = a[i] + b[i]
        elif op[k] == OP_SUB:
            b = v + off[ib[k]]
            for i in range(n):
                out[i] = a[i] - b[i]
        elif op[k] == OP_MUL:
            b = v + off[ib[k]]
            for i in range(n):
                out[i] = a[i] * b[i]
        elif op[k] == OP_SCALE:
            for i in range(n):
                out[i] = a[i] * alpha[k]
        elif op[k] == OP_SADD:
            for i in range(n):
                out[i] = a[i] + alpha[k]
        elif op[k] == OP_VSMUL:
            b = v + off[ib[k]]
            for i in range(n):
                out[i] = a[i] * b[0]
        elif op[k] == OP_MATVEC:
            rows = aux0[k]
            cols = aux1[k]
            b = v + off[ib[k]]
            for i in range(rows):
                acc = 0.0
                for j in range(cols):
                    acc = acc + a[i * cols + j] * b[j]
                out[i] = acc
        elif op[k] == OP_TANH:
            for i in range(n):
                out[i] = c_tanh(a[i])
        elif op[k] == OP_RELU:
            for i in range(n):
                if a[i] != 0.0 and fabs(a[i]) < margin:
                    margin = fabs(a[i])
                out[i] = a[i] if a[i] > 0.0 else 0.0
        elif op[k] == OP_SOFTMAX:
            mx = a[0]
            for i in range(1, n):
                if a[i] > mx:
                    mx = a[i]
            s = 0.0
            for i in range(n):
                out[i] = c_exp(a[i] - mx)
                s = s + out[i]
            for i in range(n):
                out[i] = out[i] / s
        elif op[k] == OP_DOT:
            b = v + off[ib[k]]
            acc = 0.0
            for i in range(blen[ia[k]]):
                acc = acc + a[i] * b[i]
            out[0] = acc
        elif op[k] == OP_SUM:
            acc = 0.0
            for i in range(blen[ia[k]]):
                acc = acc + a[i]
            out[0] = acc
        elif op[k] == OP_SLICE:
            memcpy(out, a + aux0[k], n * sizeof(double))
    return margin


cdef void _backward_kernel(
    Py_ssize_t n_instr,
    const int* op, const int* iout, const int* ia, const int* ib,
    const int* aux0, const int* aux1, const double* alpha,
    const int64_t* off, const int64_t* blen,
    const double* v, double* g, Py_ssize_t arena_size, int64_t out_off,
) noexcept nogil:
    cdef Py_ssize_t k, i, j, n, rows, cols
    cdef const double* a
    cdef const double* b
    cdef const double* y
    cdef const double* go
    cdef double* ga
    cdef double* gb
    cdef double acc, s
    memset(g, 0, arena_size * sizeof(double))
    g[out_off] = 1.0
    for k in range(n_instr - 1, -1, -1):
        go = g + off[iout[k]]
        ga = g + off[ia[k]]
        a = v + off[ia[k]]
        n = blen[iout[k]]
        if op[k] == OP_COPY:
            for i in range(blen[ia[k]]):
                ga[i] = ga[i] + go[aux0[k] + i]
        elif op[k] == OP_ADD:
            gb = g + off[ib[k]]
            for i in range(n):
                ga[i] = ga[i] + go[i]
                gb[i] = gb[i] + go[i]
        elif op[k] == OP_SUB:
            gb = g + off[ib[k]]
            for i in range(n):
                ga[i] = ga[i] + go[i]
                gb[i] = gb[i] - go[i]
        elif op[k] == OP_MUL:
            gb = g + off[ib[k]]
            b = v + off[ib[k]]
            for i in range(n):
                ga[i] = ga[i] + b[i] * go[i]
                gb[i] = gb[i] + a[i] * go[i]
        elif op[k] == OP_SCALE:
            for i in range(n):
                ga[i] = ga[i] + alpha[k] * go[i]
        elif op[k] == OP_SADD:
            for i in range(n):
                ga[i] = ga[i] + go[i]
        elif op[k] == OP_VSMUL:
            gb = g + off[ib[k]]
            b = v + off[ib[k]]
            acc = 0.0
            for i in range(n):
                ga[i] = ga[i] + b[0] * go[i]
                acc = acc + a[i] * go[i]
            gb[0] = gb[0] + acc
        elif op[k] == OP_MATVEC:
            rows = aux0[k]
            cols = aux1[k]
            gb = g + off[ib[k]]
            b = v + off[ib[k]]
            for i in range(rows):
                for j in range(cols):
                    ga[i * cols + j] = ga[i * cols + j] + go[i] * b[j]
                    gb[j] = gb[j] + a[i * cols + j] * go[i]
        elif op[k] == OP_TANH:
            y = v + off[iout[k]]
            for i in range(n):
                ga[i] = ga[i] + (1.0 - y[i] * y[i]) * go[i]
        elif op[k] == OP_RELU:
            for i in range(n):
                if a[i] > 0.0:
                    ga[i] = ga[i] + go[i]
        elif op[k] == OP_SOFTMAX:
            y = v + off[iout[k]]
            s = 0.0
            for i in range(n):
                s = s + go[i] * y[i]
            for i in range(n):
                ga[i] = ga[i] + y[i] * (go[i] - s)
        elif op[k] == OP_DOT:
            gb = g + off[ib[k]]
            b = v + off[ib[k]]
            for i in range(blen[ia[k]]):
                ga[i] = ga[i] + go[0] * b[i]
                gb[i] = gb[i] + go[0] * a[i]
        elif op[k] == OP_SUM:
            for i in range(blen[ia[k]]):
                ga[i] = ga[i] + go[0]
        elif op[k] == OP_SLICE:
            for i in range(n):
                ga[aux0[k] + i] = ga[aux0[k] + i] + go[i]


def forward(ct):
    cdef const int[::1] op = ct.op
    cdef const int[::1] iout = ct.iout
    cdef const int[::1] ia = ct.ia
    cdef const int[::1] ib = ct.ib
    cdef const int[::1] aux0 = ct.aux0
    cdef const int[::1] aux1 = ct.aux1
    cdef const double[::1] alpha = ct.alpha
    cdef const int64_t[::1] off = ct.buf_off
    cdef const int64_t[::1] blen = ct.buf_len
    cdef double[::1] v = ct.values
    cdef Py_ssize_t n_instr = op.shape[0]
    cdef double margin
    if n_instr == 0:
        return float("inf")
    with nogil:
        margin = _forward_kernel(
            n_instr, &op[0], &iout[0], &ia[0], &ib[0], &aux0[0], &aux1[0],
            &alpha[0], &off[0], &blen[0], &v[0])
    return margin


def backward(ct):
    cdef const int[::1] op = ct.op
    cdef const int[::1] iout = ct.iout
    cdef const int[::1] ia = ct.ia
    cdef const int[::1] ib = ct.ib
    cdef const int[::1] aux0 = ct.aux0
    cdef const int[::1] aux1 = ct.aux1
    cdef const double[::1] alpha = ct.alpha
    cdef const int64_t[::1] off = ct.buf_off
    cdef const int64_t[::1] blen = ct.buf_len
    cdef const double[::1] v = ct.values
    cdef double[::1] g = ct.grads
    cdef Py_ssize_t n_instr = op.shape[0]
    cdef int64_t out_off = ct.buf_off[ct.output.idx]
    if n_instr == 0:
        return
    with nogil:
        _backward_kernel(
            n_instr, &op[0], &iout[0], &ia[0], &ib[0], &aux0[0], &aux1[0],
            &alpha[0], &off[0], &blen[0], &v[0], &g[0], g.shape[0], out_off)


def fd_gradient(ct, coords, double h):
    """Central finite differences over arena coordinates, threaded with OpenMP."""
    cdef const int[::1] op = ct.op
    cdef const int[::1] iout = ct.iout
    cdef const int[::1] ia = ct.ia
    cdef const int[::1] ib = ct.ib
    cdef const int[::1] aux0 = ct.aux0
    cdef const int[::1] aux1 = ct.aux1
    cdef const double[::1] alpha = ct.alpha
    cdef const int64_t[::1] off = ct.buf_off
    cdef const int64_t[::1] blen = ct.buf_len
    cdef const int64_t[::1] cview = np.ascontiguousarray(coords, dtype=np.int64)
    cdef Py_ssize_t n_instr = op.shape[0]
    cdef Py_ssize_t n_coords = cview.shape[0]
    cdef int64_t out_off = ct.buf_off[ct.output.idx]

    result = np.empty(n_coords)
    cdef double[::1] rview = result
    if n_coords == 0:
        return result

    cdef int n_threads = min(openmp.omp_get_max_threads(), 8)
    scratch = np.tile(np.asarray(ct.values), (n_threads, 1))
    cdef double[:, ::1] sview = scratch
    cdef Py_ssize_t j
    cdef int tid
    cdef int64_t c
    cdef double saved, f_plus, f_minus
    cdef double* varena

    with nogil, parallel(num_threads=n_threads):
        for j in prange(n_coords, schedule="static"):
            tid = threadid()
            varena = &sview[tid, 0]
            c = cview[j]
            saved = varena[c]
            varena[c] = saved + h
            _forward_kernel(n_instr, &op[0], &iout[0], &ia[0], &ib[0],
                            &aux0[0], &aux1[0], &alpha[0], &off[0], &blen[0], varena)
            f_plus = varena[out_off]
            varena[c] = saved - h
            _forward_kernel(n_instr, &op[0], &iout[0], &ia[0], &ib[0],
                            &aux0[0], &aux1[0], &alpha[0], &off[0], &blen[0], varena)
            f_minus = varena[out_off]
            varena[c] = saved
            rview[j] = (f_plus - f_minus) / (2.0 * h)
    return result
