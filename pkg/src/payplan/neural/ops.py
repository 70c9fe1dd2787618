"""Primitive-operation codes shared by the tape builder and both executors.

Every recorded computation is a sequence of these primitives over flat
float64 buffers in one arena.  The compiled (Cython) and pure-numpy
executors interpret the identical instruction tables.
"""

OP_COPY = 1  # out[aux0 : aux0+len(a)] = a            (assemble vectors)
OP_ADD = 2  # out = a + b                              (elementwise)
OP_SUB = 3  # out = a - b
OP_MUL = 4  # out = a * b
OP_SCALE = 5  # out = a * alpha
OP_SADD = 6  # out = a + alpha
OP_VSMUL = 7  # out = a * b[0]                         (vector times scalar buffer)
OP_MATVEC = 8  # out = A @ x; A = buffer a viewed (aux0 x aux1) row-major, x = b
OP_TANH = 9
OP_RELU = 10  # out = max(0, a); subgradient 0 at a == 0
OP_SOFTMAX = 11
OP_DOT = 12  # out[0] = sum(a * b)
OP_SUM = 13  # out[0] = sum(a)
OP_SLICE = 14  # out = a[aux0 : aux0+len(out)]

OP_NAMES = {
    OP_COPY: "copy",
    OP_ADD: "add",
    OP_SUB: "sub",
    OP_MUL: "mul",
    OP_SCALE: "scale",
    OP_SADD: "sadd",
    OP_VSMUL: "vsmul",
    OP_MATVEC: "matvec",
    OP_TANH: "tanh",
    OP_RELU: "relu",
    OP_SOFTMAX: "softmax",
    OP_DOT: "dot",
    OP_SUM: "sum",
    OP_SLICE: "slice",
}
