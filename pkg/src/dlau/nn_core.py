"""Reference feedforward / RBM / backprop implementations and op profiling.

These are the numerical ground truth for the tiled engine and the simulator.
Every matrix product accumulates in ascending index order, in float64, so
other paths can be compared against them at tight tolerances.

Op counting: an optional :class:`OpCounter` is threaded through each routine.
A matrix product (m x k) @ (k x n) adds m*k*n multiply-accumulates; each
activation evaluation adds one activation op per element; every other
elementwise operation (bias add, subtraction, scaling, comparison,
derivative, reduction input) adds one vector op per element it touches.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .prng import SplitMix64
from .tensor import as_matrix

ACTIVATIONS = ("exact-sigmoid", "pwl-sigmoid")
WORKLOADS = ("feedforward", "rbm", "bp")


class ShapeError(ValueError):
    pass


@dataclass
class OpCounter:
    mm: int = 0
    activation: int = 0
    vector: int = 0

    def report(self) -> "OpCountReport":
        return OpCountReport(self.mm, self.activation, self.vector)


@dataclass(frozen=True)
class OpCountReport:
    mm_ops: int
    activation_ops: int
    vector_ops: int

    @property
    def total(self) -> int:
        return self.mm_ops + self.activation_ops + self.vector_ops

    @property
    def shares(self) -> dict[str, float]:
        t = self.total
        if t == 0:
            raise ValueError("empty op count has no shares")
        return {
            "mm": self.mm_ops / t,
            "activation": self.activation_ops / t,
            "vector": self.vector_ops / t,
        }


@dataclass(frozen=True)
class NetworkSpec:
    layer_sizes: tuple[int, ...]
    activation: str = "exact-sigmoid"
    pwl_k: float = 0.5

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) < 2:
            raise ValueError(f"a network needs at least 2 layers, got {len(sizes)}")
        if any(s < 1 for s in sizes):
            raise ValueError(f"layer sizes must be >= 1, got {sizes}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")

    @property
    def weight_shapes(self) -> list[tuple[int, int]]:
        s = self.layer_sizes
        return [(s[i], s[i + 1]) for i in range(len(s) - 1)]


# ---------------------------------------------------------------------------
# primitives
# ---------------------------------------------------------------------------

def _count(counter, kind: str, n: int) -> None:
    if counter is not None:
        setattr(counter, kind, getattr(counter, kind) + int(n))


def sigmoid_exact(x):
    """Logistic function, evaluated without overflow for large |x|."""
    xa = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(xa))
    out = np.where(xa >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    if np.ndim(x) == 0:
        return float(out)
    return out


def matvec_naive(W, x) -> np.ndarray:
    """out[j] = sum_i W[i][j] * x[i], accumulated for i = 0, 1, ... in order."""
    w = as_matrix(W, "W")
    xv = np.asarray(x, dtype=np.float64).reshape(-1)
    if xv.shape[0] != w.shape[0]:
        raise ShapeError(f"x has length {xv.shape[0]} but W has {w.shape[0]} rows")
    out = np.zeros(w.shape[1])
    for i in range(w.shape[0]):
        out += w[i] * xv[i]
    return out


def matmul_seq(A, B, counter: OpCounter | None = None) -> np.ndarray:
    """A @ B with each output summed over the inner index in ascending order."""
    if A.shape[1] != B.shape[0]:
        raise ShapeError(f"cannot multiply {A.shape[0]}x{A.shape[1]} by {B.shape[0]}x{B.shape[1]}")
    out = np.zeros((A.shape[0], B.shape[1]))
    for i in range(A.shape[1]):
        out += np.outer(A[:, i], B[i])
    _count(counter, "mm", A.shape[0] * A.shape[1] * B.shape[1])
    return out


def _activation_fn(spec: NetworkSpec):
    if spec.activation == "exact-sigmoid":
        return sigmoid_exact, lambda z, a: a * (1.0 - a)
    from .pwl import build_pwl_table, pwl_sigmoid, segment_slope

    table = build_pwl_table(spec.pwl_k)
    return (lambda z: pwl_sigmoid(table, z)), (lambda z, a: segment_slope(table, z))


def _check_chain(spec: NetworkSpec, weights, x: np.ndarray) -> list[np.ndarray]:
    shapes = spec.weight_shapes
    if len(weights) != len(shapes):
        raise ShapeError(f"expected {len(shapes)} weight matrices, got {len(weights)}")
    ws = []
    for l, (w, want) in enumerate(zip(weights, shapes)):
        w = as_matrix(w, f"weights[{l}]")
        if w.shape != want:
            raise ShapeError(f"layer {l}: weight shape {w.shape} does not match {want}")
        ws.append(w)
    if x.shape[1] != spec.layer_sizes[0]:
        raise ShapeError(f"input has {x.shape[1]} columns, network expects {spec.layer_sizes[0]}")
    return ws


# ---------------------------------------------------------------------------
# workloads
# ---------------------------------------------------------------------------

def feedforward_ref(spec: NetworkSpec, weights, inputs, counter: OpCounter | None = None):
    """Activations of every layer, starting with the input itself."""
    x = as_matrix(inputs, "input")
    ws = _check_chain(spec, weights, x)
    f, _ = _activation_fn(spec)
    acts = [x]
    for w in ws:
        z = matmul_seq(acts[-1], w, counter)
        _count(counter, "activation", z.size)
        acts.append(f(z))
    return acts


def rbm_cd1_ref(W, vbias, hbias, v0, rng: SplitMix64, counter: OpCounter | None = None):
    """One contrastive-divergence step. Returns (dW, dvbias, dhbias).

    Hidden units of the positive phase are sampled with ``rng`` in row-major
    order (one uniform draw per unit, sample = draw < probability).
    """
    w = as_matrix(W, "W")
    v0 = as_matrix(v0, "v0")
    vb = np.asarray(vbias, dtype=np.float64).reshape(-1)
    hb = np.asarray(hbias, dtype=np.float64).reshape(-1)
    nv, nh = w.shape
    if v0.shape[1] != nv:
        raise ShapeError(f"v0 has {v0.shape[1]} columns but W has {nv} visible rows")
    if vb.shape[0] != nv or hb.shape[0] != nh:
        raise ShapeError(f"bias lengths ({vb.shape[0]}, {hb.shape[0]}) do not match W {nv}x{nh}")
    batch = v0.shape[0]

    h0 = sigmoid_exact(matmul_seq(v0, w, counter) + hb)
    _count(counter, "vector", h0.size)
    _count(counter, "activation", h0.size)
    h0_sample = (rng.random(h0.size).reshape(h0.shape) < h0).astype(np.float64)
    _count(counter, "vector", h0.size)

    v1 = sigmoid_exact(matmul_seq(h0_sample, w.T, counter) + vb)
    _count(counter, "vector", v1.size)
    _count(counter, "activation", v1.size)
    h1 = sigmoid_exact(matmul_seq(v1, w, counter) + hb)
    _count(counter, "vector", h1.size)
    _count(counter, "activation", h1.size)

    dW = (matmul_seq(v0.T, h0, counter) - matmul_seq(v1.T, h1, counter)) / batch
    _count(counter, "vector", 2 * dW.size)
    dv = (v0 - v1).sum(axis=0) / batch
    _count(counter, "vector", 2 * v0.size + nv)
    dh = (h0 - h1).sum(axis=0) / batch
    _count(counter, "vector", 2 * h0.size + nh)
    return dW, dv, dh


def mse_loss(output, target) -> float:
    diff = np.asarray(output, dtype=np.float64) - np.asarray(target, dtype=np.float64)
    return float(np.mean(diff * diff))


def backprop_ref(spec: NetworkSpec, weights, inputs, target, counter: OpCounter | None = None):
    """Gradient of ``mse_loss(network(inputs), target)`` w.r.t. each weight matrix."""
    x = as_matrix(inputs, "input")
    t = as_matrix(target, "target")
    ws = _check_chain(spec, weights, x)
    if t.shape != (x.shape[0], spec.layer_sizes[-1]):
        raise ShapeError(f"target shape {t.shape} does not match {(x.shape[0], spec.layer_sizes[-1])}")
    f, fprime = _activation_fn(spec)

    acts, zs = [x], []
    for w in ws:
        z = matmul_seq(acts[-1], w, counter)
        _count(counter, "activation", z.size)
        zs.append(z)
        acts.append(f(z))

    y = acts[-1]
    delta = 2.0 * (y - t) / y.size
    _count(counter, "vector", 2 * y.size)
    delta = delta * fprime(zs[-1], y)
    _count(counter, "vector", 3 * y.size)

    grads = [None] * len(ws)
    for l in range(len(ws) - 1, -1, -1):
        grads[l] = matmul_seq(acts[l].T, delta, counter)
        if l > 0:
            back = matmul_seq(delta, ws[l].T, counter)
            delta = back * fprime(zs[l - 1], acts[l])
            _count(counter, "vector", 3 * back.size)
    return grads


# ---------------------------------------------------------------------------
# profiling
# ---------------------------------------------------------------------------

def synthetic_weights(spec: NetworkSpec, seed: int) -> list[np.ndarray]:
    rng = SplitMix64(seed)
    return [rng.uniform_f32(r * c).reshape(r, c).astype(np.float64) for r, c in spec.weight_shapes]


def profile_ops(workload: str, spec: NetworkSpec, batch: int = 1, seed: int = 0) -> OpCountReport:
    """Run a workload through the reference code with op counting enabled."""
    if workload not in WORKLOADS:
        raise ValueError(f"workload must be one of {WORKLOADS}, got {workload!r}")
    if batch < 1:
        raise ValueError(f"batch must be >= 1, got {batch}")
    counter = OpCounter()
    rng = SplitMix64(seed)
    weights = synthetic_weights(spec, seed)
    x = rng.random(batch * spec.layer_sizes[0]).reshape(batch, -1)

    if workload == "feedforward":
        feedforward_ref(spec, weights, x, counter)
    elif workload == "bp":
        target = rng.random(batch * spec.layer_sizes[-1]).reshape(batch, -1)
        backprop_ref(spec, weights, x, target, counter)
    else:
        # greedy layer-wise pre-training pass over the whole stack
        v = x
        for w in weights:
            nv, nh = w.shape
            rbm_cd1_ref(w, np.zeros(nv), np.zeros(nh), v, rng, counter)
            v = sigmoid_exact(matmul_seq(v, w, counter))
            _count(counter, "activation", v.size)
    return counter.report()
