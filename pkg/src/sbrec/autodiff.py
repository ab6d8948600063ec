"""Dense 2-D float64 tensors with reverse-mode differentiation on a flat tape.

Every value is an explicit rows x cols matrix; the only broadcasting allowed
is adding a 1 x n bias row to an m x n matrix.  Operations record a backward
rule when a tape is active (``with Tape() as tape: ...``) and at least one
operand either requires gradients or was itself produced under that tape.
Without an active tape the same functions run as plain forward arithmetic,
which is the evaluation fast path.

Gradients accumulate additively: calling :func:`backward` twice without
zeroing doubles every ``.grad``.  Tapes are confined to a single thread.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np


class EngineError(ValueError):
    """Shape mismatch, non-finite value, or tape misuse."""


class Tensor:
    """A rows x cols float64 matrix, optionally carrying a gradient buffer."""

    __slots__ = ("data", "grad", "requires_grad")

    def __init__(self, data, requires_grad: bool = False):
        arr = np.array(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1, 1)
        elif arr.ndim == 1:
            arr = arr.reshape(1, -1)
        if arr.ndim != 2:
            raise EngineError(f"tensor must be 2-D, got shape {arr.shape}")
        self.data = arr
        self.requires_grad = bool(requires_grad)
        self.grad = np.zeros_like(arr) if requires_grad else None

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def cols(self) -> int:
        return self.data.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def item(self) -> float:
        if self.data.shape != (1, 1):
            raise EngineError(f"item() requires a 1x1 tensor, got {self.shape}")
        return float(self.data[0, 0])

    def zero_grad(self) -> None:
        if self.grad is not None:
            self.grad[:] = 0.0

    def __repr__(self) -> str:  # pragma: no cover
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def _wrap(arr: np.ndarray) -> Tensor:
    t = Tensor.__new__(Tensor)
    t.data = arr
    t.requires_grad = False
    t.grad = None
    return t


_tls = threading.local()


def _stack() -> list:
    s = getattr(_tls, "stack", None)
    if s is None:
        s = _tls.stack = []
    return s


def _active_tape():
    s = _stack()
    return s[-1] if s else None


class Tape:
    """Ordered record of operations; backward replays it in exact reverse."""

    def __init__(self):
        self._records: list[tuple[Tensor, tuple[Tensor, ...], object]] = []
        self._produced: set[int] = set()

    def __enter__(self) -> "Tape":
        _stack().append(self)
        return self

    def __exit__(self, *exc) -> bool:
        _stack().pop()
        return False

    def __len__(self) -> int:
        return len(self._records)


def _emit(name: str, out_data: np.ndarray, inputs: tuple[Tensor, ...], back_fn) -> Tensor:
    if not np.isfinite(out_data).all():
        raise EngineError(f"{name}: produced non-finite values")
    out = _wrap(out_data)
    tape = _active_tape()
    if tape is not None and any(
        t.requires_grad or id(t) in tape._produced for t in inputs
    ):
        tape._records.append((out, inputs, back_fn))
        tape._produced.add(id(out))
    return out


def backward(tape: Tape, loss: Tensor) -> None:
    """Populate ``.grad`` of every requires_grad tensor reachable from loss."""
    if loss.shape != (1, 1):
        raise EngineError(f"backward: loss must be 1x1, got {loss.shape}")
    if id(loss) not in tape._produced:
        raise EngineError("backward: loss was not produced under this tape")
    if not np.isfinite(loss.data).all():
        raise EngineError("backward: loss is not finite")
    flows: dict[int, np.ndarray] = {id(loss): np.ones((1, 1))}
    for out, inputs, back_fn in reversed(tape._records):
        g = flows.pop(id(out), None)
        if g is None:
            continue
        for t, contrib in zip(inputs, back_fn(g)):
            if contrib is None:
                continue
            if t.requires_grad:
                t.grad += contrib
            if id(t) in tape._produced:
                prev = flows.get(id(t))
                flows[id(t)] = contrib if prev is None else prev + contrib


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.cols != b.rows:
        raise EngineError(f"matmul: incompatible shapes {a.shape} x {b.shape}")

    def back(g):
        return g @ b.data.T, a.data.T @ g

    return _emit("matmul", a.data @ b.data, (a, b), back)


def matmul_t(a: Tensor, b: Tensor) -> Tensor:
    """a @ b.T without materialising the transpose."""
    if a.cols != b.cols:
        raise EngineError(f"matmul_t: incompatible shapes {a.shape} x {b.shape}^T")

    def back(g):
        return g @ b.data, g.T @ a.data

    return _emit("matmul_t", a.data @ b.data.T, (a, b), back)


def transpose(a: Tensor) -> Tensor:
    def back(g):
        return (g.T.copy(),)

    return _emit("transpose", a.data.T.copy(), (a,), back)


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.shape == b.shape:

        def back(g):
            return g, g

    elif b.rows == 1 and b.cols == a.cols:
        # bias row broadcast over the rows of a

        def back(g):
            return g, g.sum(axis=0, keepdims=True)

    else:
        raise EngineError(f"add: incompatible shapes {a.shape} + {b.shape}")
    return _emit("add", a.data + b.data, (a, b), back)


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise EngineError(f"sub: incompatible shapes {a.shape} - {b.shape}")

    def back(g):
        return g, -g

    return _emit("sub", a.data - b.data, (a, b), back)


def scale(a: Tensor, factor: float) -> Tensor:
    f = float(factor)

    def back(g):
        return (g * f,)

    return _emit("scale", a.data * f, (a,), back)


def hadamard(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise EngineError(f"hadamard: incompatible shapes {a.shape} * {b.shape}")

    def back(g):
        return g * b.data, g * a.data

    return _emit("hadamard", a.data * b.data, (a, b), back)


def sigmoid(a: Tensor) -> Tensor:
    x = a.data
    z = np.exp(-np.abs(x))
    pos = 1.0 / (1.0 + z)
    y = np.where(x >= 0, pos, 1.0 - pos)

    def back(g):
        return (g * y * (1.0 - y),)

    return _emit("sigmoid", y, (a,), back)


def tanh(a: Tensor) -> Tensor:
    y = np.tanh(a.data)

    def back(g):
        return (g * (1.0 - y * y),)

    return _emit("tanh", y, (a,), back)


def softmax_row(a: Tensor) -> Tensor:
    """Row-wise softmax in the max-subtracted form; rows must be nonempty."""
    if a.cols == 0:
        raise EngineError("softmax_row: empty rows")
    shifted = a.data - a.data.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=1, keepdims=True)

    def back(g):
        dot = (g * y).sum(axis=1, keepdims=True)
        return (y * (g - dot),)

    return _emit("softmax_row", y, (a,), back)


def concat_cols(*tensors: Tensor) -> Tensor:
    if not tensors:
        raise EngineError("concat_cols: no inputs")
    rows = tensors[0].rows
    if any(t.rows != rows for t in tensors):
        shapes = ", ".join(str(t.shape) for t in tensors)
        raise EngineError(f"concat_cols: row mismatch among {shapes}")
    widths = [t.cols for t in tensors]
    bounds = np.cumsum(widths)[:-1]

    def back(g):
        return tuple(np.ascontiguousarray(p) for p in np.hsplit(g, bounds))

    return _emit("concat_cols", np.hstack([t.data for t in tensors]), tensors, back)


def gather_rows(a: Tensor, indices) -> Tensor:
    idx = np.asarray(list(indices), dtype=np.intp)
    if idx.size == 0:
        raise EngineError("gather_rows: empty index list")
    if idx.min() < 0 or idx.max() >= a.rows:
        raise EngineError(
            f"gather_rows: index out of range for {a.rows} rows: {idx.min()}..{idx.max()}"
        )

    def back(g):
        out = np.zeros_like(a.data)
        np.add.at(out, idx, g)
        return (out,)

    return _emit("gather_rows", a.data[idx].copy(), (a,), back)


def cosine_sim_rows(a: Tensor, b: Tensor) -> Tensor:
    """Row-wise cosine similarity; a zero-norm row yields similarity 0."""
    if a.shape != b.shape:
        raise EngineError(f"cosine_sim_rows: incompatible shapes {a.shape} vs {b.shape}")
    na = np.linalg.norm(a.data, axis=1)
    nb = np.linalg.norm(b.data, axis=1)
    denom = na * nb
    safe = denom > 0.0
    dots = (a.data * b.data).sum(axis=1)
    c = np.where(safe, dots / np.where(safe, denom, 1.0), 0.0)

    def back(g):
        gv = g[:, 0]
        ga = np.zeros_like(a.data)
        gb = np.zeros_like(b.data)
        if safe.any():
            s = safe
            d = denom[s, None]
            cs = c[s, None]
            ga[s] = gv[s, None] * (b.data[s] / d - cs * a.data[s] / (na[s, None] ** 2))
            gb[s] = gv[s, None] * (a.data[s] / d - cs * b.data[s] / (nb[s, None] ** 2))
        return ga, gb

    return _emit("cosine_sim_rows", c.reshape(-1, 1), (a, b), back)


def cross_entropy_with_softmax(scores: Tensor, target_index: int) -> Tensor:
    """Cross-entropy of softmax(scores) against a one-hot target, fused for
    stability via the log-sum-exp form.  ``scores`` is a single row."""
    if scores.rows != 1 or scores.cols == 0:
        raise EngineError(f"cross_entropy_with_softmax: need a nonempty row, got {scores.shape}")
    if not 0 <= target_index < scores.cols:
        raise EngineError(
            f"cross_entropy_with_softmax: target {target_index} out of range [0, {scores.cols})"
        )
    z = scores.data[0]
    m = z.max()
    e = np.exp(z - m)
    total = e.sum()
    loss = float(m + np.log(total) - z[target_index])
    probs = e / total

    def back(g):
        gz = probs.copy()
        gz[target_index] -= 1.0
        return (gz.reshape(1, -1) * g[0, 0],)

    return _emit("cross_entropy_with_softmax", np.array([[loss]]), (scores,), back)


def sum_all(a: Tensor) -> Tensor:
    def back(g):
        return (np.full_like(a.data, g[0, 0]),)

    return _emit("sum_all", np.array([[a.data.sum()]]), (a,), back)


# ---------------------------------------------------------------------------
# Finite-difference oracle
# ---------------------------------------------------------------------------


@dataclass
class FdReport:
    """Per-parameter worst relative error of autodiff against central differences."""

    h: float
    tol: float
    per_param: dict[str, float] = field(default_factory=dict)

    @property
    def max_rel_error(self) -> float:
        return max(self.per_param.values(), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tol


def finite_difference_check(f, params: dict[str, Tensor], h: float = 1e-5,
                            tol: float = 1e-4) -> FdReport:
    """Compare tape gradients of ``f()`` against central finite differences.

    ``f`` is a deterministic zero-argument callable returning a 1x1 Tensor
    computed from ``params`` (each requires_grad).  Relative error per scalar
    is |g_ad - g_fd| / max(1e-8, |g_ad| + |g_fd|).  Existing gradients are
    zeroed before the tape pass.
    """
    if h <= 0:
        raise EngineError("finite_difference_check: h must be positive")
    for t in params.values():
        if not t.requires_grad:
            raise EngineError("finite_difference_check: all params must require gradients")
        t.zero_grad()
    with Tape() as tape:
        loss = f()
    backward(tape, loss)
    analytic = {name: t.grad.copy() for name, t in params.items()}

    report = FdReport(h=h, tol=tol)
    for name, t in params.items():
        flat = t.data.reshape(-1)
        g_flat = analytic[name].reshape(-1)
        worst = 0.0
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = f().item()
            flat[i] = orig - h
            fm = f().item()
            flat[i] = orig
            if not (np.isfinite(fp) and np.isfinite(fm)):
                raise EngineError(f"finite_difference_check: non-finite evaluation at {name}[{i}]")
            g_fd = (fp - fm) / (2.0 * h)
            g_ad = g_flat[i]
            rel = abs(g_ad - g_fd) / max(1e-8, abs(g_ad) + abs(g_fd))
            if rel > worst:
                worst = rel
        report.per_param[name] = worst
    return report
