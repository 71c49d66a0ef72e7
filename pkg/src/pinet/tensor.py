"""Dense float64 matrices with a reverse-mode differentiation tape.

The building blocks here are deliberately small: a `Mat` is an immutable
2-D float64 matrix, a `Tape` records every differentiable operation that
touches a tracked `Mat`, and `backward` walks the tape once in reverse to
produce gradients for the registered leaf parameters.

A tape is built per forward pass (define-by-run). `Mat` values are
immutable and safe to share across threads; a `Tape` is single-threaded.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DegenerateMaskError, DomainError, ShapeError, TapeError

CROSS_ENTROPY_EPS = 1e-12

# Gradients map leaf names to Mats of the leaf's shape; a missing entry
# means the loss does not depend on that leaf (zero gradient).
Gradients = dict[str, "Mat"]


class Mat:
    """Immutable dense matrix of 64-bit floats in row-major layout.

    Every public operation validates that the result is finite, so NaN
    or Inf entries surface at the operation that produced them instead
    of corrupting downstream state.
    """

    __slots__ = ("_a", "_tape", "_nid")

    def __init__(self, data):
        # Private copy: constructing a Mat never locks or aliases the
        # caller's buffer.
        a = np.array(data, dtype=np.float64, order="C")
        self._init_from(a)

    def _init_from(self, a: np.ndarray):
        if a.ndim == 0:
            a = a.reshape(1, 1)
        elif a.ndim == 1:
            a = a.reshape(1, -1)
        elif a.ndim != 2:
            raise ShapeError(f"Mat requires 2-D data, got {a.ndim}-D")
        if not np.isfinite(a).all():
            raise DomainError("Mat entries must be finite (no NaN/Inf)")
        if a.flags.writeable:
            a.setflags(write=False)
        self._a = a
        self._tape = None
        self._nid = None

    @classmethod
    def _adopt(cls, arr) -> "Mat":
        """Zero-copy wrap of a freshly computed array the caller owns
        (or a read-only view of another Mat's storage)."""
        m = cls.__new__(cls)
        m._init_from(np.ascontiguousarray(arr, dtype=np.float64))
        return m

    @property
    def rows(self) -> int:
        return self._a.shape[0]

    @property
    def cols(self) -> int:
        return self._a.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self._a.shape

    @property
    def data(self) -> np.ndarray:
        """Read-only numpy view of the entries (C order, row-major)."""
        return self._a

    @property
    def is_tracked(self) -> bool:
        return self._tape is not None

    def item(self) -> float:
        if self._a.shape != (1, 1):
            raise ShapeError(f"item() needs a 1x1 matrix, got {self.rows}x{self.cols}")
        return float(self._a[0, 0])

    @staticmethod
    def zeros(rows: int, cols: int) -> "Mat":
        return Mat._adopt(np.zeros((rows, cols)))

    @staticmethod
    def ones(rows: int, cols: int) -> "Mat":
        return Mat._adopt(np.ones((rows, cols)))

    @staticmethod
    def eye(n: int) -> "Mat":
        return Mat._adopt(np.eye(n))

    @staticmethod
    def scalar(x: float) -> "Mat":
        return Mat._adopt(np.array([[float(x)]]))

    def __matmul__(self, other: "Mat") -> "Mat":
        return matmul(self, other)

    def __add__(self, other: "Mat") -> "Mat":
        return add(self, other)

    def __sub__(self, other: "Mat") -> "Mat":
        return add(self, scale(other, -1.0))

    def __repr__(self) -> str:
        tag = " tracked" if self.is_tracked else ""
        return f"Mat({self.rows}x{self.cols}{tag})\n{self._a!r}"


@dataclass
class _Node:
    parents: tuple[int | None, ...]
    vjp: Callable[[np.ndarray], tuple[np.ndarray | None, ...]] | None


class Tape:
    """Append-only record of differentiable operations.

    Nodes are stored in creation order, which is a topological order by
    construction: an operation can only consume matrices that already
    exist. `backward` therefore visits each node exactly once, in
    reverse creation order.
    """

    def __init__(self):
        self._nodes: list[_Node] = []
        self._leaves: dict[str, int] = {}

    def __len__(self) -> int:
        return len(self._nodes)

    def leaf(self, value: Mat | np.ndarray, name: str) -> Mat:
        """Register a parameter leaf and return its tracked handle."""
        if name in self._leaves:
            raise TapeError(f"duplicate leaf name {name!r}")
        value = as_mat(value)
        out = Mat._adopt(value.data)  # shares the read-only storage
        out._tape = self
        out._nid = len(self._nodes)
        self._nodes.append(_Node(parents=(), vjp=None))
        self._leaves[name] = out._nid
        return out

    def _record(self, out: np.ndarray, parents: Sequence[Mat], vjp) -> Mat:
        nids = tuple(p._nid if p._tape is self else None for p in parents)
        m = Mat._adopt(out)
        m._tape = self
        m._nid = len(self._nodes)
        self._nodes.append(_Node(parents=nids, vjp=vjp))
        return m


def as_mat(x) -> Mat:
    if isinstance(x, Mat):
        return x
    return Mat(x)


def _result(out: np.ndarray, parents: Sequence[Mat], vjp) -> Mat:
    """Wrap an op result, recording it when any operand is tracked."""
    tapes = {p._tape for p in parents if p._tape is not None}
    if not tapes:
        return Mat._adopt(out)
    if len(tapes) > 1:
        raise TapeError("operands belong to different tapes")
    return tapes.pop()._record(out, parents, vjp)


def matmul(a: Mat, b: Mat) -> Mat:
    """Matrix product a @ b."""
    a, b = as_mat(a), as_mat(b)
    if a.cols != b.rows:
        raise ShapeError(
            f"matmul: inner dimensions differ, {a.rows}x{a.cols} @ {b.rows}x{b.cols}"
        )
    ad, bd = a.data, b.data

    def vjp(g):
        return g @ bd.T, ad.T @ g

    return _result(ad @ bd, (a, b), vjp)


def transpose(a: Mat) -> Mat:
    a = as_mat(a)

    def vjp(g):
        return (g.T,)

    return _result(a.data.T, (a,), vjp)


def relu(a: Mat) -> Mat:
    """Elementwise max(0, x); the subgradient at exactly 0 is 0."""
    a = as_mat(a)
    pos = a.data > 0

    def vjp(g):
        return (g * pos,)

    return _result(np.maximum(a.data, 0.0), (a,), vjp)


def add(a: Mat, b: Mat) -> Mat:
    a, b = as_mat(a), as_mat(b)
    if a.shape != b.shape:
        raise ShapeError(f"add: shapes differ, {a.rows}x{a.cols} + {b.rows}x{b.cols}")

    def vjp(g):
        return g, g

    return _result(a.data + b.data, (a, b), vjp)


def scale(a: Mat, s: "Mat | float") -> Mat:
    """Multiply every entry of `a` by the scalar `s` (float or 1x1 Mat)."""
    a = as_mat(a)
    if isinstance(s, (int, float)):
        sv = float(s)

        def vjp(g):
            return (g * sv,)

        return _result(a.data * sv, (a,), vjp)
    s = as_mat(s)
    if s.shape != (1, 1):
        raise ShapeError(f"scale: scalar factor must be 1x1, got {s.rows}x{s.cols}")
    sv = s.data[0, 0]
    ad = a.data

    def vjp2(g):
        return g * sv, np.array([[float((g * ad).sum())]])

    return _result(ad * sv, (a, s), vjp2)


def hadamard(a: Mat, b: Mat) -> Mat:
    """Elementwise product of two same-shape matrices."""
    a, b = as_mat(a), as_mat(b)
    if a.shape != b.shape:
        raise ShapeError(f"hadamard: shapes differ, {a.rows}x{a.cols} vs {b.rows}x{b.cols}")
    ad, bd = a.data, b.data

    def vjp(g):
        return g * bd, g * ad

    return _result(ad * bd, (a, b), vjp)


def row_scale(a: Mat, s: Mat) -> Mat:
    """Multiply row i of `a` by s[i, 0]; `s` is a column vector."""
    a, s = as_mat(a), as_mat(s)
    if s.cols != 1 or s.rows != a.rows:
        raise ShapeError(f"row_scale: need {a.rows}x1 factors, got {s.rows}x{s.cols}")
    ad, sd = a.data, s.data

    def vjp(g):
        return g * sd, (g * ad).sum(axis=1, keepdims=True)

    return _result(ad * sd, (a, s), vjp)


def col_scale(a: Mat, s: Mat) -> Mat:
    """Multiply column j of `a` by s[0, j]; `s` is a row vector."""
    a, s = as_mat(a), as_mat(s)
    if s.rows != 1 or s.cols != a.cols:
        raise ShapeError(f"col_scale: need 1x{a.cols} factors, got {s.rows}x{s.cols}")
    ad, sd = a.data, s.data

    def vjp(g):
        return g * sd, (g * ad).sum(axis=0, keepdims=True)

    return _result(ad * sd, (a, s), vjp)


def rsqrt_or_zero(a: Mat) -> Mat:
    """Elementwise x^(-1/2) with the convention 0^(-1/2) := 0.

    The zero fallback is the pseudo-inverse convention used for padded
    or isolated nodes whose degree entry is exactly 0; its derivative
    there is also defined as 0.
    """
    a = as_mat(a)
    if (a.data < 0).any():
        raise DomainError("rsqrt_or_zero requires non-negative entries")
    pos = a.data > 0
    out = np.zeros_like(a.data)
    out[pos] = a.data[pos] ** -0.5
    dd = np.zeros_like(a.data)
    dd[pos] = -0.5 * a.data[pos] ** -1.5

    def vjp(g):
        return (g * dd,)

    return _result(out, (a,), vjp)


def reshape_rowmajor(a: Mat) -> Mat:
    """Flatten to a single row in row-major order."""
    a = as_mat(a)
    shape = a.shape

    def vjp(g):
        return (g.reshape(shape),)

    return _result(a.data.reshape(1, -1), (a,), vjp)


def sum_all(a: Mat) -> Mat:
    """Sum of all entries as a 1x1 matrix."""
    a = as_mat(a)
    shape = a.shape

    def vjp(g):
        return (np.full(shape, g[0, 0]),)

    return _result(np.array([[a.data.sum()]]), (a,), vjp)


def vstack(mats: Sequence[Mat]) -> Mat:
    """Stack matrices with equal column counts into one tall matrix."""
    mats = [as_mat(m) for m in mats]
    if not mats:
        raise DomainError("vstack needs at least one matrix")
    cols = mats[0].cols
    for m in mats:
        if m.cols != cols:
            raise ShapeError(f"vstack: column counts differ ({m.cols} vs {cols})")
    offsets = np.cumsum([0] + [m.rows for m in mats])

    def vjp(g):
        return tuple(g[offsets[i]:offsets[i + 1]] for i in range(len(mats)))

    return _result(np.vstack([m.data for m in mats]), mats, vjp)


def _as_mask(mask, n: int) -> np.ndarray:
    if mask is None:
        return np.ones(n, dtype=bool)
    m = np.asarray(mask, dtype=bool).reshape(-1)
    if m.size != n:
        raise ShapeError(f"mask length {m.size} does not match normalised axis size {n}")
    return m


def softmax_masked(a: Mat, axis: str = "rows", mask=None) -> Mat:
    """Exp-normalise slices of `a`, restricted to unmasked positions.

    axis="rows": every row becomes a distribution over its unmasked
    columns; axis="cols": every column becomes a distribution over its
    unmasked rows. Masked positions output exactly 0. The max of the
    unmasked entries is subtracted before exponentiation for stability.
    """
    a = as_mat(a)
    if axis not in ("rows", "cols"):
        raise DomainError(f"softmax axis must be 'rows' or 'cols', got {axis!r}")
    m = _as_mask(mask, a.cols if axis == "rows" else a.rows)
    if not m.any():
        raise DegenerateMaskError("softmax slice has every position masked")

    x = a.data if axis == "rows" else a.data.T
    hi = np.max(np.where(m[None, :], x, -np.inf), axis=1, keepdims=True)
    e = np.where(m[None, :], np.exp(np.where(m[None, :], x - hi, 0.0)), 0.0)
    y = e / e.sum(axis=1, keepdims=True)

    def vjp(g):
        gx = g if axis == "rows" else g.T
        dot = (gx * y).sum(axis=1, keepdims=True)
        gin = y * (gx - dot)
        return (gin if axis == "rows" else gin.T,)

    return _result(y if axis == "rows" else y.T, (a,), vjp)


def cross_entropy(z: Mat, y: Mat) -> Mat:
    """Categorical cross-entropy, summed over all rows.

    `z` rows must be probability distributions (sum to 1 within 1e-6)
    and `y` rows one-hot targets. Probabilities are clamped at 1e-12
    before the logarithm. Returns a 1x1 matrix.
    """
    z, y = as_mat(z), as_mat(y)
    if z.shape != y.shape:
        raise ShapeError(
            f"cross_entropy: shapes differ, {z.rows}x{z.cols} vs {y.rows}x{y.cols}"
        )
    row_sums = z.data.sum(axis=1)
    if np.abs(row_sums - 1.0).max() > 1e-6:
        raise DomainError("cross_entropy: rows of z must sum to 1 within 1e-6")
    onehot = np.isin(y.data, (0.0, 1.0)).all() and (y.data.sum(axis=1) == 1.0).all()
    if not onehot:
        raise DomainError("cross_entropy: rows of y must be one-hot")

    zc = np.maximum(z.data, CROSS_ENTROPY_EPS)
    loss = -(y.data * np.log(zc)).sum()
    live = z.data >= CROSS_ENTROPY_EPS
    yd = y.data

    def vjp(g):
        gz = g[0, 0] * np.where(live, -yd / zc, 0.0)
        gy = g[0, 0] * -np.log(zc)
        return gz, gy

    return _result(np.array([[loss]]), (z, y), vjp)


def backward(tape: Tape, loss: Mat) -> dict[str, Mat]:
    """Gradients of a scalar tape node with respect to every leaf.

    Returns a mapping from leaf name to a gradient Mat of the leaf's
    shape. Leaves the loss does not depend on are absent (zero
    gradient). Deterministic for a fixed tape.
    """
    if loss._tape is not tape or loss._nid is None:
        raise TapeError("backward: loss is not a node of this tape")
    if loss.shape != (1, 1):
        raise TapeError(f"backward: root must be 1x1, got {loss.rows}x{loss.cols}")

    grads: list[np.ndarray | None] = [None] * len(tape._nodes)
    grads[loss._nid] = np.ones((1, 1))
    for nid in range(len(tape._nodes) - 1, -1, -1):
        g = grads[nid]
        node = tape._nodes[nid]
        if g is None or node.vjp is None:
            continue
        for pid, contrib in zip(node.parents, node.vjp(g)):
            if pid is None or contrib is None:
                continue
            grads[pid] = contrib if grads[pid] is None else grads[pid] + contrib

    out: dict[str, Mat] = {}
    for name, nid in tape._leaves.items():
        g = grads[nid]
        if g is None:
            continue
        if not np.isfinite(g).all():
            raise DomainError(f"gradient for leaf {name!r} is not finite")
        out[name] = Mat(g)
    return out


@dataclass
class GradCheckEntry:
    name: str
    row: int
    col: int
    analytic: float
    numeric: float
    rel_err: float


@dataclass
class GradCheckReport:
    """Per-entry comparison of tape gradients against central differences."""

    step: float
    tol: float
    max_rel_err: float = 0.0
    checked: int = 0
    failures: list[GradCheckEntry] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def grad_check(
    f: Callable[[Mapping[str, Mat]], Mat],
    params: Mapping[str, Mat],
    step: float = 1e-5,
    tol: float = 1e-4,
) -> GradCheckReport:
    """Compare tape gradients of f(params) with central finite differences.

    `f` must accept a mapping of parameter Mats and return a 1x1 Mat; it
    is called once with tracked leaves to obtain analytic gradients and
    then twice per parameter entry at x +- step. The relative error
    denominator is max(1, |analytic|, |numeric|).
    """
    if step <= 0:
        raise DomainError("grad_check: step must be positive")
    tape = Tape()
    tracked = {k: tape.leaf(v, k) for k, v in params.items()}
    loss = f(tracked)
    if not isinstance(loss, Mat) or loss._tape is not tape:
        raise TapeError("grad_check: f must return a matrix tracked on the tape")
    analytic = backward(tape, loss)

    report = GradCheckReport(step=step, tol=tol)
    base = dict(params)
    for name, mat in params.items():
        an = analytic[name].data if name in analytic else np.zeros(mat.shape)
        for i in range(mat.rows):
            for j in range(mat.cols):
                fd = np.array(mat.data)
                fd[i, j] = mat.data[i, j] + step
                base[name] = Mat(fd)
                lp = f(base).item()
                fd[i, j] = mat.data[i, j] - step
                base[name] = Mat(fd)
                lm = f(base).item()
                num = (lp - lm) / (2.0 * step)
                rel = abs(an[i, j] - num) / max(1.0, abs(an[i, j]), abs(num))
                report.checked += 1
                report.max_rel_err = max(report.max_rel_err, rel)
                if rel > tol:
                    report.failures.append(
                        GradCheckEntry(name, i, j, float(an[i, j]), num, rel)
                    )
        base[name] = mat
    return report
