"""Two-tower graph classifier with learnable message-passing scalars.

A features tower and an attention tower each run two message-passing
layers over the graph; the attention tower is softmax-normalised and the
product of the two tower outputs pools node states into a fixed-size
graph representation, which a dense layer maps to class probabilities.
Every message-passing layer owns its own (p, q) pair controlling the
propagation matrix, trainable alongside the weights.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, DomainError, ShapeError
from .graph import Batch, LabeledGraph, propagation_matrix
from .tensor import (
    Mat,
    Tape,
    backward,
    col_scale,
    cross_entropy,
    matmul,
    relu,
    reshape_rowmajor,
    softmax_masked,
    transpose,
    vstack,
)

WEIGHT_NAMES = ("w_x0", "w_x1", "w_a0", "w_a1", "w_d")
PQ_NAMES = ("p_x0", "q_x0", "p_x1", "q_x1", "p_a0", "q_a0", "p_a1", "q_a1")

# Debug hook: when True, the attention softmax ignores node masks, so
# padded nodes receive probability mass. Exists only so the consistency
# checker can demonstrate that the padding-invariance suite catches it.
_UNSAFE_NO_MASK = False


def _set_unsafe_no_mask(value: bool):
    global _UNSAFE_NO_MASK
    _UNSAFE_NO_MASK = bool(value)


@dataclass(frozen=True)
class PiNetConfig:
    d: int
    C: int
    F0: int = 100
    F1: int = 64
    attention_axis: str = "nodes"  # or "features"
    pq_mode: str = "learned"  # or "fixed"
    fixed_p: float = 1.0
    fixed_q: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if min(self.d, self.C, self.F0, self.F1) < 1:
            raise DomainError("d, C, F0, F1 must all be >= 1")
        if self.attention_axis not in ("nodes", "features"):
            raise DomainError(f"attention_axis must be nodes|features, got {self.attention_axis!r}")
        if self.pq_mode not in ("learned", "fixed"):
            raise DomainError(f"pq_mode must be learned|fixed, got {self.pq_mode!r}")
        if not (0.0 <= self.fixed_p <= 1.0 and 0.0 <= self.fixed_q <= 1.0):
            raise DomainError("fixed p, q must lie in [0, 1]")


@dataclass(frozen=True)
class PiNetParams:
    """Flat name -> Mat parameter store.

    Weight matrices under WEIGHT_NAMES; the per-layer propagation
    scalars under PQ_NAMES as 1x1 matrices ('x' = features tower,
    'a' = attention tower, suffix = layer index). In fixed mode the pq
    entries hold the fixed values and are excluded from training.
    """

    values: dict[str, Mat]
    config: PiNetConfig

    def __post_init__(self):
        missing = [k for k in WEIGHT_NAMES + PQ_NAMES if k not in self.values]
        if missing:
            raise DomainError(f"params missing entries: {missing}")
        for k in PQ_NAMES:
            if self.values[k].shape != (1, 1):
                raise ShapeError(f"{k} must be 1x1")

    def __getitem__(self, name: str) -> Mat:
        return self.values[name]

    @property
    def pq_trainable(self) -> bool:
        return self.config.pq_mode == "learned"

    def trainables(self) -> dict[str, Mat]:
        names = WEIGHT_NAMES + (PQ_NAMES if self.pq_trainable else ())
        return {k: self.values[k] for k in names}

    def replaced(self, updates: dict[str, Mat]) -> "PiNetParams":
        unknown = set(updates) - set(self.values)
        if unknown:
            raise DomainError(f"unknown parameter names: {sorted(unknown)}")
        return PiNetParams({**self.values, **updates}, self.config)

    def pq_pairs(self) -> dict[str, float]:
        return {k: self.values[k].item() for k in PQ_NAMES}


def init_params(config: PiNetConfig) -> PiNetParams:
    """Glorot-uniform weights, deterministic per seed; p = q = 0.5 when
    learned, the configured constants when fixed."""
    rng = np.random.default_rng(config.seed)

    def glorot(fan_in, fan_out):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        return Mat(rng.uniform(-bound, bound, size=(fan_in, fan_out)))

    d, c, f0, f1 = config.d, config.C, config.F0, config.F1
    values: dict[str, Mat] = {
        "w_x0": glorot(d, f0),
        "w_x1": glorot(f0, f1),
        "w_a0": glorot(d, f0),
        "w_a1": glorot(f0, f1),
        "w_d": glorot(f1 * f1, c),
    }
    if config.pq_mode == "learned":
        p0 = q0 = 0.5
    else:
        p0, q0 = config.fixed_p, config.fixed_q
    for k in PQ_NAMES:
        values[k] = Mat.scalar(p0 if k.startswith("p") else q0)
    return PiNetParams(values, config)


def _tower(g: LabeledGraph, params: PiNetParams, kind: str) -> Mat:
    """Two message-passing layers: relu(At1 @ relu(At0 @ X @ W0) @ W1)
    without the outer relu for the attention tower (its nonlinearity is
    the softmax applied by the caller)."""
    p = params.values
    at0 = propagation_matrix(g.adjacency, p[f"p_{kind}0"], p[f"q_{kind}0"])
    at1 = propagation_matrix(g.adjacency, p[f"p_{kind}1"], p[f"q_{kind}1"])
    h = relu(matmul(at0, matmul(g.features, p[f"w_{kind}0"])))
    out = matmul(at1, matmul(h, p[f"w_{kind}1"]))
    return relu(out) if kind == "x" else out


def forward_features(g: LabeledGraph, params: PiNetParams, mask=None) -> Mat:
    """N x F1 node features after the features tower.

    Padded-node rows are zero: their input features are zero and the
    propagation matrix gives them no cross-node entries. `mask` is
    accepted for signature symmetry with the attention tower.
    """
    if g.d != params.config.d:
        raise ShapeError(f"graph feature width {g.d} != model d {params.config.d}")
    return _tower(g, params, "x")


def forward_attention(g: LabeledGraph, params: PiNetParams, mask=None) -> Mat:
    """F1 x N attention weights from the attention tower.

    With attention_axis="nodes", each row is softmax-normalised over the
    real (unmasked) nodes; with "features", each node's column is
    normalised over the F1 feature positions and padded columns are then
    zeroed. Either way padded-node columns are exactly 0.
    """
    if g.d != params.config.d:
        raise ShapeError(f"graph feature width {g.d} != model d {params.config.d}")
    mask = g.node_mask if mask is None else np.asarray(mask, dtype=bool)
    pre = transpose(_tower(g, params, "a"))  # F1 x N
    if _UNSAFE_NO_MASK:
        mask = None
    if params.config.attention_axis == "nodes":
        return softmax_masked(pre, axis="rows", mask=mask)
    soft = softmax_masked(pre, axis="cols", mask=None)
    if mask is None:
        return soft
    return col_scale(soft, Mat(mask.astype(float).reshape(1, -1)))


def forward(g: LabeledGraph, params: PiNetParams, mask=None) -> Mat:
    """Class probability row (1 x C) for one graph."""
    z_x = forward_features(g, params, mask)
    z_a = forward_attention(g, params, mask)
    pooled = matmul(z_a, z_x)  # F1 x F1, padded nodes contribute nothing
    logits = matmul(reshape_rowmajor(pooled), params.values["w_d"])
    return softmax_masked(logits, axis="rows")


def loss_batch(batch: Batch, params: PiNetParams) -> Mat:
    """Cross-entropy summed over the batch (1x1)."""
    if len(batch) == 0:
        raise DomainError("loss_batch needs a non-empty batch")
    preds = [forward(g, params, m) for g, m in zip(batch.graphs, batch.masks)]
    return cross_entropy(vstack(preds), batch.labels)


def predict_class(params: PiNetParams, g: LabeledGraph) -> int:
    """Argmax class; ties break toward the lowest index."""
    return int(np.argmax(forward(g, params).data[0]))


def clamp_pq(params: PiNetParams) -> PiNetParams:
    """Project every p, q back into [0, 1] (no-op for in-range values)."""
    updates = {}
    for k in PQ_NAMES:
        v = params.values[k].item()
        c = min(1.0, max(0.0, v))
        if c != v:
            updates[k] = Mat.scalar(c)
    return params.replaced(updates) if updates else params


def grads_batch(batch: Batch, params: PiNetParams) -> tuple[float, dict[str, Mat]]:
    """One tape pass: batch loss value and gradients for the trainables."""
    tape = Tape()
    tracked = {k: tape.leaf(v, k) for k, v in params.trainables().items()}
    loss = loss_batch(batch, params.replaced(tracked))
    return loss.item(), backward(tape, loss)


CHECKPOINT_FORMAT = "pinet-checkpoint-v1"


def save_params(params: PiNetParams, path):
    """Write a JSON checkpoint; floats serialise at full precision, so a
    load restores bit-identical values."""
    cfg = params.config
    doc = {
        "format": CHECKPOINT_FORMAT,
        "config": {
            "d": cfg.d, "C": cfg.C, "F0": cfg.F0, "F1": cfg.F1,
            "attention_axis": cfg.attention_axis, "pq_mode": cfg.pq_mode,
            "fixed_p": cfg.fixed_p, "fixed_q": cfg.fixed_q, "seed": cfg.seed,
        },
        "weights": {
            k: {
                "rows": params.values[k].rows,
                "cols": params.values[k].cols,
                "data": params.values[k].data.reshape(-1).tolist(),
            }
            for k in WEIGHT_NAMES
        },
        "pq": {k: params.values[k].item() for k in PQ_NAMES},
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_params(path) -> PiNetParams:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise DataFormatError("not a valid checkpoint", path=str(path)) from e
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise DataFormatError(
            f"unsupported checkpoint format {doc.get('format')!r}", path=str(path)
        )
    config = PiNetConfig(**doc["config"])
    values: dict[str, Mat] = {}
    for k in WEIGHT_NAMES:
        w = doc["weights"][k]
        values[k] = Mat(np.asarray(w["data"]).reshape(w["rows"], w["cols"]))
    for k in PQ_NAMES:
        values[k] = Mat.scalar(doc["pq"][k])
    return PiNetParams(values, config)
