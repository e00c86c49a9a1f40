"""Top-down TreeLSTM cell, tree unfolding, and the two output heads.

The cell is a standard LSTM unit whose recurrent input is the parent's
hidden and memory states, unfolded root-to-leaves:

    r = tanh(Wr x + Ur h_pa + br)
    i = sigmoid(Wi x + Ui h_pa + bi)
    o = sigmoid(Wo x + Uo h_pa + bo)
    f = sigmoid(Wf x + Uf h_pa + bf)
    c = i * r + f * c_pa
    h = o * tanh(c)

The root's parent states are zero vectors. Output heads fire at leaves
only and read both h and c; head weights are shared across nodes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .encoding import EmbeddingTable
from .tree import Tree

GATES = ("r", "i", "o", "f")

BINARY = "binary"
VECTORIAL = "vectorial"


class DimensionMismatchError(ValueError):
    pass


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass
class CellParameters:
    """Gate weights: per gate g, W[g] (d_h, d_in), U[g] (d_h, d_h), b[g] (d_h,)."""

    w: dict[str, np.ndarray]
    u: dict[str, np.ndarray]
    b: dict[str, np.ndarray]

    def __post_init__(self):
        d_h, d_in = self.w["r"].shape
        for g in GATES:
            if (
                self.w[g].shape != (d_h, d_in)
                or self.u[g].shape != (d_h, d_h)
                or self.b[g].shape != (d_h,)
            ):
                raise DimensionMismatchError(f"inconsistent shapes at gate {g}")

    @property
    def d_h(self) -> int:
        return self.w["r"].shape[0]

    @property
    def d_in(self) -> int:
        return self.w["r"].shape[1]


@dataclass
class HeadParameters:
    """Affine output head; ``kind`` selects sigmoid/binary vs raw/vectorial."""

    kind: str
    wh: np.ndarray  # (d_out, d_h)
    wc: np.ndarray  # (d_out, d_h)
    b: np.ndarray  # (d_out,)

    def __post_init__(self):
        if self.kind not in (BINARY, VECTORIAL):
            raise ValueError(f"unknown head kind {self.kind!r}")
        d_out, d_h = self.wh.shape
        if self.kind == BINARY and d_out != 1:
            raise DimensionMismatchError("binary head must have d_out == 1")
        if self.wc.shape != (d_out, d_h) or self.b.shape != (d_out,):
            raise DimensionMismatchError("head shapes disagree")

    @property
    def d_out(self) -> int:
        return self.wh.shape[0]


@dataclass
class ModelParameters:
    cell: CellParameters
    head: HeadParameters
    # Bumped by in-place optimizer updates so stale forward caches are caught.
    version: int = 0

    def tensors(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for g in GATES:
            out.append((f"cell.w.{g}", self.cell.w[g]))
            out.append((f"cell.u.{g}", self.cell.u[g]))
            out.append((f"cell.b.{g}", self.cell.b[g]))
        out.append(("head.wh", self.head.wh))
        out.append(("head.wc", self.head.wc))
        out.append(("head.b", self.head.b))
        return out

    def weight_matrix_names(self) -> list[str]:
        return [n for n, _ in self.tensors() if not n.split(".")[1] == "b"]

    def clone(self) -> "ModelParameters":
        return ModelParameters(
            cell=CellParameters(
                w={g: self.cell.w[g].copy() for g in GATES},
                u={g: self.cell.u[g].copy() for g in GATES},
                b={g: self.cell.b[g].copy() for g in GATES},
            ),
            head=HeadParameters(
                kind=self.head.kind,
                wh=self.head.wh.copy(),
                wc=self.head.wc.copy(),
                b=self.head.b.copy(),
            ),
            version=self.version,
        )


def init_parameters(
    d_in: int,
    d_h: int,
    head_kind: str,
    d_out: int | None = None,
    seed: int = 0,
    forget_bias: float = 1.0,
) -> ModelParameters:
    """Glorot-uniform matrices, zero biases, forget-gate bias offset."""
    rng = np.random.default_rng(seed)

    def glorot(rows, cols):
        limit = np.sqrt(6.0 / (rows + cols))
        return rng.uniform(-limit, limit, size=(rows, cols))

    cell = CellParameters(
        w={g: glorot(d_h, d_in) for g in GATES},
        u={g: glorot(d_h, d_h) for g in GATES},
        b={g: np.zeros(d_h) for g in GATES},
    )
    cell.b["f"] += forget_bias
    if head_kind == BINARY:
        d_out = 1
    elif d_out is None:
        raise DimensionMismatchError("vectorial head needs an output dimension")
    head = HeadParameters(
        kind=head_kind,
        wh=glorot(d_out, d_h),
        wc=glorot(d_out, d_h),
        b=np.zeros(d_out),
    )
    return ModelParameters(cell=cell, head=head)


@dataclass
class NodeStates:
    """Per-node forward results with cached gate activations for backprop."""

    h: np.ndarray  # (U, d_h)
    c: np.ndarray
    r: np.ndarray
    i: np.ndarray
    o: np.ndarray
    f: np.ndarray
    params_version: int = 0


def cell_forward(
    x: np.ndarray, h_pa: np.ndarray, c_pa: np.ndarray, p: CellParameters
) -> tuple[np.ndarray, np.ndarray, dict[str, np.ndarray]]:
    if x.shape != (p.d_in,) or h_pa.shape != (p.d_h,) or c_pa.shape != (p.d_h,):
        raise DimensionMismatchError(
            f"expected x ({p.d_in},) and states ({p.d_h},), "
            f"got {x.shape}, {h_pa.shape}, {c_pa.shape}"
        )
    r = np.tanh(p.w["r"] @ x + p.u["r"] @ h_pa + p.b["r"])
    i = _sigmoid(p.w["i"] @ x + p.u["i"] @ h_pa + p.b["i"])
    o = _sigmoid(p.w["o"] @ x + p.u["o"] @ h_pa + p.b["o"])
    f = _sigmoid(p.w["f"] @ x + p.u["f"] @ h_pa + p.b["f"])
    c = i * r + f * c_pa
    h = o * np.tanh(c)
    return h, c, {"r": r, "i": i, "o": o, "f": f}


def unfold(t: Tree, encodings: np.ndarray, params: ModelParameters) -> NodeStates:
    """Run the cell over the tree in parents-first order.

    Each node's state depends only on its label and its root path; the
    root uses zero parent states.
    """
    p = params.cell
    n = len(t)
    if encodings.shape != (n, p.d_in):
        raise DimensionMismatchError(
            f"encodings shape {encodings.shape} != ({n}, {p.d_in})"
        )
    st = NodeStates(
        h=np.zeros((n, p.d_h)),
        c=np.zeros((n, p.d_h)),
        r=np.zeros((n, p.d_h)),
        i=np.zeros((n, p.d_h)),
        o=np.zeros((n, p.d_h)),
        f=np.zeros((n, p.d_h)),
        params_version=params.version,
    )
    zero = np.zeros(p.d_h)
    for u in t.topdown_order():
        pa = t.parents[u]
        h_pa = st.h[pa] if pa is not None else zero
        c_pa = st.c[pa] if pa is not None else zero
        h, c, gates = cell_forward(encodings[u], h_pa, c_pa, p)
        st.h[u], st.c[u] = h, c
        for g in GATES:
            getattr(st, g)[u] = gates[g]
    return st


def binary_head(h: np.ndarray, c: np.ndarray, hp: HeadParameters) -> float:
    """Keep probability sigma(Wh h + Wc c + b) for one leaf."""
    if hp.kind != BINARY:
        raise DimensionMismatchError("binary_head called with a vectorial head")
    z = hp.wh @ h + hp.wc @ c + hp.b
    return float(_sigmoid(z)[0])


def vectorial_head(h: np.ndarray, c: np.ndarray, hp: HeadParameters) -> np.ndarray:
    """Affine word-vector output Wh h + Wc c + b for one leaf (no nonlinearity)."""
    if hp.kind != VECTORIAL:
        raise DimensionMismatchError("vectorial_head called with a binary head")
    return hp.wh @ h + hp.wc @ c + hp.b


def null_vector(dimension: int) -> np.ndarray:
    """The deleted-word stand-in: all entries equal to 1."""
    return np.ones(dimension)


def nearest_word(
    v: np.ndarray, table: EmbeddingTable, null_vec: np.ndarray | None = None
) -> str | None:
    """Closest vocabulary word by cosine similarity, or None for NULL.

    Ties go to the lowest vocabulary index; NULL loses ties. A zero output
    vector has no defined direction and maps to NULL with a warning.
    Zero-norm candidate rows (e.g. UNK) never win.
    """
    if null_vec is None:
        null_vec = null_vector(table.dimension)
    if v.shape != (table.dimension,):
        raise DimensionMismatchError(
            f"vector dim {v.shape} != table dim {table.dimension}"
        )
    v_norm = np.linalg.norm(v)
    if v_norm == 0.0:
        warnings.warn("zero output vector: cosine undefined, decoding as NULL")
        return None
    norms = np.linalg.norm(table.matrix, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    sims = (table.matrix @ v) / (safe * v_norm)
    sims[norms == 0.0] = -np.inf
    best = int(np.argmax(sims))
    sim_null = float(null_vec @ v) / (np.linalg.norm(null_vec) * v_norm)
    if sim_null > sims[best]:
        return None
    return table.vocab.words[best]


def predict_mask(
    t: Tree,
    encodings: np.ndarray,
    params: ModelParameters,
    *,
    threshold: float = 0.5,
    table: EmbeddingTable | None = None,
) -> list[int]:
    """Forward the tree and decide keep/delete at every leaf.

    Binary head: keep iff probability >= threshold (ties keep). Vectorial
    head: keep iff the nearest dictionary vector is a word, not NULL.
    """
    st = unfold(t, encodings, params)
    mask = []
    for u in t.leaves():
        if params.head.kind == BINARY:
            prob = binary_head(st.h[u], st.c[u], params.head)
            mask.append(1 if prob >= threshold else 0)
        else:
            if table is None:
                raise DimensionMismatchError(
                    "vectorial decoding needs an embedding table"
                )
            out = vectorial_head(st.h[u], st.c[u], params.head)
            word = nearest_word(out, table)
            mask.append(0 if word is None else 1)
    return mask
