"""Bilingual equivalence graph and graph-reparameterized embedding table.

The graph ``G`` is the row-normalized alignment count matrix.  Each hop maps

    E_next = act(E @ W1 + G @ E @ W2 + B)

starting from the raw embedding table; ``gnn_backward`` returns exact
reverse-mode gradients of the final table with respect to ``E`` and every
layer's parameters.
"""
from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, MissingForwardCache

ACTIVATIONS = ("identity", "tanh", "relu")


class AlignmentGraph:
    def __init__(self, G: sp.csr_matrix):
        self.G = G.tocsr()

    @property
    def size(self):
        return self.G.shape[0]

    def dense(self):
        return self.G.toarray()

    def checksum(self) -> str:
        coo = self.G.tocoo()
        order = np.lexsort((coo.col, coo.row))
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(coo.row[order], dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(coo.col[order], dtype="<i8").tobytes())
        h.update(np.ascontiguousarray(coo.data[order], dtype="<f8").tobytes())
        return h.hexdigest()

    def save(self, path):
        coo = self.G.tocoo()
        order = np.lexsort((coo.col, coo.row))
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"size": self.size, "checksum": self.checksum()}, sort_keys=True) + "\n")
            for k in order:
                fh.write(f"{coo.row[k]}\t{coo.col[k]}\t{float(coo.data[k])!r}\n")

    @classmethod
    def load(cls, path) -> "AlignmentGraph":
        with open(path, encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            rows, cols, data = [], [], []
            for line in fh:
                i, j, g = line.split("\t")
                rows.append(int(i)); cols.append(int(j)); data.append(float(g))
        n = header["size"]
        graph = cls(sp.csr_matrix((data, (rows, cols)), shape=(n, n)))
        if graph.checksum() != header["checksum"]:
            raise ValueError(f"graph checksum mismatch in {path}")
        return graph


def build_graph(counts) -> AlignmentGraph:
    """Row-normalize a count matrix; all-zero rows stay zero."""
    c = counts.c if hasattr(counts, "c") else counts
    c = sp.csr_matrix(c, dtype=np.float64)
    totals = np.asarray(c.sum(axis=1)).ravel()
    inv = np.zeros_like(totals)
    np.divide(1.0, totals, out=inv, where=totals > 0)
    G = sp.diags(inv) @ c
    G.eliminate_zeros()
    G.sort_indices()
    return AlignmentGraph(G)


@dataclass
class GraphLayer:
    W1: np.ndarray
    W2: np.ndarray
    B: np.ndarray  # shape (d,) broadcast over rows, or (|V|, d)
    activation: str = "tanh"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


def _act(name, z):
    if name == "identity":
        return z
    if name == "tanh":
        return np.tanh(z)
    return np.maximum(z, 0.0)


def _act_grad(name, z, out):
    if name == "identity":
        return np.ones_like(z)
    if name == "tanh":
        return 1.0 - out * out
    return (z > 0).astype(np.float64)


@dataclass
class EmbeddingStack:
    E: np.ndarray
    layers: list = field(default_factory=list)
    cache: Optional[list] = None  # per hop: (E_h, G @ E_h, Z_h, E_{h+1})

    @property
    def hops(self):
        return len(self.layers)


def init_layers(d: int, H: int, seed: int, activation: str = "tanh",
                full_bias_rows: Optional[int] = None) -> list:
    """Glorot-uniform W1/W2 with limit sqrt(6 / 2d); zero bias."""
    if d < 1 or H < 0:
        raise ValueError("need d >= 1 and H >= 0")
    rng = np.random.default_rng(seed)
    limit = np.sqrt(6.0 / (2 * d))
    layers = []
    for _ in range(H):
        W1 = rng.uniform(-limit, limit, size=(d, d))
        W2 = rng.uniform(-limit, limit, size=(d, d))
        B = np.zeros(d) if full_bias_rows is None else np.zeros((full_bias_rows, d))
        layers.append(GraphLayer(W1, W2, B, activation))
    return layers


def _check(stack, graph):
    V, d = stack.E.shape
    if graph.size != V:
        raise DimensionMismatch(f"graph is {graph.size}x{graph.size}, embeddings have {V} rows")
    for h, L in enumerate(stack.layers):
        if L.W1.shape != (d, d) or L.W2.shape != (d, d):
            raise DimensionMismatch(f"hop {h}: weights must be {d}x{d}")
        if L.B.shape not in ((d,), (V, d)):
            raise DimensionMismatch(f"hop {h}: bias must be ({d},) or ({V}, {d})")


def gnn_forward(stack: EmbeddingStack, graph: AlignmentGraph, keep_cache: bool = True) -> np.ndarray:
    _check(stack, graph)
    G = graph.G
    cache = []
    Eh = stack.E
    for L in stack.layers:
        GE = G @ Eh
        Z = Eh @ L.W1 + GE @ L.W2 + L.B
        out = _act(L.activation, Z)
        cache.append((Eh, GE, Z, out))
        Eh = out
    stack.cache = cache if keep_cache else None
    return Eh


@dataclass
class Gradients:
    E: np.ndarray
    W1: list
    W2: list
    B: list


def gnn_backward(stack: EmbeddingStack, graph: AlignmentGraph, upstream: np.ndarray) -> Gradients:
    if stack.cache is None or len(stack.cache) != stack.hops:
        raise MissingForwardCache("run gnn_forward(keep_cache=True) first")
    if upstream.shape != stack.E.shape:
        raise DimensionMismatch("upstream gradient must match the embedding shape")
    GT = graph.G.T.tocsr()
    H = stack.hops
    dW1, dW2, dB = [None] * H, [None] * H, [None] * H
    g = np.array(upstream, dtype=np.float64)
    for h in range(H - 1, -1, -1):
        L = stack.layers[h]
        Eh, GE, Z, out = stack.cache[h]
        dZ = g * _act_grad(L.activation, Z, out)
        dW1[h] = Eh.T @ dZ
        dW2[h] = GE.T @ dZ
        dB[h] = dZ.sum(axis=0) if L.B.ndim == 1 else dZ.copy()
        g = dZ @ L.W1.T + GT @ (dZ @ L.W2.T)
    return Gradients(g, dW1, dW2, dB)


def gradcheck(stack: EmbeddingStack, graph: AlignmentGraph, upstream: np.ndarray,
              step: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients of
    ``sum(upstream * E_H)`` over every parameter entry."""
    gnn_forward(stack, graph)
    grads = gnn_backward(stack, graph, upstream)

    def loss():
        return float(np.sum(upstream * gnn_forward(stack, graph, keep_cache=False)))

    targets = [(stack.E, grads.E)]
    for h, L in enumerate(stack.layers):
        targets += [(L.W1, grads.W1[h]), (L.W2, grads.W2[h]), (L.B, grads.B[h])]
    worst = 0.0
    for param, analytic in targets:
        flat = param.reshape(-1)
        an = analytic.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + step
            up = loss()
            flat[k] = orig - step
            down = loss()
            flat[k] = orig
            num = (up - down) / (2 * step)
            denom = max(abs(num), abs(an[k]), 1e-8)
            worst = max(worst, abs(num - an[k]) / denom)
    return worst


# --- binary array container --------------------------------------------------------
# magic b"BFMX", uint32 count, then per array: uint32 ndim, uint64 dims..., doubles.
# All little-endian, row-major.

_MAGIC = b"BFMX"


def save_arrays(path, arrays) -> None:
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(arrays)))
        for a in arrays:
            a = np.ascontiguousarray(a, dtype="<f8")
            fh.write(struct.pack("<I", a.ndim))
            fh.write(struct.pack(f"<{a.ndim}Q", *a.shape))
            fh.write(a.tobytes(order="C"))


def load_arrays(path) -> list:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != _MAGIC:
        raise ValueError(f"{path}: not an array container")
    (count,) = struct.unpack_from("<I", blob, 4)
    off = 8
    out = []
    for _ in range(count):
        (ndim,) = struct.unpack_from("<I", blob, off)
        off += 4
        shape = struct.unpack_from(f"<{ndim}Q", blob, off)
        off += 8 * ndim
        n = int(np.prod(shape)) if ndim else 1
        out.append(np.frombuffer(blob, dtype="<f8", count=n, offset=off).reshape(shape).astype(np.float64))
        off += 8 * n
    return out


def save_layers(path, layers) -> None:
    arrays = []
    for L in layers:
        arrays += [L.W1, L.W2, L.B]
    meta = json.dumps([L.activation for L in layers])
    save_arrays(path, arrays)
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        fh.write(meta + "\n")


def load_layers(path) -> list:
    arrays = load_arrays(path)
    with open(str(path) + ".json", encoding="utf-8") as fh:
        acts = json.load(fh)
    return [GraphLayer(arrays[3 * h], arrays[3 * h + 1], arrays[3 * h + 2], a) for h, a in enumerate(acts)]
