"""Network families for quantum-walk search and their graph Laplacians.

Three families are supported: the complete graph, hypercubic lattices
(periodic or open), and Migdal-Kadanoff hierarchical lattices with
rescaling length 2.  Hierarchical sites are numbered in creation order,
so every hierarchy level occupies a contiguous index range.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

MK_SIZE_GUARD = 50_000


class NetworkError(ValueError):
    """Invalid network parameters or malformed network input."""


class DisconnectedGraphError(NetworkError):
    pass


class Family(str, enum.Enum):
    COMPLETE = "Complete"
    HYPERCUBIC = "HypercubicPeriodic"
    MK = "MKHierarchical"


@dataclass(frozen=True)
class NetworkDescriptor:
    family: Family
    b: int | None = None
    l: int | None = None
    g: int | None = None
    dims: tuple[int, ...] | None = None
    periodic: bool = True
    n: int | None = None

    @property
    def d_nominal(self) -> float:
        if self.family is Family.MK:
            return 1.0 + math.log(self.b, self.l)
        if self.family is Family.HYPERCUBIC:
            return float(len(self.dims))
        return math.inf

    @property
    def d_s_nominal(self) -> float:
        return self.d_nominal

    def params(self) -> dict[str, object]:
        if self.family is Family.COMPLETE:
            return {"n": self.n}
        if self.family is Family.HYPERCUBIC:
            return {"sides": list(self.dims), "periodic": self.periodic}
        return {"b": self.b, "l": self.l, "g": self.g}

    def params_text(self) -> str:
        if self.family is Family.COMPLETE:
            return f"n={self.n}"
        if self.family is Family.HYPERCUBIC:
            sides = "x".join(str(s) for s in self.dims)
            return f"sides={sides} periodic={int(self.periodic)}"
        return f"b={self.b} l={self.l} g={self.g}"


@dataclass(frozen=True)
class Network:
    n_sites: int
    edges: np.ndarray
    descriptor: NetworkDescriptor | None = None
    site_level: np.ndarray | None = field(default=None)

    def __post_init__(self):
        self.edges.setflags(write=False)
        if self.site_level is not None:
            self.site_level.setflags(write=False)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.n_sites)

    def level_sites(self, level: int) -> np.ndarray:
        if self.site_level is None:
            raise NetworkError("network carries no hierarchy levels")
        return np.flatnonzero(self.site_level == level)

    def level_ranges(self) -> list[tuple[int, int, int]]:
        """Return ``(start, stop, level)`` half-open index runs."""
        if self.site_level is None:
            return []
        runs = []
        lev = self.site_level
        start = 0
        for i in range(1, len(lev) + 1):
            if i == len(lev) or lev[i] != lev[start]:
                runs.append((start, i, int(lev[start])))
                start = i
        return runs

    def representative_site(self) -> int:
        """A typical target: the first site of the highest hierarchy level."""
        if self.site_level is None:
            return 0
        return int(self.level_sites(int(self.site_level.max()))[0])


def mk_site_count(b: int, g: int) -> int:
    # exact integer form of 2 + b/(2b-1) * ((2b)^g - 1)
    return 2 + b * ((2 * b) ** g - 1) // (2 * b - 1)


def complete_graph(n: int) -> Network:
    if n < 2:
        raise NetworkError(f"complete graph needs n >= 2, got {n}")
    i, j = np.triu_indices(n, k=1)
    edges = np.column_stack([i, j]).astype(np.int64)
    return Network(n, edges, NetworkDescriptor(Family.COMPLETE, n=n))


def hypercubic_lattice(sides: Iterable[int], periodic: bool = True) -> Network:
    sides = tuple(int(s) for s in sides)
    if not sides:
        raise NetworkError("lattice needs at least one axis")
    minimum = 3 if periodic else 2
    if any(s < minimum for s in sides):
        raise NetworkError(
            f"lattice sides must be >= {minimum} ({'periodic' if periodic else 'open'}), got {list(sides)}"
        )
    n = math.prod(sides)
    index = np.arange(n).reshape(sides)
    chunks = []
    for axis, side in enumerate(sides):
        if periodic:
            nbr = np.roll(index, -1, axis=axis)
            chunks.append(np.column_stack([index.ravel(), nbr.ravel()]))
        else:
            lo = np.take(index, np.arange(side - 1), axis=axis)
            hi = np.take(index, np.arange(1, side), axis=axis)
            chunks.append(np.column_stack([lo.ravel(), hi.ravel()]))
    edges = np.sort(np.concatenate(chunks), axis=1).astype(np.int64)
    edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    desc = NetworkDescriptor(Family.HYPERCUBIC, dims=sides, periodic=periodic)
    return Network(n, edges, desc)


def mk_hierarchical(b: int, g: int, size_guard: int = MK_SIZE_GUARD) -> Network:
    """Build the l=2 Migdal-Kadanoff hierarchical lattice by inverse RG.

    Starting from one bond between two roots, every bond of generation
    ``k-1`` is replaced by ``b`` parallel two-bond paths through fresh
    midpoints labelled with level ``k``.
    """
    if b < 2:
        raise NetworkError(f"MK lattice needs b >= 2, got {b}")
    if g < 0:
        raise NetworkError(f"MK lattice needs g >= 0, got {g}")
    n_total = mk_site_count(b, g)
    if n_total > size_guard:
        warnings.warn(f"MK lattice b={b} g={g} has {n_total} sites (guard {size_guard})", stacklevel=2)

    edges = np.array([[0, 1]], dtype=np.int64)
    levels = [np.zeros(2, dtype=np.int64)]
    n = 2
    for k in range(1, g + 1):
        n_new = b * len(edges)
        mids = (n + np.arange(n_new)).reshape(len(edges), b)
        u = np.repeat(edges[:, 0], b)
        v = np.repeat(edges[:, 1], b)
        m = mids.ravel()
        # per old bond: branch paths u-m and m-v, in branch order
        edges = np.stack([np.column_stack([u, m]), np.column_stack([m, v])], axis=1).reshape(-1, 2)
        levels.append(np.full(n_new, k, dtype=np.int64))
        n += n_new
    assert n == n_total
    desc = NetworkDescriptor(Family.MK, b=b, l=2, g=g)
    return Network(n, edges, desc, np.concatenate(levels))


def network_from_descriptor(desc: NetworkDescriptor) -> Network:
    if desc.family is Family.COMPLETE:
        return complete_graph(desc.n)
    if desc.family is Family.HYPERCUBIC:
        return hypercubic_lattice(desc.dims, desc.periodic)
    return mk_hierarchical(desc.b, desc.g)


@dataclass(frozen=True)
class LaplacianMatrix:
    """Sparse combinatorial Laplacian ``D - A`` of a connected network."""

    matrix: sp.csr_matrix

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


def is_connected(net: Network) -> bool:
    adj = _adjacency(net)
    n_comp, _ = connected_components(adj, directed=False)
    return n_comp == 1


def _adjacency(net: Network) -> sp.csr_matrix:
    u, v = net.edges[:, 0], net.edges[:, 1]
    data = np.ones(2 * len(u))
    adj = sp.coo_matrix((data, (np.r_[u, v], np.r_[v, u])), shape=(net.n_sites, net.n_sites))
    return adj.tocsr()


def laplacian(net: Network) -> LaplacianMatrix:
    if np.any(net.edges[:, 0] == net.edges[:, 1]):
        raise NetworkError("self-loops are not allowed")
    adj = _adjacency(net)
    n_comp, _ = connected_components(adj, directed=False)
    if n_comp != 1:
        raise DisconnectedGraphError(f"network has {n_comp} connected components")
    deg = np.asarray(adj.sum(axis=1)).ravel()
    lap = (sp.diags(deg) - adj).tocsr()
    lap.sort_indices()
    return LaplacianMatrix(lap)


# ---------------------------------------------------------------------------
# edge-list text format

def from_edges(n: int, edges) -> Network:
    """Ad hoc network without a family descriptor."""
    edges = np.sort(np.asarray(edges, dtype=np.int64).reshape(-1, 2), axis=1)
    if len({tuple(e) for e in edges.tolist()}) != len(edges):
        raise NetworkError("duplicate edges")
    return Network(n, edges)


def write_network(net: Network, fh: TextIO) -> None:
    d = net.descriptor
    if d is None:
        raise NetworkError("only family networks can be serialised")
    fh.write(f"N {net.n_sites} FAMILY {d.family.value} PARAMS {d.params_text()}\n")
    runs = net.level_ranges()
    fh.write(f"LEVELS {len(runs)}\n")
    for start, stop, level in runs:
        fh.write(f"{start} {stop} {level}\n")
    fh.write("".join(f"{u} {v}\n" for u, v in net.edges.tolist()))


def save_network(net: Network, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_network(net, fh)


def _parse_params(tokens: list[str]) -> dict[str, str]:
    out = {}
    for tok in tokens:
        key, _, value = tok.partition("=")
        if not _:
            raise NetworkError(f"malformed PARAMS token {tok!r}")
        out[key] = value
    return out


def read_network(fh: TextIO) -> Network:
    header = fh.readline().split()
    if len(header) < 5 or header[0] != "N" or header[2] != "FAMILY" or header[4] != "PARAMS":
        raise NetworkError(f"bad header: {' '.join(header)!r}")
    n = int(header[1])
    try:
        family = Family(header[3])
    except ValueError:
        raise NetworkError(f"unknown family {header[3]!r}") from None
    params = _parse_params(header[5:])
    lev_line = fh.readline().split()
    if len(lev_line) != 2 or lev_line[0] != "LEVELS":
        raise NetworkError("missing LEVELS block")
    levels = None
    n_runs = int(lev_line[1])
    if n_runs:
        levels = np.full(n, -1, dtype=np.int64)
        for _ in range(n_runs):
            start, stop, level = map(int, fh.readline().split())
            levels[start:stop] = level
        if np.any(levels < 0):
            raise NetworkError("LEVELS block does not cover every site")
    edges = np.loadtxt(fh, dtype=np.int64, ndmin=2).reshape(-1, 2)

    if family is Family.COMPLETE:
        desc = NetworkDescriptor(family, n=int(params["n"]))
    elif family is Family.HYPERCUBIC:
        dims = tuple(int(s) for s in params["sides"].split("x"))
        desc = NetworkDescriptor(family, dims=dims, periodic=bool(int(params.get("periodic", "1"))))
    else:
        desc = NetworkDescriptor(family, b=int(params["b"]), l=int(params.get("l", 2)), g=int(params["g"]))
    if edges.size and (edges.min() < 0 or edges.max() >= n):
        raise NetworkError("edge endpoint out of range")
    return Network(n, edges, desc, levels)


def load_network(path: str | Path) -> Network:
    with open(path, encoding="utf-8") as fh:
        return read_network(fh)
