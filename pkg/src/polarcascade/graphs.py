"""Networks the agent model runs on.

Nodes are integers ``0..N-1``; ``party[v]`` is 0 for blue and 1 for red.
Explicit graphs store adjacency in CSR form (``indptr``, ``indices``) with
each neighbor list sorted. Complete graphs are kept implicit, since an
explicit N=10,000 complete graph would need ~10^8 neighbor entries.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

BLUE, RED = 0, 1

# rows sampled per block when drawing SBM edges; fixed so output is seed-stable
_SBM_BLOCK_ROWS = 512


class NetworkFormatError(ValueError):
    """Malformed network file; carries the path and 1-based line number."""

    def __init__(self, path, line, message):
        self.path, self.line = str(path), line
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


class Network:
    """Immutable undirected graph with a static blue/red partition."""

    def __init__(self, party, indptr=None, indices=None, *, complete=False):
        party = np.asarray(party, dtype=np.int8)
        if party.ndim != 1 or len(party) < 2:
            raise ValueError("a network needs at least 2 nodes")
        if not np.all((party == BLUE) | (party == RED)):
            raise ValueError("party labels must be 0 (blue) or 1 (red)")
        self.party = _frozen(party)
        self.complete = bool(complete)
        n = len(party)
        if self.complete:
            self.indptr = self.indices = None
            self.degree = _frozen(np.full(n, n - 1, dtype=np.int64))
        else:
            indptr = np.asarray(indptr, dtype=np.int64)
            indices = np.asarray(indices, dtype=np.int32)
            if len(indptr) != n + 1 or indptr[0] != 0 or indptr[-1] != len(indices):
                raise ValueError("inconsistent CSR arrays")
            self.indptr = _frozen(indptr)
            self.indices = _frozen(indices)
            self.degree = _frozen(np.diff(indptr))

    @property
    def n(self) -> int:
        return len(self.party)

    @property
    def n_red(self) -> int:
        return int(self.party.sum())

    @property
    def n_blue(self) -> int:
        return self.n - self.n_red

    @property
    def red_fraction(self) -> float:
        return self.n_red / self.n

    @property
    def n_edges(self) -> int:
        return int(self.degree.sum()) // 2

    def neighbors(self, v: int) -> np.ndarray:
        if self.complete:
            return np.delete(np.arange(self.n, dtype=np.int32), v)
        return self.indices[self.indptr[v]:self.indptr[v + 1]]

    def edges(self) -> np.ndarray:
        """All edges as an (E, 2) array with u < v, lexicographically sorted."""
        if self.complete:
            u, v = np.triu_indices(self.n, k=1)
            return np.column_stack([u, v]).astype(np.int64)
        src = np.repeat(np.arange(self.n, dtype=np.int64), self.degree)
        dst = self.indices.astype(np.int64)
        keep = src < dst
        return np.column_stack([src[keep], dst[keep]])

    def csr(self) -> tuple[np.ndarray, np.ndarray]:
        """Explicit CSR arrays (materialises complete graphs)."""
        if not self.complete:
            return self.indptr, self.indices
        n = self.n
        indptr = np.arange(n + 1, dtype=np.int64) * (n - 1)
        full = np.tile(np.arange(n, dtype=np.int32), n).reshape(n, n)
        mask = ~np.eye(n, dtype=bool)
        return indptr, full[mask]

    def __eq__(self, other):
        if not isinstance(other, Network):
            return NotImplemented
        if self.n != other.n or not np.array_equal(self.party, other.party):
            return False
        if self.complete and other.complete:
            return True
        if self.n_edges != other.n_edges:
            return False
        a, b = self.csr(), other.csr()
        return np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def __repr__(self):
        kind = "complete" if self.complete else f"{self.n_edges} edges"
        return f"Network(n_blue={self.n_blue}, n_red={self.n_red}, {kind})"

    def check_invariants(self) -> None:
        """Raise AssertionError unless adjacency is symmetric, simple and sorted."""
        if self.complete:
            return
        for v in range(self.n):
            nb = self.neighbors(v)
            assert np.all(np.diff(nb) > 0), f"node {v}: neighbors unsorted or repeated"
            assert v not in nb, f"node {v}: self loop"
        e = self.edges()
        indptr, indices = self.indptr, self.indices
        for u, v in e:
            row = indices[indptr[v]:indptr[v + 1]]
            i = np.searchsorted(row, u)
            assert i < len(row) and row[i] == u, f"edge ({u},{v}) not symmetric"
        assert 2 * len(e) == len(indices), "asymmetric adjacency"


def _party_array(n_blue: int, n_red: int) -> np.ndarray:
    if n_blue < 0 or n_red < 0 or n_blue + n_red < 2:
        raise ValueError(f"need n_blue + n_red >= 2, got {n_blue} + {n_red}")
    # blue nodes first
    return np.concatenate([np.zeros(n_blue, np.int8), np.ones(n_red, np.int8)])


def from_edges(party, edges) -> Network:
    """Build an explicit network from an (E, 2) array of undirected edges."""
    party = np.asarray(party, dtype=np.int8)
    n = len(party)
    e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    src = np.concatenate([e[:, 0], e[:, 1]])
    dst = np.concatenate([e[:, 1], e[:, 0]])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return Network(party, indptr, dst.astype(np.int32))


def generate_complete(n_blue: int, n_red: int) -> Network:
    return Network(_party_array(n_blue, n_red), complete=True)


def generate_sbm(n_blue: int, n_red: int, rho: float, seed: int) -> Network:
    """Dense two-block SBM: same-party pairs link w.p. rho, cross pairs w.p. 1-rho.

    Memory is O(N^2 / 8) bytes while sampling plus O(edges) for the result.
    """
    if not (0.0 < rho < 1.0):
        raise ValueError(f"rho={rho!r} outside legal range (0, 1)")
    party = _party_array(n_blue, n_red)
    n = len(party)
    rng = np.random.default_rng(seed)
    is_red = party.astype(bool)
    indptr = np.zeros(n + 1, dtype=np.int64)
    upper_rows = []
    for start in range(0, n, _SBM_BLOCK_ROWS):
        stop = min(n, start + _SBM_BLOCK_ROWS)
        same = is_red[start:stop, None] == is_red[None, :]
        prob = np.where(same, rho, 1.0 - rho)
        draw = rng.random((stop - start, n)) < prob
        # keep only pairs (i, j) with j > i; the lower triangle is mirrored below
        draw &= np.arange(n)[None, :] > np.arange(start, stop)[:, None]
        upper_rows.append(np.packbits(draw, axis=1))
    upper = np.unpackbits(np.concatenate(upper_rows), axis=1, count=n).astype(bool)
    del upper_rows
    chunks = []
    for start in range(0, n, _SBM_BLOCK_ROWS):
        stop = min(n, start + _SBM_BLOCK_ROWS)
        rows = upper[start:stop] | upper[:, start:stop].T
        r_idx, c_idx = np.nonzero(rows)
        indptr[start + 1:stop + 1] = np.bincount(r_idx, minlength=stop - start)
        chunks.append(c_idx.astype(np.int32))
    del upper
    np.cumsum(indptr, out=indptr)
    return Network(party, indptr, np.concatenate(chunks))


def _pair_counts(net: Network) -> tuple[int, int]:
    nb, nr = net.n_blue, net.n_red
    return nb * (nb - 1) // 2 + nr * (nr - 1) // 2, nb * nr


def edge_counts(net: Network) -> tuple[int, int]:
    """(same-party edges, cross-party edges)."""
    if net.complete:
        return _pair_counts(net)
    e = net.edges()
    same = int(np.count_nonzero(net.party[e[:, 0]] == net.party[e[:, 1]]))
    return same, len(e) - same


def homophily_estimate(net: Network) -> float:
    """Estimate rho as in-group density / (in-group density + cross density).

    This is the maximum-likelihood rho when the in-group and cross-group
    link probabilities are proportional to rho and 1-rho.
    """
    m_in, m_out = edge_counts(net)
    if m_in + m_out == 0:
        raise ValueError("homophily is undefined for an edgeless graph")
    p_in, p_out = _pair_counts(net)
    if p_in == 0 or p_out == 0:
        raise ValueError("homophily needs both same-party and cross-party pairs")
    d_in, d_out = m_in / p_in, m_out / p_out
    return d_in / (d_in + d_out)


# -- files -----------------------------------------------------------------

def _data_lines(path: Path):
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise NetworkFormatError(path, None, f"cannot read file ({exc.strerror})")
    except UnicodeDecodeError:
        raise NetworkFormatError(path, None, "not UTF-8 text")
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _int_pair(path, lineno, fields):
    if len(fields) != 2:
        raise NetworkFormatError(path, lineno, f"expected 2 fields, got {len(fields)}")
    try:
        return int(fields[0]), int(fields[1])
    except ValueError:
        raise NetworkFormatError(path, lineno, f"non-integer field in {' '.join(fields)!r}")


def load_network(edge_file, party_file) -> Network:
    """Read an edge list and a party file.

    Edges may be listed once per pair or once in each direction, but not a
    mix: when some pair appears in both directions, every pair must.
    """
    edge_file, party_file = Path(edge_file), Path(party_file)
    labels: dict[int, int] = {}
    for lineno, fields in _data_lines(party_file):
        node, label = _int_pair(party_file, lineno, fields)
        if label not in (0, 1):
            raise NetworkFormatError(party_file, lineno, f"label {label} not in {{0, 1}}")
        if node < 0:
            raise NetworkFormatError(party_file, lineno, f"negative node id {node}")
        if node in labels:
            raise NetworkFormatError(party_file, lineno, f"node {node} labelled twice")
        labels[node] = label
    n = max(labels) + 1 if labels else 0
    if n < 2:
        raise NetworkFormatError(party_file, None, "need at least 2 labelled nodes")
    missing = [v for v in range(n) if v not in labels]
    if missing:
        raise NetworkFormatError(party_file, None, f"node id {missing[0]} has no party label")
    party = np.array([labels[v] for v in range(n)], dtype=np.int8)

    directed: dict[tuple[int, int], int] = {}
    for lineno, fields in _data_lines(edge_file):
        u, v = _int_pair(edge_file, lineno, fields)
        for node in (u, v):
            if not 0 <= node < n:
                raise NetworkFormatError(edge_file, lineno, f"dangling node id {node}")
        if u == v:
            raise NetworkFormatError(edge_file, lineno, f"self loop on node {u}")
        if (u, v) in directed:
            raise NetworkFormatError(edge_file, lineno, f"duplicate edge ({u}, {v})")
        directed[(u, v)] = lineno
    both = [p for p in directed if (p[1], p[0]) in directed]
    if both and len(both) != len(directed):
        for (u, v), lineno in directed.items():
            if (v, u) not in directed:
                raise NetworkFormatError(
                    edge_file, lineno, f"asymmetric edges: ({u}, {v}) has no reverse ({v}, {u})")
    pairs = {(min(u, v), max(u, v)) for u, v in directed}
    edges = np.array(sorted(pairs), dtype=np.int64).reshape(-1, 2)
    if len(edges) == n * (n - 1) // 2:
        return Network(party, complete=True)
    return from_edges(party, edges)


def save_network(net: Network, edge_file, party_file) -> None:
    edge_file, party_file = Path(edge_file), Path(party_file)
    with party_file.open("w", encoding="utf-8") as fh:
        fh.write("# node_id label (0=blue, 1=red)\n")
        for v, label in enumerate(net.party):
            fh.write(f"{v} {int(label)}\n")
    with edge_file.open("w", encoding="utf-8") as fh:
        fh.write(f"# undirected edge list, {net.n} nodes, {net.n_edges} edges\n")
        for u, v in net.edges():
            fh.write(f"{u} {v}\n")


def build_network(topology: str, n_blue: int, n_red: int, rho: float = 0.5,
                  seed: int = 0) -> Network:
    """Construct the network named by a topology string (``complete``/``sbm``)."""
    if topology == "complete":
        return generate_complete(n_blue, n_red)
    if topology == "sbm":
        return generate_sbm(n_blue, n_red, rho, seed)
    raise ValueError(f"unknown topology {topology!r}")
