"""Finite-length Tanner graph realisation and systematic GF(2) encoding.

Graphs are built by progressive edge growth over apportioned degree
sequences; encoders come from a one-off bit-packed Gaussian elimination of
the parity-check matrix with a column permutation that keeps a caller-chosen
set of positions (the eventual secret bits) out of the parity block.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._peg import _peg_place
from .ensembles import Ensemble, check_node_perspective, code_rate, node_perspective


class GraphConstructionError(RuntimeError):
    """Degree sequence cannot be realised."""


class EncodingError(RuntimeError):
    """Parity-check matrix unsuitable for systematic encoding."""


def _floor_counts(fractions: dict[int, float], total: int):
    quotas = {d: fractions[d] * total for d in fractions}
    floors = {d: int(np.floor(q)) for d, q in quotas.items()}
    extras = total - sum(floors.values())
    remainders = {d: quotas[d] - floors[d] for d in quotas}
    return floors, extras, remainders


def _subset_sums(degrees: list[int], size: int):
    """All size-`size` degree subsets keyed by their edge sum (D <= 20)."""
    from itertools import combinations

    out: dict[int, tuple[int, ...]] = {}
    for combo in combinations(degrees, size):
        out.setdefault(sum(combo), combo)
    return out


def _apportion_with_edge_target(fractions, total, target_edges):
    """Floor counts plus a +1 subset chosen to land the edge total near the
    target; every count stays within one node of its quota."""
    floors, extras, remainders = _floor_counts(fractions, total)
    degrees = sorted(floors)
    if len(degrees) > 20:
        raise GraphConstructionError("too many distinct degrees to apportion")
    base_edges = sum(d * c for d, c in floors.items())
    want = target_edges - base_edges
    candidates = []
    for s, combo in _subset_sums(degrees, extras).items():
        fairness = sum(remainders[d] for d in combo)
        candidates.append((abs(s - want), -fairness, combo, s))
    candidates.sort()
    results = []
    for _, _, combo, s in candidates:
        counts = dict(floors)
        for d in combo:
            counts[d] += 1
        results.append((counts, base_edges + s))
    return results


def _pick_balanced_counts(ens: Ensemble, n_vars: int):
    """Variable and check counts with exactly matching edge totals.

    First tries count vectors within one node of every quota; if no edge
    total is reachable on both sides, one extra swap between two variable
    degrees is allowed (still within the two-node tolerance).
    """
    from .ensembles import check_node_perspective, node_perspective

    ideal_edges = round(n_vars / ens.inv_avg_var_degree())
    var_options = _apportion_with_edge_target(node_perspective(ens), n_vars, ideal_edges)
    chk_fr = check_node_perspective(ens)
    inv_chk = ens.inv_avg_chk_degree()

    def chk_match(e_var):
        for m in sorted({round(e_var * inv_chk) + d for d in (-1, 0, 1)}):
            if m <= 0:
                continue
            for chk_counts, e_chk in _apportion_with_edge_target(chk_fr, m, e_var)[:40]:
                if e_chk == e_var:
                    return chk_counts, m
        return None

    lnode = node_perspective(ens)
    degrees = sorted(ens.var_edge)

    def swaps_of(counts, e_base):
        for a in degrees:
            if counts.get(a, 0) <= 0 or counts[a] - 1 < lnode[a] * n_vars - 2:
                continue
            for b in degrees:
                if b == a or counts.get(b, 0) + 1 > lnode[b] * n_vars + 2:
                    continue
                swapped = dict(counts)
                swapped[a] -= 1
                swapped[b] = swapped.get(b, 0) + 1
                yield swapped, e_base + (b - a)

    candidates: list[tuple[int, int, dict[int, int], int]] = []
    for rank, (var_counts, e_var) in enumerate(var_options[:40]):
        candidates.append((abs(e_var - ideal_edges), rank, var_counts, e_var))
        if rank < 8:
            for once, e_once in swaps_of(var_counts, e_var):
                candidates.append((abs(e_once - ideal_edges), rank + 1000, once, e_once))
                if rank < 2:
                    for twice, e_twice in swaps_of(once, e_once):
                        candidates.append(
                            (abs(e_twice - ideal_edges), rank + 2000, twice, e_twice))
    candidates.sort(key=lambda c: (c[0], c[1]))
    seen = set()
    for _, _, var_counts, e_var in candidates:
        key = tuple(sorted(var_counts.items()))
        if key in seen:
            continue
        seen.add(key)
        hit = chk_match(e_var)
        if hit is not None:
            return var_counts, hit[0], hit[1]
    raise GraphConstructionError("edge totals of the two sides cannot be matched")


@dataclass
class TannerGraph:
    """Bipartite graph over variable and check nodes with dual edge orderings.

    Edges are stored sorted by variable node (edge_var/edge_check) with CSR
    pointers, plus the permutation into a check-sorted ordering used by the
    decoder's check updates.
    """

    n_vars: int
    n_checks: int
    edge_var: np.ndarray
    edge_check: np.ndarray
    var_ptr: np.ndarray = field(init=False)
    check_ptr: np.ndarray = field(init=False)
    perm_to_check_order: np.ndarray = field(init=False)
    var_degrees: np.ndarray = field(init=False)
    check_degrees: np.ndarray = field(init=False)

    def __post_init__(self):
        order = np.lexsort((self.edge_check, self.edge_var))
        self.edge_var = np.ascontiguousarray(self.edge_var[order], dtype=np.int32)
        self.edge_check = np.ascontiguousarray(self.edge_check[order], dtype=np.int32)
        self.var_degrees = np.bincount(self.edge_var, minlength=self.n_vars).astype(np.int32)
        self.check_degrees = np.bincount(self.edge_check, minlength=self.n_checks).astype(np.int32)
        self.var_ptr = np.concatenate([[0], np.cumsum(self.var_degrees)]).astype(np.int64)
        self.check_ptr = np.concatenate([[0], np.cumsum(self.check_degrees)]).astype(np.int64)
        self.perm_to_check_order = np.argsort(self.edge_check, kind="stable").astype(np.int64)
        pairs = set(zip(self.edge_var.tolist(), self.edge_check.tolist()))
        if len(pairs) != len(self.edge_var):
            raise GraphConstructionError("parallel edges in graph")

    @property
    def n_edges(self) -> int:
        return len(self.edge_var)

    def degree_of(self, var_index: int) -> int:
        return int(self.var_degrees[var_index])

    def empirical_var_fractions(self) -> dict[int, float]:
        vals, counts = np.unique(self.var_degrees, return_counts=True)
        return {int(v): c / self.n_vars for v, c in zip(vals, counts)}

    def empirical_check_fractions(self) -> dict[int, float]:
        vals, counts = np.unique(self.check_degrees, return_counts=True)
        return {int(v): c / self.n_checks for v, c in zip(vals, counts)}

    def h_dense(self) -> np.ndarray:
        h = np.zeros((self.n_checks, self.n_vars), dtype=np.uint8)
        h[self.edge_check, self.edge_var] = 1
        return h

    def count_4cycles(self, sample: int = 800, seed: int = 0) -> int:
        """Pairs of sampled variable nodes sharing two checks (zero => girth >= 6)."""
        rng = np.random.default_rng(seed)
        idx = np.arange(self.n_vars)
        if self.n_vars > sample:
            idx = rng.choice(self.n_vars, size=sample, replace=False)
        h = np.zeros((self.n_checks, len(idx)), dtype=np.float32)
        col_of = {int(v): j for j, v in enumerate(idx)}
        mask = np.isin(self.edge_var, idx)
        cols = np.array([col_of[int(v)] for v in self.edge_var[mask]], dtype=np.int64)
        h[self.edge_check[mask], cols] = 1.0
        gram = h.T @ h     # float32 so BLAS handles it; counts stay exact
        np.fill_diagonal(gram, 0.0)
        return int((gram >= 1.5).sum() // 2)


def degree_node_counts(ens: Ensemble, n_vars: int) -> tuple[dict[int, int], dict[int, int], int]:
    """Apportion variable and check node counts for a length-n_vars graph.

    Both sides are apportioned jointly so their edge totals match exactly
    while every per-degree count stays within one node of its quota.
    """
    var_counts, chk_counts, n_checks = _pick_balanced_counts(ens, n_vars)
    if n_checks <= 0:
        raise GraphConstructionError("non-positive check count for this rate/length")
    return var_counts, chk_counts, n_checks


def construct_graph(ens: Ensemble, n_vars: int, seed: int) -> TannerGraph:
    """PEG realisation of the ensemble; deterministic for a fixed seed.

    Variable nodes are indexed in ascending degree order.
    """
    if n_vars < 12:
        raise GraphConstructionError("graph too small")
    var_counts, chk_counts, n_checks = degree_node_counts(ens, n_vars)

    var_degrees = np.concatenate(
        [np.full(var_counts[d], d, dtype=np.int32) for d in sorted(var_counts) if var_counts[d] > 0]
    )
    check_cap = np.concatenate(
        [np.full(chk_counts[d], d, dtype=np.int32) for d in sorted(chk_counts) if chk_counts[d] > 0]
    )
    rng = np.random.default_rng(np.random.SeedSequence((0x9E6, seed)))
    priority = rng.permutation(n_checks).astype(np.int64)
    rng.shuffle(check_cap)
    order = np.argsort(-var_degrees, kind="stable").astype(np.int64)

    edge_var, edge_check = _peg_place(var_degrees, check_cap, priority, order)
    if len(edge_var) == 0:
        raise GraphConstructionError("edge placement infeasible for this degree sequence")
    return TannerGraph(n_vars, n_checks, edge_var, edge_check)


def to_alist(graph: TannerGraph) -> str:
    """Standard alist text serialisation of the parity-check matrix."""
    lines = [f"{graph.n_vars} {graph.n_checks}"]
    lines.append(f"{int(graph.var_degrees.max())} {int(graph.check_degrees.max())}")
    lines.append(" ".join(str(int(d)) for d in graph.var_degrees))
    lines.append(" ".join(str(int(d)) for d in graph.check_degrees))
    for v in range(graph.n_vars):
        lo, hi = graph.var_ptr[v], graph.var_ptr[v + 1]
        lines.append(" ".join(str(int(c) + 1) for c in np.sort(graph.edge_check[lo:hi])))
    csorted_var = graph.edge_var[graph.perm_to_check_order]
    csorted_chk = graph.edge_check[graph.perm_to_check_order]
    for c in range(graph.n_checks):
        lo, hi = graph.check_ptr[c], graph.check_ptr[c + 1]
        assert np.all(csorted_chk[lo:hi] == c)
        lines.append(" ".join(str(int(v) + 1) for v in np.sort(csorted_var[lo:hi])))
    return "\n".join(lines) + "\n"


def from_alist(text: str) -> TannerGraph:
    tokens = text.split()
    pos = 0

    def take(k):
        nonlocal pos
        vals = [int(t) for t in tokens[pos:pos + k]]
        pos += k
        return vals

    n_vars, n_checks = take(2)
    take(2)
    var_deg = take(n_vars)
    take(n_checks)
    edge_var, edge_check = [], []
    for v in range(n_vars):
        for c in take(var_deg[v]):
            if c > 0:
                edge_var.append(v)
                edge_check.append(c - 1)
    return TannerGraph(
        n_vars, n_checks,
        np.array(edge_var, dtype=np.int32), np.array(edge_check, dtype=np.int32),
    )


def _pack_rows(h: np.ndarray) -> np.ndarray:
    """Pack a 0/1 matrix into per-row uint64 words (little-endian bit order)."""
    m, n = h.shape
    words = (n + 63) // 64
    padded = np.zeros((m, words * 64), dtype=np.uint8)
    padded[:, :n] = h
    packed = np.zeros((m, words), dtype=np.uint64)
    for w in range(words):
        block = padded[:, w * 64:(w + 1) * 64].astype(np.uint64)
        packed[:, w] = (block << np.arange(64, dtype=np.uint64)).sum(axis=1, dtype=np.uint64)
    return packed


@dataclass
class SystematicEncoder:
    """Systematic encoder: message bits sit verbatim on `message_cols`.

    Codeword layout is [parity | plain message | secret message] in the
    logical (permuted) order; `secret_cols` are the graph positions of the
    trailing k message bits.
    """

    graph: TannerGraph
    parity_cols: np.ndarray
    message_cols: np.ndarray
    k: int
    parity_gen: np.ndarray          # shape (l, rank) uint8: parity = msg @ parity_gen mod 2
    rank_gap: int

    @property
    def n(self) -> int:
        return self.graph.n_vars

    @property
    def l(self) -> int:
        return len(self.message_cols)

    @property
    def secret_cols(self) -> np.ndarray:
        return self.message_cols[self.l - self.k:]

    def encode(self, msg: np.ndarray) -> np.ndarray:
        msg = np.asarray(msg, dtype=np.uint8)
        if msg.shape[-1] != self.l:
            raise ValueError(f"message length {msg.shape[-1]} != {self.l}")
        parity = (msg.astype(np.int32) @ self.parity_gen.astype(np.int32)) % 2
        word = np.zeros(msg.shape[:-1] + (self.n,), dtype=np.uint8)
        word[..., self.message_cols] = msg
        word[..., self.parity_cols] = parity.astype(np.uint8)
        return word

    def check(self, word: np.ndarray) -> bool:
        h = self.graph
        word = np.asarray(word, dtype=np.uint8)
        syndrome = np.bincount(
            h.edge_check, weights=word[h.edge_var].astype(np.float64), minlength=h.n_checks
        ).astype(np.int64) % 2
        return not syndrome.any()


def build_systematic_encoder(
    graph: TannerGraph,
    secret_cols: np.ndarray | None = None,
    k: int | None = None,
    max_rank_gap_frac: float = 0.01,
) -> SystematicEncoder:
    """Gaussian elimination of H with pivots preferring low column indices.

    Columns in `secret_cols` are kept out of the parity block so the secret
    message can occupy exactly those graph positions; the remaining message
    columns precede them in the systematic layout.
    """
    m, n = graph.n_checks, graph.n_vars
    rows = _pack_rows(graph.h_dense())
    secret = np.zeros(n, dtype=bool)
    if secret_cols is not None:
        secret_cols = np.asarray(secret_cols, dtype=np.int64)
        secret[secret_cols] = True
    col_order = np.concatenate([np.flatnonzero(~secret), np.flatnonzero(secret)])

    pivot_rows: list[int] = []
    pivot_cols: list[int] = []
    row_used = np.zeros(m, dtype=bool)
    for c in col_order:
        w, b = divmod(int(c), 64)
        colbits = (rows[:, w] >> np.uint64(b)) & np.uint64(1)
        candidates = np.flatnonzero((colbits == 1) & ~row_used)
        if len(candidates) == 0:
            continue
        pr = int(candidates[0])
        hit = np.flatnonzero(colbits == 1)
        hit = hit[hit != pr]
        if len(hit):
            rows[hit] ^= rows[pr]
        row_used[pr] = True
        pivot_rows.append(pr)
        pivot_cols.append(int(c))
        if len(pivot_rows) == m:
            break

    rank = len(pivot_rows)
    rank_gap = m - rank
    if rank_gap > max_rank_gap_frac * m:
        raise EncodingError(f"rank gap {rank_gap} exceeds {max_rank_gap_frac:.0%} of {m} checks")

    pivot_cols_arr = np.array(sorted(pivot_cols), dtype=np.int64)
    if secret_cols is not None and np.intersect1d(pivot_cols_arr, secret_cols).size:
        raise EncodingError("secret positions ended up in the parity block")
    is_pivot = np.zeros(n, dtype=bool)
    is_pivot[pivot_cols_arr] = True
    free_cols = np.flatnonzero(~is_pivot)
    if secret_cols is not None:
        k = len(secret_cols)
        rest = np.setdiff1d(free_cols, secret_cols)
        message_cols = np.concatenate([rest, np.sort(secret_cols)])
    else:
        k = int(k or 0)
        message_cols = free_cols
    l = len(message_cols)
    if k > l:
        raise EncodingError(f"secret length {k} exceeds message length {l}")

    # parity bit on pivot column of row r is the dot product of that reduced
    # row with the message columns
    order = np.argsort(np.array(pivot_cols))
    prow_sorted = np.array(pivot_rows)[order]
    reduced = np.zeros((rank, l), dtype=np.uint8)
    for j, col in enumerate(message_cols):
        w, b = divmod(int(col), 64)
        reduced[:, j] = ((rows[prow_sorted, w] >> np.uint64(b)) & np.uint64(1)).astype(np.uint8)
    return SystematicEncoder(
        graph=graph,
        parity_cols=pivot_cols_arr,
        message_cols=message_cols.astype(np.int64),
        k=k,
        parity_gen=reduced.T.copy(),
        rank_gap=rank_gap,
    )


def encode(enc: SystematicEncoder, msg: np.ndarray) -> np.ndarray:
    return enc.encode(msg)
