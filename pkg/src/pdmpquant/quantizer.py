"""Marginal quantization of the embedded chain ``Theta_k = (Z_k, S_k)``.

For each step ``k`` a codebook of pairs (post-jump state, sojourn) is
trained by competitive learning (CLVQ) on simulated draws of ``Theta_k``.
Nearest neighbours are searched within the query's mode only, since states
in different modes are infinitely far apart.  Once the codebooks are
frozen, an independent batch of paths is projected step by step to
estimate node weights, transition matrices and distortions.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.spatial import cKDTree

from ._clvq import clvq_pass
from .errors import ConfigError, QuantizationError
from .pdmp import State, simulate_paths
from .streams import make_rng, split


@dataclass(frozen=True)
class ClvqConfig:
    """Training configuration.

    The learning rate of a node is ``rate_a / (rate_b + visits)`` where
    ``visits`` counts the samples it has already absorbed (its initial draw
    included), so the defaults make every node the running mean of its cell.
    """

    grid_size: int
    training_samples: int
    estimation_samples: int | None = None
    rate_a: float = 1.0
    rate_b: float = 1.0
    p: float = 2.0
    seed: int = 0
    chunk: int = 50_000

    def __post_init__(self):
        if self.grid_size < 1:
            raise ConfigError("grid_size must be at least 1")
        if self.training_samples < 10 * self.grid_size:
            raise ConfigError("training_samples must be at least 10 * grid_size")
        if self.p < 1:
            raise ConfigError("norm order p must be >= 1")
        if self.rate_a <= 0 or self.rate_b < 0:
            raise ConfigError("learning-rate parameters must be positive")
        if self.estimation_samples is not None and self.estimation_samples < 2:
            raise ConfigError("estimation_samples must be at least 2")

    @property
    def n_estimation(self):
        if self.estimation_samples is not None:
            return self.estimation_samples
        return max(self.training_samples, 100_000)


@dataclass
class Codebook:
    """Grid ``Gamma_k``: nodes ``(mode, coords, sojourn)`` and their weights."""

    step: int
    modes: np.ndarray
    coords: np.ndarray
    sojourns: np.ndarray
    weights: np.ndarray

    def __len__(self):
        return len(self.modes)

    @property
    def points(self):
        return np.column_stack([self.coords, self.sojourns])

    @property
    def nodes(self):
        return [(State(m, c), float(s)) for m, c, s in zip(self.modes, self.coords, self.sojourns)]


def project(codebook: Codebook, point, p: float = 2.0) -> int:
    """Index of the closest node to ``point = (state, sojourn)`` within the same mode.

    Ties go to the lowest index.
    """
    state, sojourn = point
    same = np.flatnonzero(codebook.modes == state.mode)
    if same.size == 0:
        raise QuantizationError(f"mode {state.mode} not represented at step {codebook.step}")
    q = np.append(np.asarray(state.coords, dtype=float), float(sojourn))
    diff = np.abs(codebook.points[same] - q)
    d = (diff ** p).sum(axis=1)
    return int(same[np.argmin(d)])


class _Projector:
    """Batch nearest-neighbour search on one codebook, one KD-tree per mode."""

    def __init__(self, codebook: Codebook, p: float):
        self.p = p
        self.step = codebook.step
        pts = codebook.points
        self.trees = {}
        for m in np.unique(codebook.modes):
            idx = np.flatnonzero(codebook.modes == m)
            self.trees[int(m)] = (idx, cKDTree(pts[idx]))

    def __call__(self, modes, points):
        out = np.empty(len(modes), dtype=np.int64)
        for m in np.unique(modes):
            rows = np.flatnonzero(modes == m)
            if int(m) not in self.trees:
                raise QuantizationError(f"mode {int(m)} not represented at step {self.step}")
            idx, tree = self.trees[int(m)]
            if len(idx) == 1:
                out[rows] = idx[0]
                continue
            d, j = tree.query(points[rows], k=2, p=self.p)
            pick = j[:, 0].copy()
            tie = d[:, 0] == d[:, 1]
            pick[tie] = np.minimum(j[tie, 0], j[tie, 1])
            out[rows] = idx[pick]
        return out


@dataclass
class QuantizationTree:
    """Codebooks ``Gamma_0..Gamma_N`` with transition counts between consecutive grids.

    ``counts[k - 1]`` is the sparse count matrix from ``Gamma_{k-1}`` to
    ``Gamma_k``; the empirical transition matrices are its row-normalised
    form.  Rows with no visit are flagged by :meth:`unvisited_rows` and
    carry no transition.
    """

    model_id: str
    x0: State
    N: int
    p: float
    K: int
    seed: int
    training_samples: int
    sample_count: int
    codebooks: list
    counts: list
    distortion: np.ndarray
    distortion_Z: np.ndarray
    distortion_S: np.ndarray
    model_params: dict = field(default_factory=dict)
    train_seconds: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def transitions(self):
        if "P" not in self._cache:
            out = []
            for c in self.counts:
                c = c.tocsr().astype(float)
                rs = np.asarray(c.sum(axis=1)).ravel()
                inv = np.divide(1.0, rs, out=np.zeros_like(rs), where=rs > 0)
                out.append(sparse.diags(inv) @ c)
            self._cache["P"] = [sparse.csr_matrix(m) for m in out]
        return self._cache["P"]

    def unvisited_rows(self, k):
        """Rows of the transition into step ``k`` that were never visited."""
        rs = np.asarray(self.counts[k - 1].sum(axis=1)).ravel()
        return rs == 0

    def transition_pairs(self, k):
        """Non-zero entries ``(rows, cols, probs)`` of the transition into step ``k``."""
        key = ("pairs", k)
        if key not in self._cache:
            P = self.transitions[k - 1].tocoo()
            order = np.lexsort((P.col, P.row))
            self._cache[key] = (P.row[order].astype(np.int64), P.col[order].astype(np.int64), P.data[order])
        return self._cache[key]

    def z_groups(self, k):
        """Group ids of nodes of ``Gamma_k`` sharing their Z-component.

        Returns ``(gid, n_groups)``, or ``(None, None)`` when all nodes have
        distinct Z-components.
        """
        key = ("zgroups", k)
        if key not in self._cache:
            cb = self.codebooks[k]
            zz = np.column_stack([cb.modes.astype(float), cb.coords])
            _, gid = np.unique(zz, axis=0, return_inverse=True)
            gid = np.asarray(gid).ravel()
            n = gid.max() + 1 if len(gid) else 0
            self._cache[key] = (gid, n) if n < len(gid) else (None, None)
        return self._cache[key]

    def exit_times(self, model, k):
        key = ("tstar", model.model_id, k)
        if key not in self._cache:
            cb = self.codebooks[k]
            self._cache[key] = np.asarray(model.exit_time(cb.modes, cb.coords), dtype=float)
        return self._cache[key]

    @property
    def grid_sizes(self):
        return [len(cb) for cb in self.codebooks]


def _initial_nodes(X, modes, K, rng):
    perm = rng.permutation(len(X))
    keyed = np.column_stack([modes[perm].astype(float), X[perm]])
    _, first = np.unique(keyed, axis=0, return_index=True)
    chosen = perm[np.sort(first)[:K]]
    have = set(np.unique(modes[chosen]).tolist())
    extra = []
    for m in np.unique(modes):
        if int(m) not in have:
            extra.append(np.flatnonzero(modes == m)[0])
    if extra:
        chosen = np.concatenate([chosen, np.array(extra, dtype=chosen.dtype)])
    return chosen


def _train_step(X, modes, n_modes, cfg, rng):
    chosen = _initial_nodes(X, modes, cfg.grid_size, rng)
    order = np.argsort(modes[chosen], kind="stable")
    chosen = chosen[order]
    node_modes = modes[chosen].astype(np.int64)
    nodes = X[chosen].copy()
    offsets = np.searchsorted(node_modes, np.arange(n_modes + 1)).astype(np.int64)
    counts = np.ones(len(nodes))
    clvq_pass(nodes, offsets, counts, np.ascontiguousarray(X), modes.astype(np.int64),
              float(cfg.rate_a), float(cfg.rate_b), float(cfg.p))
    keyed = np.column_stack([node_modes.astype(float), nodes])
    _, keep = np.unique(keyed, axis=0, return_index=True)
    keep = np.sort(keep)
    return node_modes[keep], nodes[keep]


def _simulate_chunks(model, x0, N, n, chunk, rng):
    n_chunks = max(1, -(-n // chunk))
    for i, r in enumerate(split(rng, n_chunks)):
        size = min(chunk, n - i * chunk)
        yield simulate_paths(model, x0, N, size, r)


def _pnorm_p(diff, p):
    return (np.abs(diff) ** p).sum(axis=1) if diff.ndim == 2 else np.abs(diff) ** p


def estimate_tree_statistics(codebooks, model, x0, N, p, n, chunk, rng):
    """Project ``n`` fresh paths onto the codebooks.

    Returns per-step visit counts, transition count matrices and the three
    distortion estimates (pair, Z-part, S-part).
    """
    projectors = [_Projector(cb, p) for cb in codebooks]
    visits = [np.zeros(len(cb), dtype=np.int64) for cb in codebooks]
    trans = [sparse.csr_matrix((len(codebooks[k - 1]), len(codebooks[k])), dtype=np.int64)
             for k in range(1, N + 1)]
    acc = np.zeros((3, N + 1))
    for paths in _simulate_chunks(model, x0, N, n, chunk, rng):
        prev = None
        for k in range(N + 1):
            X = np.column_stack([paths.coords[:, k], paths.sojourns[:, k]])
            idx = projectors[k](paths.modes[:, k], X)
            visits[k] += np.bincount(idx, minlength=len(codebooks[k]))
            diff = X - codebooks[k].points[idx]
            acc[0, k] += _pnorm_p(diff, p).sum()
            acc[1, k] += _pnorm_p(diff[:, :-1], p).sum()
            acc[2, k] += _pnorm_p(diff[:, -1], p).sum()
            if prev is not None:
                m = sparse.coo_matrix((np.ones(len(idx), dtype=np.int64), (prev, idx)),
                                      shape=trans[k - 1].shape).tocsr()
                trans[k - 1] = trans[k - 1] + m
            prev = idx
    dist = (acc / n) ** (1.0 / p)
    return visits, trans, dist


def train(model, x0: State, N: int, cfg: ClvqConfig) -> QuantizationTree:
    """Train codebooks for ``Theta_0..Theta_N`` and estimate weights and transitions."""
    t0 = time.perf_counter()
    root = make_rng(cfg.seed)
    init_rng, train_rng, est_rng = split(root, 3)
    codebooks = [Codebook(0, np.array([x0.mode], dtype=np.int64), np.array([x0.coords], dtype=float),
                          np.zeros(1), np.ones(1))]
    if N > 0:
        batches = list(_simulate_chunks(model, x0, N, cfg.training_samples, cfg.chunk, train_rng))
        step_rngs = split(init_rng, N)
        for k in range(1, N + 1):
            X = np.concatenate([np.column_stack([b.coords[:, k], b.sojourns[:, k]]) for b in batches])
            modes = np.concatenate([b.modes[:, k] for b in batches])
            node_modes, nodes = _train_step(X, modes, model.n_modes, cfg, step_rngs[k - 1])
            codebooks.append(Codebook(k, node_modes, nodes[:, :-1].copy(), nodes[:, -1].copy(),
                                      np.zeros(len(nodes))))
        del batches
    n_est = cfg.n_estimation
    visits, trans, dist = estimate_tree_statistics(codebooks, model, x0, N, cfg.p, n_est, cfg.chunk, est_rng)
    for cb, v in zip(codebooks, visits):
        cb.weights = v / n_est
    return QuantizationTree(
        model_id=model.model_id, x0=x0, N=N, p=cfg.p, K=cfg.grid_size, seed=cfg.seed,
        training_samples=cfg.training_samples, sample_count=n_est, codebooks=codebooks,
        counts=trans, distortion=dist[0], distortion_Z=dist[1], distortion_S=dist[2],
        model_params=model.params_dict(), train_seconds=time.perf_counter() - t0,
    )


def distortion(tree: QuantizationTree, model, x0: State, n_eval: int, rng):
    """Monte Carlo estimate of ``||Theta_k - proj(Theta_k)||_p`` on fresh paths."""
    _, _, dist = estimate_tree_statistics(tree.codebooks, model, x0, tree.N, tree.p, n_eval,
                                          50_000, make_rng(rng))
    return dist[0]
