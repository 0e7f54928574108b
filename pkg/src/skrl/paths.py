"""The self-avoiding path matrix P, the resolvent, and matrix norms."""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from .errors import InvalidArgumentError, NumericalFailure, ResourceLimitError

EXACT_DP_CAP = 20
DFS_LEN_CAP = 7
DFS_FULL_N_CAP = 10


@dataclass(frozen=True)
class TruncationPolicy:
    """How P is computed.

    Attributes:
        mode: "exact_dp" (subset dynamic programming) or "dfs_truncated"
            (explicit depth-first path enumeration).
        max_path_len: longest path kept, in edges; None means all lengths.
    """

    mode: str = "exact_dp"
    max_path_len: int = None

    def __post_init__(self):
        if self.mode not in ("exact_dp", "dfs_truncated"):
            raise InvalidArgumentError(f"unknown truncation mode {self.mode!r}")
        if self.max_path_len is not None and self.max_path_len < 1:
            raise InvalidArgumentError("max_path_len must be positive")

    def describe(self):
        length = "all" if self.max_path_len is None else str(self.max_path_len)
        return f"{self.mode}:{length}"


@lru_cache(maxsize=None)
def _layers(n, source):
    """Subsets of [n] containing source, grouped by size, with in-layer positions."""
    others = [v for v in range(n) if v != source]
    all_masks = np.arange(1 << (n - 1), dtype=np.int64)
    # spread the n-1 free bits over the positions other than source
    full = np.full(all_masks.shape, 1 << source, dtype=np.int64)
    for bit, v in enumerate(others):
        full |= ((all_masks >> bit) & 1) << v
    sizes = np.bitwise_count(full).astype(np.int64)
    order = np.argsort(sizes, kind="stable")
    full = full[order]
    sizes = sizes[order]
    bounds = np.searchsorted(sizes, np.arange(1, n + 2))
    layers = [full[bounds[s]:bounds[s + 1]] for s in range(n)]
    position = np.zeros(1 << n, dtype=np.int64)
    for layer in layers:
        position[layer] = np.arange(len(layer))
    return layers, position


def _p_row_dp(weights, source, max_len):
    """Row `source` of P by layered subset DP.

    f[S][v] is the weight sum over self-avoiding paths from source with vertex
    set S ending at v. Extending by u outside S maps (S, v) to (S | u, u), and
    that map on (S, u) is injective, so each layer is a dense product followed
    by a scatter.
    """
    n = weights.shape[0]
    layers, position = _layers(n, source)
    row = np.zeros(n)
    f = np.zeros((1, n))
    f[0, source] = 1.0
    bits = 1 << np.arange(n, dtype=np.int64)
    for size in range(1, min(n, max_len + 1)):
        cur = layers[size - 1]
        ext = f @ weights
        nxt = np.zeros((len(layers[size]), n))
        free = (cur[:, None] & bits[None, :]) == 0
        s_idx, u_idx = np.nonzero(free)
        targets = position[cur[s_idx] | bits[u_idx]]
        nxt[targets, u_idx] = ext[s_idx, u_idx]
        row += nxt.sum(axis=0)
        f = nxt
    row[source] = 1.0
    return row


def _p_dp(weights, max_len):
    n = weights.shape[0]
    if n > EXACT_DP_CAP:
        raise ResourceLimitError(f"subset DP for P is capped at n <= {EXACT_DP_CAP}")
    p = np.vstack([_p_row_dp(weights, s, max_len) for s in range(n)])
    return 0.5 * (p + p.T)


def _p_dfs(weights, max_len):
    n = weights.shape[0]
    if max_len > DFS_LEN_CAP and n > DFS_FULL_N_CAP:
        raise ResourceLimitError(
            f"path enumeration needs max_path_len <= {DFS_LEN_CAP} or n <= {DFS_FULL_N_CAP}")
    p = np.eye(n)
    w = weights.tolist()
    for s in range(n):
        acc = [0.0] * n
        stack = [(s, 1 << s, 1.0, 0)]
        while stack:
            v, seen, val, length = stack.pop()
            if length == max_len:
                continue
            wv = w[v]
            for u in range(n):
                if not seen >> u & 1:
                    nv = val * wv[u]
                    acc[u] += nv
                    stack.append((u, seen | (1 << u), nv, length + 1))
        for t in range(n):
            if t != s:
                p[s, t] = acc[t]
    return 0.5 * (p + p.T)


def path_sum_matrix(weights, policy=TruncationPolicy()):
    """Sum over self-avoiding paths of the product of edge weights, unit diagonal."""
    weights = np.asarray(weights, dtype=float)
    n = weights.shape[0]
    max_len = n - 1 if policy.max_path_len is None else min(policy.max_path_len, n - 1)
    if policy.mode == "exact_dp":
        return _p_dp(weights, max_len)
    return _p_dfs(weights, max_len)


def p_matrix(g, beta, policy=TruncationPolicy()):
    """The self-avoiding path matrix P with edge weights beta*g."""
    g = np.asarray(g, dtype=float)
    return path_sum_matrix(beta * g, policy)


def resolvent(g, beta, cond_limit=1e12):
    """(1 + beta^2 - beta*G)^{-1} by a symmetric factorization, residual-checked."""
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    a = (1 + beta ** 2) * np.eye(n) - beta * g
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > cond_limit:
        raise NumericalFailure(f"resolvent system is ill-conditioned (condition number {cond:.3g})")
    x = scipy.linalg.solve(a, np.eye(n), assume_a="sym")
    x = 0.5 * (x + x.T)
    residual = np.max(np.abs(a @ x - np.eye(n)))
    if residual > 1e-10:
        raise NumericalFailure(f"resolvent residual {residual:.3g} exceeds 1e-10")
    return x


def frobenius_norm(a):
    a = np.asarray(a, dtype=float)
    return math.sqrt(math.fsum((a * a).ravel()))


def operator_norm(a, tol=1e-10, max_iter=10000, restarts=3, seed=0):
    """Largest singular value.

    Symmetric matrices go through the symmetric eigensolver. Otherwise power
    iteration on A^T A runs from random starts until the Rayleigh quotient
    settles to relative tolerance ``tol``.
    """
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return 0.0
    if a.shape[0] == a.shape[1] and np.allclose(a, a.T, rtol=0, atol=1e-12):
        return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (a + a.T)))))
    ata = a.T @ a
    if not np.any(ata):
        return 0.0
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        v = rng.standard_normal(ata.shape[0])
        v /= np.linalg.norm(v)
        lam = 0.0
        for _ in range(max_iter):
            u = ata @ v
            new = float(v @ u)
            norm = np.linalg.norm(u)
            if norm == 0:
                break
            v = u / norm
            if abs(new - lam) <= tol * abs(new):
                return math.sqrt(max(new, 0.0))
            lam = new
    raise NumericalFailure("power iteration for the operator norm did not converge")


def path_sums_by_vertex_set(weights, source, target):
    """Path sums from source to target grouped by vertex set.

    Returns:
        (masks, values): values[k] is the summed weight product of the
        self-avoiding paths from source to target whose vertex set is masks[k].
    """
    weights = np.asarray(weights, dtype=float)
    n = weights.shape[0]
    if n > EXACT_DP_CAP:
        raise ResourceLimitError(f"subset DP is capped at n <= {EXACT_DP_CAP}")
    if source == target:
        raise InvalidArgumentError("need distinct endpoints")
    layers, position = _layers(n, source)
    f = np.zeros((1, n))
    f[0, source] = 1.0
    bits = 1 << np.arange(n, dtype=np.int64)
    out_masks, out_vals = [], []
    for size in range(1, n):
        cur = layers[size - 1]
        # paths stop when they reach the target
        live = f.copy()
        live[:, target] = 0.0
        ext = live @ weights
        nxt = np.zeros((len(layers[size]), n))
        free = (cur[:, None] & bits[None, :]) == 0
        s_idx, u_idx = np.nonzero(free)
        targets = position[cur[s_idx] | bits[u_idx]]
        nxt[targets, u_idx] = ext[s_idx, u_idx]
        hit = nxt[:, target] != 0
        out_masks.append(layers[size][hit])
        out_vals.append(nxt[hit, target])
        f = nxt
    return np.concatenate(out_masks), np.concatenate(out_vals)
