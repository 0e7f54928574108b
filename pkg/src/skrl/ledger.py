"""Error-term ledgers R1..R7 and Q, Q1..Q6 by explicit graph enumeration.

Everything here sums over enumerated cycles, paths and closed graphs, which
keeps it independent of the subset DP that produces P in ``paths``.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import graphs
from .disorder import gibbs_exact
from .errors import DegenerateWeightError, DomainError, InvalidArgumentError, ResourceLimitError
from .paths import p_matrix, path_sums_by_vertex_set
from .weights import edge_values, mask_products

R_LEDGER_CAP = 7
Q_LEDGER_CAP = 8
DEGENERATE_TANH = 1e-300


def large_graph_threshold(n):
    """k_N = (log N)^{3/2}, kept real-valued."""
    return math.log(n) ** 1.5


# ---------------------------------------------------------------------------
# R ledger

@dataclass(frozen=True)
class RLedger:
    i: int
    j: int
    cutoff: float
    r1: float
    r2: float
    r3: float
    r4: float
    r5: float
    r6: float
    r7: float

    def values(self):
        return (self.r1, self.r2, self.r3, self.r4, self.r5, self.r6, self.r7)


@lru_cache(maxsize=None)
def phi_image_membership(n, i, j):
    """Boolean over closed graphs on [n]: True where the graph lies in Phi(S_ij)."""
    masks = graphs.closed_graph_masks(n)
    _, _, union = graphs.phi_image_pairs(i, j, n)
    member = np.isin(masks, union)
    member.setflags(write=False)
    return member


def in_phi_image(gamma, i, j):
    """Decide membership in Phi(S_ij) by searching for a decomposition.

    Tries every cycle through {i, j} inside gamma and checks whether the rest
    is closed and meets that cycle in at most one vertex.
    """
    if (min(i, j), max(i, j)) not in gamma.edges:
        return False
    n = gamma.n
    gmask = gamma.mask()
    loop_e, loop_v = graphs.loops_through(i, j, n)
    for le, lv in zip(loop_e.tolist(), loop_v.tolist()):
        if le & ~gmask:
            continue
        rest = graphs.graph_from_mask(gmask & ~le, n)
        if graphs.is_closed(rest) and bin(rest.vertex_mask() & lv).count("1") <= 1:
            return True
    return False


def _tau_sums(edge_w, n):
    """Closed-graph weights summed by vertex set, and their total hat_z."""
    masks, vmasks, _ = graphs.closed_graph_table(n)
    w = mask_products(edge_w, masks)
    by_vertex_set = np.bincount(vmasks, weights=w, minlength=1 << n)
    return w, by_vertex_set, math.fsum(w)


def _r_terms(g, beta, i, j, gamma_cut, tau_cut, cache=None):
    """R1..R7 with separate size thresholds for gamma (|V| < gamma_cut) and tau (|V| < tau_cut)."""
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    if i == j:
        raise InvalidArgumentError("need distinct vertices")
    if n > R_LEDGER_CAP:
        raise ResourceLimitError(f"R ledger enumeration is capped at n <= {R_LEDGER_CAP}")
    t = math.tanh(beta * g[i, j])
    if abs(t) < DEGENERATE_TANH:
        raise DegenerateWeightError(
            f"tanh(beta*g) vanishes on edge ({i}, {j}); use beta > 0 and generic couplings")
    tanh_w = edge_values(g, beta, "tanh")
    lin_w = edge_values(g, beta, "linear")
    k = graphs.edge_index(n)[(min(i, j), max(i, j))]
    reduced = tanh_w.copy()
    reduced[k] = 1.0
    lin_reduced = lin_w.copy()
    lin_reduced[k] = 1.0

    if cache is None:
        cache = _tau_sums(tanh_w, n)
    all_w, by_vset, hat_z = cache
    masks = graphs.closed_graph_masks(n)

    # R1: closed graphs through {i,j} outside the image of Phi
    bit = 1 << k
    through = (masks & bit) != 0
    outside = through & ~phi_image_membership(n, i, j)
    r1 = math.fsum(mask_products(reduced, masks[outside]))

    loop_e, loop_v = graphs.loops_through(i, j, n)
    loop_ratio = mask_products(reduced, loop_e)          # w(gamma)/t
    loop_lin = mask_products(lin_reduced, loop_e)        # prod over e != ij of beta*g_e
    sizes = graphs.popcount(loop_v)
    small_gamma = sizes < gamma_cut

    all_v = np.arange(1 << n, dtype=np.int64)
    small_tau = graphs.popcount(all_v) < tau_cut
    overlap = graphs.popcount(loop_v[:, None] & all_v[None, :])
    heavy = overlap >= 2
    tau_heavy_small = (heavy & small_tau) @ by_vset
    tau_heavy_large = (heavy & ~small_tau) @ by_vset
    tau_light = (~heavy) @ by_vset

    r2 = math.fsum((loop_ratio * tau_heavy_small)[small_gamma])
    r3 = math.fsum((loop_ratio * tau_heavy_large)[small_gamma])
    r4 = math.fsum(loop_ratio[~small_gamma]) * hat_z
    r5 = math.fsum((loop_ratio * tau_light)[~small_gamma])
    r6 = (beta * g[i, j] - t) + math.fsum(loop_lin - loop_ratio)
    r7 = t * t * math.fsum(loop_ratio)
    return (r1, r2, r3, r4, r5, r6, r7), hat_z


def build_r_ledger(g, beta, i, j, cutoff):
    """R1..R7 for the pair (i, j) with size threshold ``cutoff`` (k_N).

    The gamma indicator is |V_gamma| < cutoff^2 and the tau indicator is
    |V_tau| < cutoff^4, both strict against the real value.
    """
    cutoff = float(cutoff)
    if not cutoff > 0:
        raise InvalidArgumentError("cutoff must be positive")
    terms, _ = _r_terms(g, beta, i, j, cutoff ** 2, cutoff ** 4)
    return RLedger(i, j, cutoff, *terms)


def correlation_rhs(g, beta, i, j, cutoff, p=None, cache=None):
    """Right-hand side p_ij + (1-t^2)/hat_z (R1-R2-R3-R4+R5) - R6 - R7."""
    g = np.asarray(g, dtype=float)
    if p is None:
        p = p_matrix(g, beta)
    cutoff = float(cutoff)
    (r1, r2, r3, r4, r5, r6, r7), hat_z = _r_terms(g, beta, i, j, cutoff ** 2, cutoff ** 4, cache)
    t = math.tanh(beta * g[i, j])
    return p[i, j] + (1 - t * t) / hat_z * (r1 - r2 - r3 - r4 + r5) - r6 - r7


def verify_correlation_identity(g, beta, cutoff):
    """Largest |m_ij - rhs_ij| over pairs, with exact M, P and hat_z."""
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    if n > R_LEDGER_CAP:
        raise ResourceLimitError(f"R ledger enumeration is capped at n <= {R_LEDGER_CAP}")
    if not beta > 0:
        raise DegenerateWeightError("the correlation identity divides by tanh(beta*g); need beta > 0")
    m = gibbs_exact(g, beta).m
    p = p_matrix(g, beta)
    cache = _tau_sums(edge_values(g, beta, "tanh"), n)
    worst = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            rhs = correlation_rhs(g, beta, i, j, cutoff, p=p, cache=cache)
            worst = max(worst, abs(m[i, j] - rhs))
    return worst


# ---------------------------------------------------------------------------
# Q ledger

@dataclass
class QLedger:
    beta: float
    k1: int
    k2: int
    loop_cap: int
    q: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    q3: np.ndarray
    q4: np.ndarray
    q5: np.ndarray
    q1_le: np.ndarray
    q1_gt: np.ndarray
    q2_le: np.ndarray
    q2_gt: np.ndarray
    q6_le: np.ndarray
    q6_gt: np.ndarray
    extra: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.q.shape[0]


@lru_cache(maxsize=None)
def _path_table(n, i, j):
    """Edge indices (padded with the sentinel m), lengths and vertex masks of paths i -> j."""
    index = graphs.edge_index(n)
    m = len(index)
    seqs = graphs.path_sequences(i, j, n)
    idx = np.full((len(seqs), max(n - 1, 1)), m, dtype=np.int64)
    lengths = np.zeros(len(seqs), dtype=np.int64)
    vmask = np.zeros(len(seqs), dtype=np.int64)
    for r, seq in enumerate(seqs):
        for c, (a, b) in enumerate(zip(seq, seq[1:])):
            idx[r, c] = index[(min(a, b), max(a, b))]
        lengths[r] = len(seq) - 1
        vmask[r] = sum(1 << v for v in seq)
    for arr in (idx, lengths, vmask):
        arr.setflags(write=False)
    return idx, lengths, vmask


def _padded_products(values, idx):
    padded = np.append(values, 1.0)
    return np.prod(padded[idx], axis=1)


def _subset_sums(table, n):
    """Zeta transform: out[S] = sum of table[T] over subsets T of S."""
    out = np.array(table, dtype=float)
    for b in range(n):
        view = out.reshape(-1, 2, 1 << b)
        view[:, 1, :] += view[:, 0, :]
    return out


def build_q_ledger(g, beta, k1=3, k2=3, loop_cap=None):
    """Q = P(1 + beta^2 - beta*G) - I together with its enumerated pieces.

    Args:
        g: coupling matrix, n <= 8.
        beta: inverse temperature.
        k1: path-length cutoff for the split pieces (edges of gamma_1).
        k2: cycle-length cutoff for the split pieces.
        loop_cap: longest cycle kept in Q1, Q2 and Q3; None keeps all.
    """
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    if n > Q_LEDGER_CAP:
        raise ResourceLimitError(f"Q ledger enumeration is capped at n <= {Q_LEDGER_CAP}")
    if k1 < 3 or k2 < 3:
        raise InvalidArgumentError("cutoffs k1, k2 must be at least 3")
    loop_cap = n if loop_cap is None else int(loop_cap)
    p = p_matrix(g, beta)
    eye = np.eye(n)
    q = p @ ((1 + beta ** 2) * eye - beta * g) - eye

    lin = edge_values(g, beta, "linear")
    cyc_e, cyc_v = graphs.cycle_table(n)
    cyc_w = mask_products(lin, cyc_e)
    cyc_len = graphs.popcount(cyc_v)
    keep = cyc_len <= loop_cap
    by_vset = np.bincount(cyc_v[keep], weights=cyc_w[keep], minlength=1 << n)
    all_v = np.arange(1 << n, dtype=np.int64)
    vsize = graphs.popcount(all_v)
    by_vset_le = np.where(vsize <= k2, by_vset, 0.0)
    full = (1 << n) - 1

    q1 = np.zeros((n, n)); q1_le = np.zeros((n, n))
    q6_le = np.zeros((n, n)); q6_gt = np.zeros((n, n))
    q3 = np.zeros((n, n))
    q2 = np.zeros((n, n)); q2_le = np.zeros((n, n))
    g2 = g * g
    for j in range(n):
        has_j = (all_v >> j) & 1 == 1
        loops_j = np.where(has_j, by_vset, 0.0)
        loops_j_le = np.where(has_j, by_vset_le, 0.0)
        zeta = _subset_sums(loops_j, n)
        zeta_le = _subset_sums(loops_j_le, n)
        total_j = math.fsum(loops_j)
        total_j_le = math.fsum(loops_j_le)
        q2[j, j] = -2.0 * total_j
        q2_le[j, j] = -2.0 * total_j_le
        for i in range(n):
            if i == j:
                continue
            idx, lengths, vmask = _path_table(n, min(i, j), max(i, j))
            wp = _padded_products(lin, idx)
            disjoint = (full & ~vmask) | (1 << j)
            short = lengths <= k1
            q1[i, j] = -2.0 * math.fsum(wp * zeta[disjoint])
            q1_le[i, j] = -2.0 * math.fsum((wp * zeta_le[disjoint])[short])
            q6_gt[i, j] = -2.0 * math.fsum(wp[~short]) * total_j_le
            q6_le[i, j] = -2.0 * math.fsum((wp * (total_j_le - zeta_le[disjoint]))[short])
            # Q3: loops gamma' = path + {i,j}, weighted by sum_{k in V, k != i} g_kj^2
            loopish = (lengths >= 2) & (lengths + 1 <= loop_cap)
            members = ((vmask[:, None] >> np.arange(n)) & 1).astype(float)
            members[:, i] = 0.0
            extra = members @ g2[:, j]
            q3[i, j] = beta ** 2 * math.fsum((wp * extra)[loopish])
    row = (g2 - (1.0 - eye) / n).sum(axis=1)
    q4 = np.diag(-beta ** 2 * row)
    q5 = beta ** 2 * g2 * p
    np.fill_diagonal(q5, 0.0)
    return QLedger(beta=beta, k1=k1, k2=k2, loop_cap=loop_cap, q=q,
                   q1=q1, q2=q2, q3=q3, q4=q4, q5=q5,
                   q1_le=q1_le, q1_gt=q1 - q1_le, q2_le=q2_le, q2_gt=q2 - q2_le,
                   q6_le=q6_le, q6_gt=q6_gt, extra={"p": p})


def q_decomposition_residual_matrix(ledger, p):
    n = ledger.n
    b2 = ledger.beta ** 2
    return (ledger.q - b2 / n * p - ledger.q1 - ledger.q2 - ledger.q3
            - p @ ledger.q4 - ledger.q5)


def verify_q_decomposition(ledger, p):
    """max |Q - (beta^2/n) P - Q1 - Q2 - Q3 - P Q4 - Q5|."""
    return float(np.max(np.abs(q_decomposition_residual_matrix(ledger, p))))


def verify_cutoff_decomposition(ledger, p):
    """Residuals of the Q1 split and of the full cutoff form of Q.

    Returns:
        max of the two residuals, where the split is
        Q1 = Q1_gt + (P - I) Q2_le - Q6_gt - Q6_le and the full form is
        Q = P(beta^2/n + Q2_le + Q4) + Q3 + Q5 + Q1_gt + Q2_gt - Q6_gt - Q6_le.
    """
    split, full = cutoff_residuals(ledger, p)
    return max(split, full)


def cutoff_residuals(ledger, p):
    n = ledger.n
    eye = np.eye(n)
    split = ledger.q1 - (ledger.q1_gt + (p - eye) @ ledger.q2_le - ledger.q6_gt - ledger.q6_le)
    rhs = (p @ (ledger.beta ** 2 / n * eye + ledger.q2_le + ledger.q4) + ledger.q3 + ledger.q5
           + ledger.q1_gt + ledger.q2_gt - ledger.q6_gt - ledger.q6_le)
    return float(np.max(np.abs(split))), float(np.max(np.abs(ledger.q - rhs)))


def c_beta(beta):
    """The collected constant in front of n in E||P(1+beta^2-beta G) - I||_F^2."""
    if not 0 <= beta < 1:
        raise DomainError("c_beta has a pole at beta = 1; need 0 <= beta < 1")
    b2 = beta * beta
    d = 1 - b2
    return ((1 + b2) ** 2 / d + b2 / d + 3 * b2 ** 2 + 3 * b2 ** 3 / d + 1
            - 2 * (1 + b2) - 2 * (1 + b2) * (2 * b2 + 2 * b2 ** 2 / d) + 2 * b2)


# ---------------------------------------------------------------------------
# scalar probes for rate experiments, via subset DP (n up to 20)

def rate_probe_terms(g, beta, i=0, j=1):
    """R6, R7, q3_ij and q5_ij for one pair, from path sums grouped by vertex set.

    Cycles through {i, j} correspond to paths from i to j with at least two
    edges, so every term is a weighted sum over those vertex sets.
    """
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    t = math.tanh(beta * g[i, j])
    lin = beta * g
    tanh = np.tanh(beta * g)
    masks, lin_vals = path_sums_by_vertex_set(lin, i, j)
    t_masks, tanh_vals = path_sums_by_vertex_set(tanh, i, j)
    longer = graphs.popcount(masks) >= 3
    t_longer = graphs.popcount(t_masks) >= 3
    loop_lin = math.fsum(lin_vals[longer])
    loop_tanh = math.fsum(tanh_vals[t_longer])
    r6 = (beta * g[i, j] - t) + loop_lin - loop_tanh
    r7 = t * t * loop_tanh
    members = ((masks[:, None] >> np.arange(n)) & 1).astype(float)
    members[:, i] = 0.0
    extra = members @ (g[:, j] ** 2)
    q3 = beta ** 2 * math.fsum((lin_vals * extra)[longer])
    p_ij = math.fsum(lin_vals)
    q5 = beta ** 2 * g[i, j] ** 2 * p_ij
    return {"r6": r6, "r7": r7, "q3": q3, "q5": q5}
