"""Graph and path weights, the graph-sum form of hat_z, and exact edge moments."""

import math
from dataclasses import dataclass

import numpy as np

from . import graphs
from .errors import InvalidArgumentError, ResourceLimitError

DEFAULT_QUAD_POINTS = 96
HAT_Z_GRAPH_CAP = 7


def graph_weight(gamma, g, beta):
    """Product of tanh(beta*g_e) over the edges of gamma (1 for the empty graph)."""
    return math.prod(math.tanh(beta * g[u, v]) for u, v in gamma.edges)


def path_weight(gamma, g, beta):
    """Product of beta*g_e over the edges of gamma."""
    return math.prod(beta * g[u, v] for u, v in gamma.edges)


def edge_values(g, beta, kind="tanh"):
    """Per-edge factors in edge-mask bit order."""
    n = g.shape[0]
    iu = np.triu_indices(n, k=1)
    x = beta * np.asarray(g, dtype=float)[iu]
    return np.tanh(x) if kind == "tanh" else x


def mask_products(values, masks):
    """Product of values[k] over the set bits k of each mask.

    Splits the bit range into two halves and multiplies lookups in the
    2^half subset-product tables.
    """
    values = np.asarray(values, dtype=float)
    masks = np.asarray(masks, dtype=np.int64)
    m = len(values)
    lo_bits = m // 2
    tables = []
    for chunk in (values[:lo_bits], values[lo_bits:]):
        t = np.ones(1)
        for v in chunk:
            t = np.concatenate([t, t * v])
        tables.append(t)
    lo = masks & ((1 << lo_bits) - 1)
    hi = masks >> lo_bits
    return tables[0][lo] * tables[1][hi]


def hat_z_graph_sum(g, beta, n=None):
    """Sum of w(gamma) over every simple closed graph on [n]."""
    n = g.shape[0] if n is None else n
    if n > HAT_Z_GRAPH_CAP:
        raise ResourceLimitError(f"graph-sum evaluation of hat_z is capped at n <= {HAT_Z_GRAPH_CAP}")
    masks = graphs.closed_graph_masks(n)
    return math.fsum(mask_products(edge_values(g, beta), masks))


@dataclass(frozen=True)
class EdgeMoment:
    t2: float
    t4: float
    variance: float


def gauss_expectation(f, std, points=DEFAULT_QUAD_POINTS):
    """E f(X) for X ~ N(0, std^2) by Gauss-Hermite (probabilists') quadrature."""
    x, w = np.polynomial.hermite_e.hermegauss(points)
    return float(np.sum(w * f(std * x)) / math.sqrt(2 * math.pi))


def edge_moments(beta, n, quad_points=DEFAULT_QUAD_POINTS):
    """E tanh^2 and E tanh^4 of beta*g with g ~ N(0, 1/n)."""
    if quad_points < 32:
        raise InvalidArgumentError("use at least 32 quadrature points")
    std = beta / math.sqrt(n)
    if std == 0:
        return EdgeMoment(0.0, 0.0, 1.0 / n)
    t2 = gauss_expectation(lambda x: np.tanh(x) ** 2, std, quad_points)
    t4 = gauss_expectation(lambda x: np.tanh(x) ** 4, std, quad_points)
    return EdgeMoment(t2, t4, 1.0 / n)


def closed_graph_size_histogram(n):
    """counts[c] = number of closed graphs on [n] with c edges."""
    _, _, counts = graphs.closed_graph_table(n)
    return np.bincount(counts, minlength=n * (n - 1) // 2 + 1)


def exact_tail_second_moment(n, k, beta, quad_points=DEFAULT_QUAD_POINTS):
    """E (sum of w(gamma) over closed graphs with at least k edges)^2.

    Distinct closed graphs have orthogonal weights, since an edge covered once
    carries an odd tanh moment. The second moment is therefore
    sum over those graphs of t2^|gamma|.
    """
    t2 = edge_moments(beta, n, quad_points).t2
    hist = closed_graph_size_histogram(n)
    return math.fsum(int(c) * t2 ** size for size, c in enumerate(hist) if size >= k)


def closed_graph_generating_function(n, x):
    """Sum of x^|gamma| over all closed graphs on [n], in closed form.

    The even subgraphs of K_n form the cycle space, whose weight enumerator
    follows from the cut space by MacWilliams duality:
    2^-n (1+x)^C(n,2) sum_k C(n,k) ((1-x)/(1+x))^(k(n-k)).
    """
    edges = n * (n - 1) // 2
    ratio = (1 - x) / (1 + x)
    return 2.0 ** -n * (1 + x) ** edges * math.fsum(
        math.comb(n, k) * ratio ** (k * (n - k)) for k in range(n + 1))


def hat_z_variance(n, beta, quad_points=DEFAULT_QUAD_POINTS):
    """Exact Var(hat_z) at finite n: sum over nonempty closed graphs of t2^|gamma|."""
    t2 = edge_moments(beta, n, quad_points).t2
    return closed_graph_generating_function(n, t2) - 1.0
