"""Disorder sampling and exact Gibbs averages by full spin enumeration."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidDimensionError, ResourceLimitError

ENUMERATION_CAP = 20


@dataclass(frozen=True)
class GibbsSummary:
    """Exact Gibbs quantities for one disorder realization.

    Attributes:
        z: partition function with the 2^-n normalization.
        hat_z: z divided by the product of cosh(beta*g_uv) over all pairs.
        m: two-point matrix <sigma_i sigma_j>.
    """

    z: float
    hat_z: float
    m: np.ndarray


def sample_goe(n, seed):
    """Symmetric coupling matrix with zero diagonal and N(0, 1/n) entries.

    The upper triangle is filled in row-major order from a Philox stream keyed
    by ``seed``, so the matrix depends only on (n, seed).
    """
    n = int(n)
    if n < 1:
        raise InvalidDimensionError(f"dimension must be positive, got {n}")
    rng = np.random.Generator(np.random.Philox(int(seed) % 2**64))
    iu = np.triu_indices(n, k=1)
    g = np.zeros((n, n))
    g[iu] = rng.standard_normal(len(iu[0])) / np.sqrt(n)
    return g + g.T


def _check_square(g):
    g = np.asarray(g, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] == 0:
        raise InvalidDimensionError(f"expected a nonempty square matrix, got shape {g.shape}")
    return g


def spins_from_word(word, n):
    """Decode an n-bit word into a +-1 vector (bit set means spin +1)."""
    bits = (int(word) >> np.arange(n)) & 1
    return 2.0 * bits - 1.0


def hamiltonian(sigma, g, beta):
    """Return beta * sum_{i<j} g_ij sigma_i sigma_j."""
    g = _check_square(g)
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (g.shape[0],):
        raise InvalidDimensionError(
            f"spin vector of length {sigma.size} does not match {g.shape[0]}x{g.shape[0]} couplings")
    return 0.5 * beta * float(sigma @ g @ sigma)


def _spin_table(n):
    # rows are all configurations of n spins, word w -> row w
    words = np.arange(2 ** n)
    return 2.0 * ((words[:, None] >> np.arange(n)) & 1) - 1.0


def _half_energies(spins, block, beta):
    return 0.5 * beta * np.einsum("ai,ij,aj->a", spins, block, spins)


def gibbs_exact(g, beta, cap=ENUMERATION_CAP):
    """Exact z, hat_z and two-point matrix by summing over all 2^n configurations.

    The spins are split into two halves a and b. The energy then separates as
    H = H_a + H_b + sigma_a^T G_ab sigma_b, so the Boltzmann weights form a
    2^{n_a} x 2^{n_b} array and every pair correlation is a matrix product
    against that array.
    """
    g = _check_square(g)
    n = g.shape[0]
    if n > cap:
        raise ResourceLimitError(
            f"exact enumeration of 2^{n} configurations exceeds the cap n <= {cap}; "
            "use the truncated path-matrix or resolvent workflows for larger n")
    if beta == 0:
        return GibbsSummary(1.0, 1.0, np.eye(n))
    na = n // 2
    nb = n - na
    a = _spin_table(na)
    b = _spin_table(nb)
    h = (_half_energies(a, g[:na, :na], beta)[:, None]
         + _half_energies(b, g[na:, na:], beta)[None, :]
         + beta * (a @ g[:na, na:] @ b.T))
    h_max = h.max()
    w = np.exp(h - h_max)
    total = w.sum()
    rows = w.sum(axis=1)
    cols = w.sum(axis=0)
    m = np.empty((n, n))
    m[:na, :na] = (a.T * rows) @ a / total
    m[na:, na:] = (b.T * cols) @ b / total
    m[:na, na:] = a.T @ w @ b / total
    m[na:, :na] = m[:na, na:].T
    np.fill_diagonal(m, 1.0)
    log_z = h_max + np.log(total) - n * np.log(2.0)
    iu = np.triu_indices(n, k=1)
    log_cosh = np.sum(np.logaddexp(beta * g[iu], -beta * g[iu]) - np.log(2.0))
    return GibbsSummary(float(np.exp(log_z)), float(np.exp(log_z - log_cosh)), m)


def one_point_functions(g, beta, cap=ENUMERATION_CAP):
    """Vector of <sigma_i> by brute force; vanishes by spin-flip symmetry."""
    g = _check_square(g)
    n = g.shape[0]
    if n > cap:
        raise ResourceLimitError(f"n={n} exceeds the enumeration cap {cap}")
    spins = _spin_table(n)
    h = _half_energies(spins, g, beta)
    w = np.exp(h - h.max())
    return (w @ spins) / w.sum()
