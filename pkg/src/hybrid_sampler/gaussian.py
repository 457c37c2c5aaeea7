"""Quasi-equilibrium Gaussian state of the coupled system.

The quasiparticle modes thermalize independently, so the state is fully
described by the normal/anomalous correlator matrix

    G = <(c^dag, c)^T (c, c^dag)> - vacuum part

in the bare-mode basis.  From G one derives the base matrix C whose
replicated hafnians give the joint count distribution, together with the
normalization 1 / sqrt(det(1 + G)).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CountsVector",
    "GaussianState",
    "covariance",
    "base_matrix",
    "extend_matrix",
    "mean_occupations",
]


@dataclass(frozen=True)
class CountsVector:
    """A joint outcome: per-mode atom and photon counts."""

    atoms: tuple
    photons: tuple

    @property
    def total(self):
        return sum(self.atoms) + sum(self.photons)

    def key(self):
        return self.atoms + self.photons

    def __str__(self):
        return "n=%s q=%s" % (list(self.atoms), list(self.photons))


@dataclass
class GaussianState:
    """Bare-mode correlators of the quasi-equilibrium state.

    Attributes:
        g: 2M x 2M correlator matrix, blocks [[<c^dag c>^T, <c^dag c^dag>],
            [<c c>, <c c^dag>^T]] ordered to match the (c^dag, c) vector
        temperature: quasiparticle temperature the state was built at
        c: 2M x 2M base matrix entering the hafnian count formula
        log_norm: log sqrt(det(1 + G)), subtracted from every log weight
        m_a: number of atom modes
        m_ph: number of photon modes
    """

    g: np.ndarray
    temperature: float
    c: np.ndarray
    log_norm: float
    m_a: int
    m_ph: int
    _fingerprint: str = field(default="", repr=False)

    @property
    def m(self):
        return self.m_a + self.m_ph

    def mean_occupations(self):
        """Per-mode expected counts <c_k^dag c_k> (atoms then photons)."""
        m = self.m
        return np.ascontiguousarray(np.real(np.diag(self.g)[:m]))

    def fingerprint(self):
        """Hex digest identifying the state (correlators + partition)."""
        if not self._fingerprint:
            h = hashlib.sha256()
            h.update(np.ascontiguousarray(self.g).tobytes())
            h.update(np.float64(self.temperature).tobytes())
            h.update(np.int64(self.m_a).tobytes())
            h.update(np.int64(self.m_ph).tobytes())
            object.__setattr__(self, "_fingerprint", h.hexdigest())
        return self._fingerprint


def covariance(dec, temperature, *, tol_symmetry=1e-8):
    """Build the quasi-equilibrium Gaussian state from a diagonalization.

    Each quasiparticle mode j carries the thermal factor
    Q_j = coth(E_j / 2T) (Q_j = 1 at T = 0); rotating diag(Q, Q) back
    through the inverse transform and subtracting the vacuum half gives
    the bare-mode correlator matrix.

    Args:
        dec (BogoliubovDecomposition): stable-phase diagonalization
        temperature (float): quasiparticle temperature, >= 0
        tol_symmetry (float): largest tolerated asymmetry of the derived
            base matrix

    Returns:
        GaussianState
    """
    if temperature < 0:
        raise ValueError("temperature must be nonnegative")
    m = dec.m
    energies = np.asarray(dec.energies, dtype=float)
    if temperature == 0:
        q = np.ones(m)
    else:
        q = 1.0 / np.tanh(energies / (2.0 * temperature))
    r_inv = dec.r_inverse
    qq = np.concatenate([q, q])
    g = 0.5 * (r_inv * qq[None, :]) @ r_inv.conj().T
    g[np.diag_indices(2 * m)] -= 0.5
    # G is Hermitian up to roundoff by construction.
    g = 0.5 * (g + g.conj().T)

    c, log_norm = base_matrix(g, tol_symmetry=tol_symmetry)
    return GaussianState(
        g=g,
        temperature=float(temperature),
        c=c,
        log_norm=log_norm,
        m_a=dec.m_a,
        m_ph=dec.m_ph,
    )


def mean_occupations(state):
    """Per-mode expected counts of a state (atoms first, then photons)."""
    return state.mean_occupations()


def base_matrix(g, *, tol_symmetry=1e-8):
    """Base matrix C = P G (1 + G)^-1 and the state log-normalization.

    P swaps the creation/annihilation half-blocks; the product is
    symmetric for every physical correlator matrix, which is enforced
    here and then imposed exactly.

    Args:
        g (array or GaussianState): 2M x 2M correlator matrix, or a state
            whose correlator matrix to use
        tol_symmetry (float): largest tolerated asymmetry of C

    Returns:
        tuple[array, float]: the base matrix and log sqrt(det(1 + G)).
    """
    if isinstance(g, GaussianState):
        g = g.g
    g = np.asarray(g, dtype=complex)
    two_m = g.shape[0]
    if g.ndim != 2 or g.shape[1] != two_m or two_m % 2:
        raise ValueError("correlator matrix must be square of even size")
    m = two_m // 2
    one_plus = np.eye(two_m, dtype=complex) + g
    # N = G (1 + G)^-1 solved as a right division to avoid the explicit
    # inverse.
    n = np.linalg.solve(one_plus.T, g.T).T
    c = np.concatenate([n[m:], n[:m]], axis=0)
    scale = max(1.0, float(np.max(np.abs(c)))) if c.size else 1.0
    residual = float(np.max(np.abs(c - c.T))) if c.size else 0.0
    if residual > tol_symmetry * scale:
        raise ValueError(
            "base matrix asymmetry %.3e exceeds tolerance; the correlator "
            "matrix does not describe a physical Gaussian state" % residual
        )
    c = 0.5 * (c + c.T)

    sign, logabs = np.linalg.slogdet(one_plus)
    if abs(sign.imag) > 1e-8 or sign.real <= 0:
        raise ValueError(
            "det(1 + G) is not real positive; the correlator matrix does "
            "not describe a physical Gaussian state"
        )
    log_norm = 0.5 * (logabs + np.log(sign.real))
    return c, log_norm


def extend_matrix(c, counts):
    """Replicate base-matrix rows/columns per requested counts.

    Mode k with count n_k contributes n_k copies of its annihilation row
    and n_k copies of its creation row; the hafnian of the result is the
    unnormalized outcome weight.

    Args:
        c (array): 2M x 2M base matrix
        counts (CountsVector): target occupation numbers

    Returns:
        array: extended matrix of size 2 * total counts.
    """
    c = np.asarray(c)
    m = c.shape[0] // 2
    reps = np.asarray(counts.key(), dtype=int)
    if reps.size != m:
        raise ValueError(
            "counts vector has %d modes, base matrix has %d" % (reps.size, m)
        )
    if np.any(reps < 0):
        raise ValueError("counts must be nonnegative")
    idx = np.concatenate(
        [np.repeat(np.arange(m), reps), np.repeat(np.arange(m, 2 * m), reps)]
    )
    return c[np.ix_(idx, idx)]
