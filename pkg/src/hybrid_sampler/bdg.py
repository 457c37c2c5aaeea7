"""Quadratic Hamiltonian assembly and Bogoliubov diagonalization.

The Hamiltonian is stored as the matrix of the quadratic form over the
operator vector ``(c^dag, c)``:

    H = [[chi_t,        eps + chi ],
         [(eps + chi)*, chi_t*    ]]

with ``eps`` the single-particle energies, ``chi`` the number-conserving
coupling and ``chi_t`` the pair coupling.  The same form reordered over
``(c, c^dag)`` gives the Hermitian dynamical matrix ``K`` obtained by
swapping the block rows of ``H``; ``K`` is positive definite exactly when
the system is thermodynamically stable, which is what the Cholesky route
below relies on.

The diagonalizing transform follows the standard Cholesky method:
factor ``K = L L^dag``, diagonalize ``L^dag J L`` with ``J =
diag(I, -I)``, and rescale the positive-eigenvalue columns.  The
negative-eigenvalue family is then reconstructed from the positive one by
conjugate mirroring, which enforces the ``[[A*, -B*], [-B, A]]`` block
structure of the transform exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .model import CouplingBlocks

__all__ = [
    "QuadraticHamiltonian",
    "BogoliubovDecomposition",
    "StabilityReport",
    "InstabilityError",
    "assemble_hamiltonian",
    "check_stability",
    "bogoliubov_diagonalize",
    "symplectic_metric",
]

_LAYOUT_TOL = 1e-12
_DEGENERACY_TOL = 1e-12


class InstabilityError(RuntimeError):
    """The quadratic form has no positive quasiparticle spectrum.

    Attributes:
        eigenvalue: the offending symplectic eigenvalue, when available.
    """

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


def symplectic_metric(m):
    """The bosonic metric J = diag(I_m, -I_m)."""
    return np.diag(np.concatenate([np.ones(m), -np.ones(m)]))


def _swap_blocks(mat):
    m = mat.shape[0] // 2
    return np.vstack([mat[m:], mat[:m]])


@dataclass
class QuadraticHamiltonian:
    """Assembled 2M x 2M quadratic-form matrix with its mode partition."""

    h: np.ndarray
    m_a: int
    m_ph: int

    @property
    def m(self):
        return self.m_a + self.m_ph

    @property
    def dynamical(self):
        """Hermitian reordering of the form over (c, c^dag); positive
        definite iff the system is stable."""
        return _swap_blocks(self.h)

    @property
    def hermiticity_residual(self):
        return float(np.max(np.abs(self.h - self.h.conj().T)))


def assemble_hamiltonian(blocks):
    """Assemble the quadratic-form matrix from coupling blocks.

    Args:
        blocks (CouplingBlocks): validated coupling blocks

    Returns:
        QuadraticHamiltonian

    Raises:
        ValueError: if the blocks do not define a Hermitian operator
            (``eps + chi`` must be Hermitian and the pair matrix
            symmetric).
    """
    if isinstance(blocks, CouplingBlocks):
        blocks.validate()
    m_a, m_ph, m = blocks.m_a, blocks.m_ph, blocks.m

    eps = np.zeros((m, m), dtype=complex)
    eps[:m_a, :m_a] = blocks.eps_a
    eps[m_a:, m_a:] = blocks.eps_ph

    chi = np.zeros((m, m), dtype=complex)
    chi[:m_a, m_a:] = blocks.chi_aph
    chi[m_a:, :m_a] = blocks.chi_pha
    chi[m_a:, m_a:] = blocks.chi_phph

    chit = np.zeros((m, m), dtype=complex)
    chit[:m_a, :m_a] = blocks.chit_aa
    chit[:m_a, m_a:] = blocks.chit_aph
    chit[m_a:, :m_a] = blocks.chit_pha

    top = eps + chi
    scale = max(1.0, float(np.max(np.abs(top))), float(np.max(np.abs(chit))))
    herm_residual = np.max(np.abs(top - top.conj().T))
    if herm_residual > _LAYOUT_TOL * scale:
        raise ValueError(
            "eps + chi is not Hermitian (residual %.3e); the blocks do not "
            "define a Hermitian operator" % herm_residual
        )
    sym_residual = np.max(np.abs(chit - chit.T))
    if sym_residual > _LAYOUT_TOL * scale:
        raise ValueError(
            "the pair-coupling matrix is not symmetric (residual %.3e); "
            "chit_pha must be real for the conjugate-pair convention" % sym_residual
        )
    top = 0.5 * (top + top.conj().T)
    chit = 0.5 * (chit + chit.T)

    h = np.block([[chit, top], [top.conj(), chit.conj()]])
    residual = np.max(np.abs(h - h.conj().T))
    if residual <= _LAYOUT_TOL * scale:
        h = 0.5 * (h + h.conj().T)
    return QuadraticHamiltonian(h=h, m_a=m_a, m_ph=m_ph)


@dataclass
class BogoliubovDecomposition:
    """Symplectic diagonalization of a stable quadratic Hamiltonian.

    ``energies`` are the quasiparticle energies in ascending order and
    ``a``/``b`` the Bogoliubov coefficient matrices.  The bare-to-
    quasiparticle transform is ``r_tilde = [[A*, -B*], [-B, A]]`` and its
    inverse ``r_inverse = [[A^T, B^dag], [B^T, A^dag]]``; both are
    reassembled from ``a`` and ``b`` on access so extraction and
    reassembly agree bit for bit.
    """

    energies: np.ndarray
    a: np.ndarray
    b: np.ndarray
    m_a: int
    m_ph: int

    @property
    def m(self):
        return self.m_a + self.m_ph

    @property
    def r_tilde(self):
        return np.block(
            [[self.a.conj(), -self.b.conj()], [-self.b, self.a]]
        )

    @property
    def r_inverse(self):
        return np.block(
            [[self.a.T, self.b.conj().T], [self.b.T, self.a.conj().T]]
        )

    def symplectic_residual(self):
        rt = self.r_tilde
        j = symplectic_metric(self.m)
        return float(np.max(np.abs(rt @ j @ rt.conj().T - j)))

    def diagonalization_residual(self, ham):
        """Residual of the congruence that diagonalizes the form."""
        r = self.r_inverse
        target = np.diag(np.concatenate([self.energies, self.energies]))
        return float(np.max(np.abs(r.conj().T @ ham.dynamical @ r - target)))


def _fix_column_phases(t1):
    """Rotate each column so its largest-magnitude entry is real positive."""
    for col in range(t1.shape[1]):
        idx = int(np.argmax(np.abs(t1[:, col])))
        val = t1[idx, col]
        mag = abs(val)
        if mag > 0:
            t1[:, col] *= val.conjugate() / mag
    return t1


def _order_degenerate(t1, energies, scale):
    """Stable-reorder columns within degenerate energy clusters.

    Columns whose energies agree within tolerance are ordered by the row
    index of their first significant coefficient, which makes the output
    independent of backend-specific eigenvector ordering.
    """
    order = np.arange(len(energies))
    start = 0
    while start < len(energies):
        stop = start + 1
        while (
            stop < len(energies)
            and energies[stop] - energies[start] <= _DEGENERACY_TOL * max(1.0, scale)
        ):
            stop += 1
        if stop - start > 1:
            def first_significant(col):
                mags = np.abs(t1[:, col])
                peak = mags.max()
                hits = np.nonzero(mags > 1e-8 * max(peak, 1.0))[0]
                return int(hits[0]) if hits.size else 0

            cluster = sorted(order[start:stop], key=first_significant)
            order[start:stop] = cluster
        start = stop
    return t1[:, order], energies[order]


def _columns_from_jk(k, m, scale, tol):
    """Fallback eigen-route on J K for marginally definite forms."""
    jk = k.copy()
    jk[m:] *= -1.0
    lam, vec = np.linalg.eig(jk)
    worst = np.max(np.abs(lam.imag)) if lam.size else 0.0
    if worst > tol * scale:
        bad = lam[int(np.argmax(np.abs(lam.imag)))]
        raise InstabilityError(
            "complex symplectic eigenvalue %r (imaginary part %.3e exceeds "
            "tolerance)" % (bad, worst),
            eigenvalue=bad,
        )
    lam = lam.real
    pos = np.nonzero(lam > tol * scale)[0]
    if pos.size != m:
        nearest = lam[int(np.argmin(np.abs(lam)))]
        raise InstabilityError(
            "expected %d positive quasiparticle energies, found %d "
            "(eigenvalue %.3e at the stability margin)" % (m, pos.size, nearest),
            eigenvalue=nearest,
        )
    order = pos[np.argsort(lam[pos], kind="stable")]
    energies = lam[order]
    t1 = vec[:, order].astype(complex)

    jdiag = np.concatenate([np.ones(m), -np.ones(m)])
    start = 0
    while start < m:
        stop = start + 1
        while (
            stop < m
            and energies[stop] - energies[start] <= _DEGENERACY_TOL * max(1.0, scale)
        ):
            stop += 1
        for i in range(start, stop):
            for j in range(start, i):
                overlap = np.dot(t1[:, j].conj() * jdiag, t1[:, i])
                t1[:, i] -= overlap * t1[:, j]
            norm = np.dot(t1[:, i].conj() * jdiag, t1[:, i]).real
            if norm <= tol * max(1.0, scale):
                raise InstabilityError(
                    "quasiparticle mode with vanishing symplectic norm "
                    "(energy %.3e); the form is at the stability margin" % energies[i],
                    eigenvalue=energies[i],
                )
            t1[:, i] /= np.sqrt(norm)
        start = stop
    return energies, t1


def bogoliubov_diagonalize(ham, *, tol_stability=1e-10):
    """Diagonalize a stable quadratic Hamiltonian.

    Args:
        ham (QuadraticHamiltonian): assembled Hamiltonian
        tol_stability (float): scale-relative threshold on imaginary
            parts and near-zero symplectic eigenvalues

    Returns:
        BogoliubovDecomposition

    Raises:
        InstabilityError: when the dynamical form is not positive
            definite, carrying the offending eigenvalue.
    """
    m = ham.m
    k = ham.dynamical
    k = 0.5 * (k + k.conj().T)
    scale = float(np.linalg.norm(k, 2)) if m else 0.0

    try:
        chol = np.linalg.cholesky(k)
    except np.linalg.LinAlgError:
        energies, t1 = _marginal_route(k, m, scale, tol_stability)
    else:
        jl = chol.copy()
        jl[m:] *= -1.0
        core = chol.conj().T @ jl
        core = 0.5 * (core + core.conj().T)
        lam, u = np.linalg.eigh(core)
        if lam[m - 1] >= 0 or lam[m] <= 0:
            nearest = lam[int(np.argmin(np.abs(lam)))]
            raise InstabilityError(
                "symplectic spectrum does not split into %d positive and %d "
                "negative branches (eigenvalue %.3e)" % (m, m, nearest),
                eigenvalue=nearest,
            )
        energies = lam[m:]
        if energies[0] <= tol_stability * scale:
            raise InstabilityError(
                "quasiparticle energy %.3e is not positive at tolerance" % energies[0],
                eigenvalue=energies[0],
            )
        t1 = solve_triangular(chol.conj().T, u[:, m:], lower=False)
        t1 = t1 * np.sqrt(energies)[None, :]

    t1 = np.ascontiguousarray(t1)
    t1 = _fix_column_phases(t1)
    t1, energies = _order_degenerate(t1, energies, scale)

    # Mirror the positive family to the negative one; this bakes the
    # particle-hole structure of the transform in exactly.
    x = t1[:m]
    z = t1[m:]
    return BogoliubovDecomposition(
        energies=np.asarray(energies, dtype=float),
        a=x.T.copy(),
        b=z.T.copy(),
        m_a=ham.m_a,
        m_ph=ham.m_ph,
    )


def _marginal_route(k, m, scale, tol):
    """Cholesky failed; decide between instability and a marginal form."""
    min_eig = float(np.linalg.eigvalsh(k).min()) if m else 0.0
    if min_eig < -tol * max(1.0, scale):
        raise InstabilityError(
            "dynamical form has negative eigenvalue %.3e; the Hamiltonian "
            "is unstable" % min_eig,
            eigenvalue=min_eig,
        )
    return _columns_from_jk(k, m, scale, tol)


@dataclass
class StabilityReport:
    """Definiteness of the stored form and the quasiparticle verdict.

    ``positive_definite`` and ``min_eigenvalue`` refer to the literal
    stored matrix, which is indefinite for any number-conserving part, so
    ``stable`` (all quasiparticle energies real and positive) is the
    physically meaningful flag.
    """

    positive_definite: bool
    min_eigenvalue: float
    stable: bool
    min_quasiparticle_energy: float = None
    detail: str = ""


def check_stability(ham, *, tol_stability=1e-10):
    """Assess a quadratic Hamiltonian without raising on instability."""
    hermitian_part = 0.5 * (ham.h + ham.h.conj().T)
    eigs = np.linalg.eigvalsh(hermitian_part)
    min_eig = float(eigs[0]) if eigs.size else 0.0
    try:
        dec = bogoliubov_diagonalize(ham, tol_stability=tol_stability)
    except InstabilityError as exc:
        return StabilityReport(
            positive_definite=bool(min_eig > 0),
            min_eigenvalue=min_eig,
            stable=False,
            min_quasiparticle_energy=None,
            detail=str(exc),
        )
    return StabilityReport(
        positive_definite=bool(min_eig > 0),
        min_eigenvalue=min_eig,
        stable=True,
        min_quasiparticle_energy=float(dec.energies[0]),
        detail="",
    )
