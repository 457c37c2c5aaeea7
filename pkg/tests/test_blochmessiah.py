"""Takagi factorization, squeeze normal form and mode functions."""

import math

import numpy as np
import pytest
from scipy.linalg import svdvals

from hybrid_sampler import bdg, blochmessiah, model, pipeline
from hybrid_sampler.bdg import BogoliubovDecomposition

from conftest import squeeze_blocks, stable_instance, two_mode_squeeze_blocks

np.random.seed(21)


def random_unitary(n):
    mat = np.random.randn(n, n) + 1j * np.random.randn(n, n)
    q, r = np.linalg.qr(mat)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def geometry_config(**over):
    base = {
        "mode": "geometry_1d",
        "m_a": 2,
        "m_ph": 1,
        "temperature": 0.0,
        "g_a_n0": 0.05,
        "delta_a": 40.0,
        "mu": 0.0,
        "delta_nu": [8.0],
        "omega_nu": [1.3],
        "rabi_mode_amp": [0.9],
        "rabi_drive_amp": 1.1,
        "kappa_nu": 0.05,
        "omega_r": 0.5,
        "n_atoms": 1e5,
    }
    base.update(over)
    return model.config_from_dict(base)


class TestTakagi:
    """Symmetric factorization N = U diag(d) U^T."""

    def test_non_square(self):
        with pytest.raises(ValueError, match="not square"):
            blochmessiah.takagi(np.zeros((2, 3)))

    def test_not_symmetric(self):
        with pytest.raises(ValueError, match="not symmetric"):
            blochmessiah.takagi(np.array([[0.0, 1.0], [0.0, 0.0]]))

    def test_zero_matrix(self):
        d, u = blochmessiah.takagi(np.zeros((3, 3)))
        np.testing.assert_array_equal(d, np.zeros(3))
        np.testing.assert_array_equal(u, np.eye(3))

    def test_empty(self):
        d, u = blochmessiah.takagi(np.zeros((0, 0)))
        assert d.shape == (0,)
        assert u.shape == (0, 0)

    def test_real_with_negative_eigenvalues(self):
        """Negative eigenvalues fold into i-phases of U."""
        n = np.diag([2.0, -3.0])
        d, u = blochmessiah.takagi(n)
        np.testing.assert_allclose(d, [3.0, 2.0])
        np.testing.assert_allclose(u @ np.diag(d) @ u.T, n, atol=1e-12)

    def test_random_complex(self):
        for dim in (2, 4, 6):
            mat = np.random.randn(dim, dim) + 1j * np.random.randn(dim, dim)
            mat = mat + mat.T
            d, u = blochmessiah.takagi(mat)
            assert np.all(np.diff(d) <= 1e-12)
            assert np.all(d >= 0)
            np.testing.assert_allclose(
                u @ np.diag(d) @ u.T, mat, atol=1e-10 * np.max(np.abs(mat))
            )
            np.testing.assert_allclose(
                u.conj().T @ u, np.eye(dim), atol=1e-12
            )

    def test_degenerate_spectrum(self):
        """Repeated singular values still reconstruct exactly."""
        u0 = random_unitary(3)
        mat = u0 @ np.diag([0.8, 0.8, 0.3]) @ u0.T
        d, u = blochmessiah.takagi(mat)
        np.testing.assert_allclose(d, [0.8, 0.8, 0.3], atol=1e-12)
        np.testing.assert_allclose(u @ np.diag(d) @ u.T, mat, atol=1e-10)


class TestBlochMessiah:
    """The passive-squeeze-passive split of a Bogoliubov transform."""

    def test_identity_transform(self):
        dec = BogoliubovDecomposition(
            energies=np.ones(2),
            a=np.eye(2, dtype=complex),
            b=np.zeros((2, 2), dtype=complex),
            m_a=1,
            m_ph=1,
        )
        factors = blochmessiah.bloch_messiah(dec)
        np.testing.assert_array_equal(factors.r, np.zeros(2))
        np.testing.assert_allclose(factors.v, np.eye(2), atol=1e-12)
        np.testing.assert_allclose(factors.w, np.eye(2), atol=1e-12)
        assert factors.max_squeeze == 0.0

    def test_canonical_single_mode(self):
        """A diagonal squeezer passes through with its own parameter."""
        r0 = 0.7
        dec = BogoliubovDecomposition(
            energies=np.ones(1),
            a=np.array([[math.cosh(r0)]], dtype=complex),
            b=np.array([[-math.sinh(r0)]], dtype=complex),
            m_a=1,
            m_ph=0,
        )
        factors = blochmessiah.bloch_messiah(dec)
        assert factors.r[0] == pytest.approx(r0, abs=1e-12)
        assert abs(factors.v[0, 0]) == pytest.approx(1.0, abs=1e-12)
        a_rec, b_rec = factors.reconstruct()
        np.testing.assert_allclose(a_rec, dec.a, atol=1e-12)
        np.testing.assert_allclose(b_rec, dec.b, atol=1e-12)

    def test_single_mode_squeeze_value(self):
        """e = 1, t = 0.6 squeezes by (1/4) log 4."""
        dec = bdg.bogoliubov_diagonalize(
            bdg.assemble_hamiltonian(squeeze_blocks(1.0, 0.6))
        )
        factors = blochmessiah.bloch_messiah(dec)
        assert factors.r[0] == pytest.approx(0.25 * math.log(4.0), abs=1e-10)

    def test_squeeze_grows_with_coupling(self):
        values = []
        for t in (0.2, 0.4, 0.6):
            dec = bdg.bogoliubov_diagonalize(
                bdg.assemble_hamiltonian(squeeze_blocks(1.0, t))
            )
            values.append(blochmessiah.bloch_messiah(dec).r[0])
        assert values[0] < values[1] < values[2]

    def test_degenerate_squeeze_pair(self):
        """Two-mode squeezing gives two equal parameters."""
        dec = bdg.bogoliubov_diagonalize(
            bdg.assemble_hamiltonian(two_mode_squeeze_blocks(1.0, 0.4))
        )
        factors = blochmessiah.bloch_messiah(dec)
        want = 0.25 * math.log(1.4 / 0.6)
        np.testing.assert_allclose(factors.r, [want, want], atol=1e-10)
        a_rec, b_rec = factors.reconstruct()
        assert np.max(np.abs(a_rec - dec.a)) < 1e-10
        assert np.max(np.abs(b_rec - dec.b)) < 1e-10

    def test_random_stable_instances(self, rng):
        """Unitarity, ordering and reconstruction on random draws."""
        for m_a, m_ph in ((1, 1), (2, 1), (2, 2)):
            _, _, dec = stable_instance(rng, m_a, m_ph)
            factors = blochmessiah.bloch_messiah(dec)
            m = factors.m
            eye = np.eye(m)
            assert np.max(np.abs(factors.v @ factors.v.conj().T - eye)) < 1e-10
            assert np.max(np.abs(factors.w @ factors.w.conj().T - eye)) < 1e-10
            assert np.all(np.diff(factors.r) <= 1e-12)
            assert np.all(factors.r >= 0)
            a_rec, b_rec = factors.reconstruct()
            scale = max(1.0, np.max(np.abs(dec.a)))
            assert np.max(np.abs(a_rec - dec.a)) < 1e-9 * scale
            assert np.max(np.abs(b_rec - dec.b)) < 1e-9 * scale

    def test_squeeze_equals_singular_values(self, rng):
        """sinh(r) must match the singular values of B."""
        _, _, dec = stable_instance(rng, 2, 1)
        factors = blochmessiah.bloch_messiah(dec)
        np.testing.assert_allclose(
            np.sinh(factors.r), svdvals(dec.b), atol=1e-9
        )
        np.testing.assert_allclose(
            np.cosh(factors.r), svdvals(dec.a), atol=1e-9
        )

    def test_coupled_instance_has_nontrivial_rotations(self):
        blocks = model.CouplingBlocks(
            eps_a=np.diag([1.0, 1.2]).astype(complex),
            eps_ph=np.zeros((0, 0), dtype=complex),
            chi_phph=np.zeros((0, 0), dtype=complex),
            chi_pha=np.zeros((0, 2), dtype=complex),
            chit_aa=np.array([[0.3, 0.2], [0.2, 0.25]], dtype=complex),
            chit_pha=np.zeros((0, 2), dtype=complex),
        )
        dec = bdg.bogoliubov_diagonalize(bdg.assemble_hamiltonian(blocks))
        factors = blochmessiah.bloch_messiah(dec)
        assert np.max(np.abs(factors.v - np.eye(2))) > 0.01
        assert np.all(factors.r > 0)

    def test_non_symplectic_pair_rejected(self):
        dec = BogoliubovDecomposition(
            energies=np.ones(2),
            a=np.random.randn(2, 2) + 1j * np.random.randn(2, 2),
            b=np.random.randn(2, 2) + 1j * np.random.randn(2, 2),
            m_a=2,
            m_ph=0,
        )
        with pytest.raises(blochmessiah.ReconstructionError, match="not symplectic"):
            blochmessiah.bloch_messiah(dec)

    def test_unbounded_kernel_rejected(self):
        dec = BogoliubovDecomposition(
            energies=np.ones(1),
            a=np.array([[1.0]], dtype=complex),
            b=np.array([[-2.0]], dtype=complex),
            m_a=1,
            m_ph=0,
        )
        with pytest.raises(blochmessiah.ReconstructionError, match=">= 1"):
            blochmessiah.bloch_messiah(dec)

    def test_spectrum_accessor_copies(self):
        dec = bdg.bogoliubov_diagonalize(
            bdg.assemble_hamiltonian(squeeze_blocks(1.0, 0.6))
        )
        factors = blochmessiah.bloch_messiah(dec)
        spectrum = blochmessiah.squeeze_spectrum(factors)
        spectrum[0] = -1.0
        assert factors.r[0] > 0


class TestModeFunctions:
    """Quasiparticle mode functions on the geometry grid."""

    def test_uncoupled_geometry_passthrough(self):
        """No drive, no interaction: u is the bare basis and v vanishes.

        The cavity energy is pushed above both trap modes so the
        ascending quasiparticle order coincides with the bare layout.
        """
        cfg = geometry_config(
            g_a_n0=0.0, rabi_drive_amp=0.0, mu=0.0, omega_nu=[5.0]
        )
        blocks, basis = model.coupling_blocks(cfg)
        dec = bdg.bogoliubov_diagonalize(bdg.assemble_hamiltonian(blocks))
        factors = blochmessiah.bloch_messiah(dec)
        funcs = blochmessiah.mode_functions(factors, basis, dec)
        np.testing.assert_allclose(
            funcs.u_atom[:2].real, basis.phi_l, atol=1e-10
        )
        assert np.max(np.abs(funcs.u_atom[2])) < 1e-12
        np.testing.assert_allclose(funcs.u_photon[2], [1.0], atol=1e-12)
        assert np.max(np.abs(funcs.v_atom)) < 1e-12
        assert np.max(np.abs(funcs.v_photon)) < 1e-12
        np.testing.assert_allclose(funcs.norms(), np.ones(3), atol=1e-10)

    def test_coupled_geometry_norms(self):
        funcs = pipeline.quasiparticle_modes(geometry_config(temperature=0.3))
        np.testing.assert_allclose(funcs.norms(), np.ones(3), atol=1e-8)
        assert np.max(np.abs(funcs.v_atom)) > 0

    def test_requires_grid_basis(self):
        dec = bdg.bogoliubov_diagonalize(
            bdg.assemble_hamiltonian(squeeze_blocks(1.0, 0.6))
        )
        factors = blochmessiah.bloch_messiah(dec)
        with pytest.raises(ValueError, match="direct-blocks"):
            blochmessiah.mode_functions(factors, None)

    def test_partition_mismatch(self):
        cfg = geometry_config()
        _, basis = model.coupling_blocks(cfg)
        small = geometry_config(m_a=1)
        blocks_small, _ = model.coupling_blocks(small)
        dec = bdg.bogoliubov_diagonalize(bdg.assemble_hamiltonian(blocks_small))
        factors = blochmessiah.bloch_messiah(dec)
        with pytest.raises(ValueError, match="atom modes"):
            blochmessiah.mode_functions(factors, basis)

    def test_cross_check_rejects_foreign_factors(self):
        cfg = geometry_config()
        blocks, basis = model.coupling_blocks(cfg)
        dec = bdg.bogoliubov_diagonalize(bdg.assemble_hamiltonian(blocks))
        other = geometry_config(rabi_drive_amp=0.3)
        blocks2, _ = model.coupling_blocks(other)
        dec2 = bdg.bogoliubov_diagonalize(bdg.assemble_hamiltonian(blocks2))
        foreign = blochmessiah.bloch_messiah(dec2)
        with pytest.raises(ValueError, match="disagree"):
            blochmessiah.mode_functions(foreign, basis, dec)

    def test_direct_mode_pipeline_refuses(self):
        cfg = model.config_from_dict(
            {
                "mode": "direct_blocks",
                "m_a": 1,
                "m_ph": 0,
                "temperature": 0.0,
                "direct_blocks": {"eps_a": [[1.0]], "chit_aa": [[0.4]]},
            }
        )
        with pytest.raises(ValueError, match="direct-blocks"):
            pipeline.quasiparticle_modes(cfg)
