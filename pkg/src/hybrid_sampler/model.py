"""Physical system description and effective coupling blocks.

The package models a driven optical cavity coupled to a trapped
quasi-condensate.  A :class:`SystemConfig` either describes a 1-D toy
geometry, from which trap eigenfunctions and drive profiles are sampled
on a grid and integrated into coupling blocks, or carries the coupling
blocks directly for synthetic studies.

Units: hbar = k_B = 1 and the trap frequency sets the energy scale, so
lengths are in trap oscillator lengths and energies in trap quanta.  The
condensate amplitude is absorbed into the drive and cavity-mode Rabi
amplitudes, and ``n_ex`` is a relative noncondensate density, so the
Popov shift reads ``2 g_a_n0 (|phi0|^2 + n_ex)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GridSpec",
    "SystemConfig",
    "ModeBasis",
    "CouplingBlocks",
    "ConfigError",
    "GridResolutionError",
    "load_config",
    "config_from_dict",
    "build_mode_basis",
    "compute_coupling_blocks",
    "estimate_scattering_time",
]

MODE_GEOMETRY = "geometry_1d"
MODE_DIRECT = "direct_blocks"

_HERMITICITY_TOL = 1e-12
# Inputs may carry roundoff-level asymmetry which symmetrization removes;
# anything above this looks like a typo rather than noise.
_INPUT_ASYMMETRY_TOL = 1e-6


class ConfigError(ValueError):
    """A configuration document violates the schema or an invariant."""


class GridResolutionError(RuntimeError):
    """The quadrature grid cannot resolve the requested modes."""


@dataclass
class GridSpec:
    """Uniform grid on [-half_length, half_length] with trapezoid weights."""

    half_length: float = 8.0
    points: int = 16384

    def validate(self):
        if not self.half_length > 0:
            raise ConfigError("grid.half_length must be positive, got %r" % self.half_length)
        if self.points < 16:
            raise ConfigError("grid.points must be at least 16, got %r" % self.points)


def _symmetrize_hermitian(mat, name):
    mat = np.asarray(mat, dtype=complex)
    if mat.size:
        residual = np.max(np.abs(mat - mat.conj().T))
        scale = max(1.0, np.max(np.abs(mat)))
        if residual > _INPUT_ASYMMETRY_TOL * scale:
            raise ConfigError(
                "%s must be Hermitian: max |X - X^dag| = %.3e" % (name, residual)
            )
    return 0.5 * (mat + mat.conj().T)


def _symmetrize_symmetric(mat, name):
    mat = np.asarray(mat, dtype=complex)
    if mat.size:
        residual = np.max(np.abs(mat - mat.T))
        scale = max(1.0, np.max(np.abs(mat)))
        if residual > _INPUT_ASYMMETRY_TOL * scale:
            raise ConfigError(
                "%s must be symmetric: max |X - X^T| = %.3e" % (name, residual)
            )
    return 0.5 * (mat + mat.T)


@dataclass
class CouplingBlocks:
    """Blocks of the effective quadratic Hamiltonian.

    ``eps_a`` and ``eps_ph`` are the atomic and photonic single-particle
    energies, ``chi_phph`` the cavity-mediated photon-photon coupling,
    ``chi_pha``/``chit_pha`` the co- and counter-rotating photon-atom
    couplings, and ``chit_aa`` the collisional atom-atom pairing.  The
    atom-photon partners are the Hermitian conjugates, exposed as
    properties.
    """

    eps_a: np.ndarray
    eps_ph: np.ndarray
    chi_phph: np.ndarray
    chi_pha: np.ndarray
    chit_aa: np.ndarray
    chit_pha: np.ndarray

    @property
    def m_a(self):
        return self.eps_a.shape[0]

    @property
    def m_ph(self):
        return self.eps_ph.shape[0]

    @property
    def m(self):
        return self.m_a + self.m_ph

    @property
    def chi_aph(self):
        return self.chi_pha.conj().T

    @property
    def chit_aph(self):
        return self.chit_pha.conj().T

    def validate(self):
        m_a, m_ph = self.m_a, self.m_ph
        shapes = {
            "eps_a": (self.eps_a, (m_a, m_a)),
            "eps_ph": (self.eps_ph, (m_ph, m_ph)),
            "chi_phph": (self.chi_phph, (m_ph, m_ph)),
            "chi_pha": (self.chi_pha, (m_ph, m_a)),
            "chit_aa": (self.chit_aa, (m_a, m_a)),
            "chit_pha": (self.chit_pha, (m_ph, m_a)),
        }
        for name, (mat, want) in shapes.items():
            if mat.shape != want:
                raise ConfigError(
                    "%s has shape %s, expected %s" % (name, mat.shape, want)
                )
        for name, mat in (("eps_a", self.eps_a), ("chi_phph", self.chi_phph)):
            if mat.size and np.max(np.abs(mat - mat.conj().T)) > _HERMITICITY_TOL:
                raise ConfigError("%s is not Hermitian after symmetrization" % name)
        if self.chit_aa.size and np.max(np.abs(self.chit_aa - self.chit_aa.T)) > _HERMITICITY_TOL:
            raise ConfigError("chit_aa is not symmetric after symmetrization")
        if self.eps_ph.size and np.max(np.abs(self.eps_ph - np.diag(np.diag(self.eps_ph)))) > 0:
            raise ConfigError("eps_ph must be diagonal (one energy per cavity mode)")

    @classmethod
    def from_dict(cls, data, m_a, m_ph):
        """Build validated blocks from a ``direct_blocks`` JSON object."""
        known = {"eps_a", "eps_ph", "chi_phph", "chi_pha", "chit_aa", "chit_pha"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(
                "unknown key(s) in direct_blocks: %s" % ", ".join(sorted(unknown))
            )

        def block(name, shape, fix):
            if name not in data:
                return np.zeros(shape, dtype=complex)
            mat = decode_matrix(data[name], "direct_blocks.%s" % name)
            if mat.shape != shape:
                # Tolerate [] for empty blocks of any degenerate shape.
                if mat.size == 0 and 0 in shape:
                    mat = np.zeros(shape, dtype=complex)
                else:
                    raise ConfigError(
                        "direct_blocks.%s has shape %s, expected %s"
                        % (name, mat.shape, shape)
                    )
            return fix(mat, "direct_blocks.%s" % name) if fix else mat

        blocks = cls(
            eps_a=block("eps_a", (m_a, m_a), _symmetrize_hermitian),
            eps_ph=block("eps_ph", (m_ph, m_ph), _symmetrize_hermitian),
            chi_phph=block("chi_phph", (m_ph, m_ph), _symmetrize_hermitian),
            chi_pha=block("chi_pha", (m_ph, m_a), None),
            chit_aa=block("chit_aa", (m_a, m_a), _symmetrize_symmetric),
            chit_pha=block("chit_pha", (m_ph, m_a), None),
        )
        blocks.validate()
        return blocks


@dataclass
class SystemConfig:
    """Validated description of one cavity/condensate instance.

    In ``geometry_1d`` mode the trap, drive and cavity-mode profiles
    define the coupling blocks; in ``direct_blocks`` mode the blocks are
    given verbatim and the geometry fields are ignored.
    """

    mode: str
    m_a: int
    m_ph: int
    temperature: float
    g_a_n0: float = 0.0
    delta_a: float = 1.0
    delta_nu: np.ndarray = None
    omega_nu: np.ndarray = None
    rabi_drive_amp: float = 0.0
    rabi_mode_amp: np.ndarray = None
    mu: float = 0.0
    n_ex: float = 0.0
    kappa_nu: float = 0.0
    omega_r: float = 0.0
    n_atoms: float = 0.0
    grid: GridSpec = field(default_factory=GridSpec)
    direct_blocks: CouplingBlocks = None

    def __post_init__(self):
        for name in ("delta_nu", "omega_nu", "rabi_mode_amp"):
            value = getattr(self, name)
            if value is None:
                value = np.zeros(self.m_ph if isinstance(self.m_ph, int) else 0)
            setattr(self, name, np.asarray(value, dtype=float))

    @property
    def m(self):
        return self.m_a + self.m_ph

    def validate(self):
        if self.mode not in (MODE_GEOMETRY, MODE_DIRECT):
            raise ConfigError(
                "mode must be %r or %r, got %r" % (MODE_GEOMETRY, MODE_DIRECT, self.mode)
            )
        if self.m_a < 0 or self.m_ph < 0:
            raise ConfigError("m_a and m_ph must be nonnegative")
        if self.m < 1:
            raise ConfigError("at least one mode is required (m_a + m_ph >= 1)")
        if self.temperature < 0:
            raise ConfigError("temperature must be nonnegative, got %r" % self.temperature)
        if self.n_ex < 0:
            raise ConfigError("n_ex must be nonnegative, got %r" % self.n_ex)
        if not abs(self.delta_a) > 0:
            raise ConfigError("delta_a must be nonzero")
        for name in ("delta_nu", "omega_nu", "rabi_mode_amp"):
            if len(getattr(self, name)) != self.m_ph:
                raise ConfigError(
                    "%s has length %d, expected m_ph = %d"
                    % (name, len(getattr(self, name)), self.m_ph)
                )
        self.grid.validate()
        if self.mode == MODE_DIRECT:
            if self.direct_blocks is None:
                raise ConfigError("direct_blocks is required when mode = %r" % MODE_DIRECT)
        elif self.direct_blocks is not None:
            raise ConfigError("direct_blocks is only valid when mode = %r" % MODE_DIRECT)


def decode_scalar(value, where):
    """Decode a JSON number or [re, im] pair into a complex scalar."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if (
        isinstance(value, list)
        and len(value) == 2
        and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value)
    ):
        return complex(value[0], value[1])
    raise ConfigError("%s: expected a number or an [re, im] pair, got %r" % (where, value))


def decode_matrix(rows, where):
    """Decode a row-major nested list with number or [re, im] entries."""
    if not isinstance(rows, list):
        raise ConfigError("%s: expected a nested list of rows" % where)
    if not rows:
        return np.zeros((0, 0), dtype=complex)
    out = []
    width = None
    for i, row in enumerate(rows):
        if not isinstance(row, list):
            raise ConfigError("%s: row %d is not a list" % (where, i))
        decoded = [decode_scalar(v, "%s[%d][%d]" % (where, i, j)) for j, v in enumerate(row)]
        if width is None:
            width = len(decoded)
        elif len(decoded) != width:
            raise ConfigError("%s: ragged rows (row %d)" % (where, i))
        out.append(decoded)
    return np.asarray(out, dtype=complex)


def encode_matrix(mat):
    """Encode a matrix into the row-major [re, im] JSON form."""
    mat = np.asarray(mat, dtype=complex)
    return [[[float(v.real), float(v.imag)] for v in row] for row in mat]


_SCALAR_FIELDS = {
    "m_a": int,
    "m_ph": int,
    "temperature": float,
    "g_a_n0": float,
    "delta_a": float,
    "rabi_drive_amp": float,
    "mu": float,
    "n_ex": float,
    "kappa_nu": float,
    "omega_r": float,
    "n_atoms": float,
}
_VECTOR_FIELDS = ("delta_nu", "omega_nu", "rabi_mode_amp")


def config_from_dict(data):
    """Build a validated :class:`SystemConfig` from a parsed JSON object."""
    if not isinstance(data, dict):
        raise ConfigError("config document must be a single JSON object")
    known = {"mode", "grid", "direct_blocks", *_SCALAR_FIELDS, *_VECTOR_FIELDS}
    unknown = set(data) - known
    if unknown:
        raise ConfigError("unknown key(s) in config: %s" % ", ".join(sorted(unknown)))
    for required in ("mode", "m_a", "m_ph", "temperature"):
        if required not in data:
            raise ConfigError("missing required key %r" % required)

    kwargs = {"mode": data["mode"]}
    if not isinstance(kwargs["mode"], str):
        raise ConfigError("mode must be a string")
    for name, cast in _SCALAR_FIELDS.items():
        if name in data:
            value = data[name]
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError("%s must be a number, got %r" % (name, value))
            if cast is int and int(value) != value:
                raise ConfigError("%s must be an integer, got %r" % (name, value))
            kwargs[name] = cast(value)
    for name in _VECTOR_FIELDS:
        if name in data:
            value = data[name]
            if not isinstance(value, list) or any(
                isinstance(v, bool) or not isinstance(v, (int, float)) for v in value
            ):
                raise ConfigError("%s must be a list of numbers" % name)
            kwargs[name] = np.asarray(value, dtype=float)

    if "grid" in data:
        gd = data["grid"]
        if not isinstance(gd, dict):
            raise ConfigError("grid must be an object")
        unknown = set(gd) - {"half_length", "points"}
        if unknown:
            raise ConfigError("unknown key(s) in grid: %s" % ", ".join(sorted(unknown)))
        grid = GridSpec(
            half_length=float(gd.get("half_length", GridSpec.half_length)),
            points=int(gd.get("points", GridSpec.points)),
        )
        kwargs["grid"] = grid

    if "direct_blocks" in data:
        if not isinstance(data["direct_blocks"], dict):
            raise ConfigError("direct_blocks must be an object")
        kwargs["direct_blocks"] = CouplingBlocks.from_dict(
            data["direct_blocks"], int(data.get("m_a", 0)), int(data.get("m_ph", 0))
        )

    cfg = SystemConfig(**kwargs)
    cfg.validate()
    return cfg


def load_config(text):
    """Parse a JSON config document into a validated :class:`SystemConfig`.

    Args:
        text (str | bytes): the raw document

    Raises:
        ConfigError: on parse errors (with line/column) or schema and
            invariant violations (naming the offending field).
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            "config parse error at line %d column %d: %s" % (exc.lineno, exc.colno, exc.msg)
        ) from exc
    return config_from_dict(data)


@dataclass
class ModeBasis:
    """Grid-sampled mode functions of the 1-D toy geometry.

    ``phi0`` is the condensate orbital (trap ground state), ``phi_l`` the
    first ``m_a`` excited trap eigenfunctions, ``omega0_profile`` the
    classical drive and ``omega_nu_profiles`` the cavity standing waves.
    ``weights`` are trapezoid quadrature weights on ``x``.
    """

    x: np.ndarray
    weights: np.ndarray
    phi0: np.ndarray
    phi_l: np.ndarray
    omega0_profile: np.ndarray
    omega_nu_profiles: np.ndarray

    def integrate(self, values):
        return np.dot(self.weights, values)

    def orthonormality_residual(self):
        funcs = np.vstack([self.phi0[None, :], self.phi_l])
        gram = (funcs * self.weights) @ funcs.T
        return float(np.max(np.abs(gram - np.eye(funcs.shape[0]))))


def _hermite_functions(x, count):
    """First ``count`` normalized harmonic-oscillator eigenfunctions."""
    funcs = np.empty((count, x.size))
    h0 = np.pi**-0.25 * np.exp(-0.5 * x * x)
    funcs[0] = h0
    if count > 1:
        funcs[1] = np.sqrt(2.0) * x * h0
    for n in range(2, count):
        funcs[n] = np.sqrt(2.0 / n) * x * funcs[n - 1] - np.sqrt((n - 1) / n) * funcs[n - 2]
    return funcs


def build_mode_basis(cfg):
    """Sample trap eigenfunctions and drive profiles on the config grid.

    Args:
        cfg (SystemConfig): a ``geometry_1d`` configuration

    Returns:
        ModeBasis

    Raises:
        GridResolutionError: when the grid is too coarse for the requested
            modes (quadrature orthonormality residual above 1e-6).
    """
    if cfg.mode != MODE_GEOMETRY:
        raise ConfigError("build_mode_basis requires mode = %r" % MODE_GEOMETRY)
    length = cfg.grid.half_length
    npts = cfg.grid.points
    x = np.linspace(-length, length, npts)
    weights = np.full(npts, x[1] - x[0])
    weights[0] *= 0.5
    weights[-1] *= 0.5

    funcs = _hermite_functions(x, cfg.m_a + 1)
    norms = np.sqrt((funcs * funcs * weights).sum(axis=1))
    if np.any(norms <= 0) or not np.all(np.isfinite(norms)):
        raise GridResolutionError("grid cannot normalize the trap eigenfunctions")
    funcs = funcs / norms[:, None]

    basis = ModeBasis(
        x=x,
        weights=weights,
        phi0=funcs[0],
        phi_l=funcs[1:],
        omega0_profile=cfg.rabi_drive_amp * np.exp(-0.5 * x * x),
        omega_nu_profiles=np.array(
            [
                # Cavity mode nu = i + 1 carries the standing wave
                # cos((nu + 1) pi x / L), so the first mode is cos(2 pi x / L).
                cfg.rabi_mode_amp[i] * np.cos((i + 2) * np.pi * x / length)
                for i in range(cfg.m_ph)
            ]
        ).reshape(cfg.m_ph, npts),
    )
    residual = basis.orthonormality_residual()
    if residual > 1e-6:
        raise GridResolutionError(
            "mode basis orthonormality residual %.3e exceeds 1e-6; "
            "increase grid.points or reduce grid.half_length" % residual
        )
    return basis


def _laplacian(values, step):
    """Second-order central finite difference with zero boundary values."""
    out = np.empty_like(values)
    out[1:-1] = values[:-2] - 2.0 * values[1:-1] + values[2:]
    out[0] = values[1] - 2.0 * values[0]
    out[-1] = values[-2] - 2.0 * values[-1]
    return out / step**2


def compute_coupling_blocks(basis, cfg):
    """Integrate the mode basis into coupling blocks.

    The atomic single-particle operator is the trap Hamiltonian plus the
    drive-induced optical potential, minus the chemical potential, plus
    the Popov mean-field shift.  All paired blocks are explicitly
    symmetrized before use.
    """
    w = basis.weights
    phi0 = basis.phi0
    phi = basis.phi_l
    om0 = basis.omega0_profile
    omnu = basis.omega_nu_profiles
    inv_da = 1.0 / cfg.delta_a

    dens0 = np.abs(phi0) ** 2
    chit_aa = cfg.g_a_n0 * (phi * w) @ (phi * phi0**2).T
    chi_phph = inv_da * (omnu.conj() * (w * dens0)) @ omnu.T
    chi_pha = inv_da * (omnu.conj() * (w * om0 * phi0.conj())) @ phi.T
    chit_pha = inv_da * (omnu.conj() * (w * om0 * phi0)) @ phi.conj().T

    step = basis.x[1] - basis.x[0]
    potential = (
        0.5 * basis.x**2
        + np.abs(om0) ** 2 * inv_da
        - cfg.mu
        + 2.0 * cfg.g_a_n0 * (dens0 + cfg.n_ex)
    )
    if cfg.m_a:
        h_phi = -0.5 * np.apply_along_axis(_laplacian, 1, phi, step) + potential * phi
        eps_a = (phi.conj() * w) @ h_phi.T
    else:
        eps_a = np.zeros((0, 0))

    blocks = CouplingBlocks(
        eps_a=_symmetrize_hermitian(eps_a, "eps_a"),
        eps_ph=np.diag(cfg.omega_nu).astype(complex),
        chi_phph=_symmetrize_hermitian(chi_phph, "chi_phph"),
        chi_pha=np.asarray(chi_pha, dtype=complex),
        chit_aa=_symmetrize_symmetric(chit_aa, "chit_aa"),
        chit_pha=np.asarray(chit_pha, dtype=complex),
    )
    blocks.validate()
    return blocks


def coupling_blocks(cfg):
    """Coupling blocks for either config mode, plus the basis if any."""
    if cfg.mode == MODE_DIRECT:
        return cfg.direct_blocks, None
    basis = build_mode_basis(cfg)
    return compute_coupling_blocks(basis, cfg), basis


def estimate_scattering_time(cfg):
    """Order-of-magnitude time before a spontaneous scattering event.

    Scales as ``n_atoms * kappa_nu^3 * delta_a^2 / (delta_nu[0] *
    rabi_drive_amp^2 * rabi_mode_amp[0]^2 * omega_r)``, evaluated with the
    first cavity mode's parameters.

    Raises:
        ConfigError: if there is no cavity mode or a denominator
            parameter is zero (named in the message).
    """
    if cfg.m_ph < 1:
        raise ConfigError("estimate_scattering_time requires at least one cavity mode")
    denominators = {
        "delta_nu[0]": cfg.delta_nu[0],
        "rabi_drive_amp": cfg.rabi_drive_amp,
        "rabi_mode_amp[0]": cfg.rabi_mode_amp[0],
        "omega_r": cfg.omega_r,
    }
    for name, value in denominators.items():
        if value == 0:
            raise ConfigError(
                "estimate_scattering_time: division by zero, %s is zero" % name
            )
    return float(
        cfg.n_atoms
        * cfg.kappa_nu**3
        * cfg.delta_a**2
        / (
            cfg.delta_nu[0]
            * cfg.rabi_drive_amp**2
            * cfg.rabi_mode_amp[0] ** 2
            * cfg.omega_r
        )
    )
