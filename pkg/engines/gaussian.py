"""Fermionic Gaussian states: free ground states, quadratic measurements, entropies.

Nambu ordering is Phi = (c_1^+ ... c_L^+, c_1 ... c_L) with
Gamma_ab = <Phi_a Phi_b^+>. A pure state is stored through an isometry Q
(2L x L) with Gamma = Q Q^+; for every column q the operator sum_a q_a^* Phi_a
annihilates the state. A quadratic generator

    h = sum_ij A_ij c_i^+ c_j + 1/2 sum_ij (B_ij c_i^+ c_j^+ + h.c.)

acts on Q as q -> expm(M) q with M = [[A^T, B^*], [-B, -A]].
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.special import xlogy

from config import EIG_CLIP, EIG_RANGE_TOL, FERMI_GAP_TOL, ORTHO_TOL, QR_RESIDUAL_TOL
from errors import DegeneracyError, DomainError, NumericalError, SizeGuardError
from lattice.specs import MeasurementKind, MeasurementSpec, ModelSpec, Region

logger = logging.getLogger(__name__)


def _check_isometry(q: np.ndarray, tol: float, what: str) -> None:
    residual = np.max(np.abs(q.conj().T @ q - np.eye(q.shape[1]))) if q.size else 0.0
    if residual > tol:
        raise NumericalError(f"{what}: orthonormality residual {residual:.3e} > {tol:.0e}")


def _fix_phases(q: np.ndarray) -> np.ndarray:
    """Make the largest entry of every column real and positive."""
    if not q.size:
        return q
    pivots = q[np.argmax(np.abs(q), axis=0), np.arange(q.shape[1])]
    return q * (np.abs(pivots) / pivots)


def _expm_hermitian(h: np.ndarray) -> np.ndarray:
    evals, evecs = linalg.eigh(h)
    return (evecs * np.exp(evals)) @ evecs.conj().T


def _reorthonormalize(x: np.ndarray) -> np.ndarray:
    q, _ = linalg.qr(x, mode="economic")
    _check_isometry(q, QR_RESIDUAL_TOL, "QR re-orthonormalization")
    return q


def _entropy_from_occupations(occ: np.ndarray) -> float:
    if occ.size and (occ.min() < -EIG_RANGE_TOL or occ.max() > 1 + EIG_RANGE_TOL):
        raise NumericalError(
            f"correlation eigenvalue outside [0, 1]: [{occ.min():.3e}, {occ.max():.3e}]")
    occ = np.clip(occ, EIG_CLIP, 1.0 - EIG_CLIP)
    return float(-(xlogy(occ, occ) + xlogy(1.0 - occ, 1.0 - occ)).sum())


@dataclass(frozen=True, eq=False)
class SlaterState:
    """Number-conserving state: columns of ``orbitals`` are occupied orbitals."""

    orbitals: np.ndarray

    def __post_init__(self):
        _check_isometry(self.orbitals, ORTHO_TOL, "Slater orbitals")

    @property
    def n_sites(self) -> int:
        return self.orbitals.shape[0]

    @property
    def n_particles(self) -> int:
        return self.orbitals.shape[1]

    def correlation(self) -> np.ndarray:
        """C = U U^+ ; <c_i^+ c_j> = C_ji."""
        return self.orbitals @ self.orbitals.conj().T

    def energy(self, h: np.ndarray) -> float:
        return float(np.real(np.trace(self.orbitals.conj().T @ h @ self.orbitals)))

    def to_bogoliubov(self) -> "BogoliubovState":
        n, n_occ = self.orbitals.shape
        full, _ = linalg.qr(self.orbitals, mode="full")
        u = np.zeros((n, n), dtype=complex)
        v = np.zeros((n, n), dtype=complex)
        u[:, :n_occ] = self.orbitals.conj()
        v[:, n_occ:] = full[:, n_occ:]
        return BogoliubovState(u, v)


@dataclass(frozen=True, eq=False)
class BogoliubovState:
    """Pure Gaussian state with pairing; ``[u; v]`` is the isometry Q."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if self.u.shape != self.v.shape or self.u.shape[0] != self.u.shape[1]:
            raise SizeGuardError(f"u {self.u.shape} and v {self.v.shape} must be equal squares")
        _check_isometry(self.stacked, ORTHO_TOL, "Bogoliubov amplitudes")

    @classmethod
    def from_stacked(cls, q: np.ndarray) -> "BogoliubovState":
        n = q.shape[1]
        return cls(q[:n], q[n:])

    @property
    def n_sites(self) -> int:
        return self.u.shape[0]

    @property
    def stacked(self) -> np.ndarray:
        return np.vstack([self.u, self.v])

    def nambu(self) -> np.ndarray:
        q = self.stacked
        return q @ q.conj().T

    def correlation(self) -> np.ndarray:
        """<c_i^+ c_j>."""
        return self.u @ self.u.conj().T

    def anomalous(self) -> np.ndarray:
        """<c_i c_j>."""
        return self.v @ self.u.conj().T


GaussianState = SlaterState | BogoliubovState


def hopping_matrix(model: ModelSpec) -> np.ndarray:
    h = np.zeros((model.n_sites, model.n_sites))
    for i, j, sign in model.bonds():
        h[i, j] -= model.hopping * sign
        h[j, i] -= model.hopping * sign
    return h


def ground_state_quadratic(model: ModelSpec) -> SlaterState:
    """Filled Fermi sea of the hopping chain."""
    if model.delta != 0.0:
        raise DomainError(f"Gaussian ground state needs delta = 0, got {model.delta}")
    evals, evecs = linalg.eigh(hopping_matrix(model))
    n = model.n_particles
    if n < model.n_sites:
        gap = evals[n] - evals[n - 1]
        if gap < FERMI_GAP_TOL:
            raise DegeneracyError(
                f"degenerate Fermi level for L={model.n_sites}, N={n}, boundary={model.boundary} "
                f"(gap {gap:.2e}); use boundary 'open' or 'spin_periodic', or n_sites = 2 mod 4 "
                f"for periodic half filling", gap)
    logger.debug("Fermi sea L=%d N=%d energy=%.12g", model.n_sites, n, evals[:n].sum())
    return SlaterState(_fix_phases(evecs[:, :n]))


def ground_energy_quadratic(model: ModelSpec) -> float:
    return ground_state_quadratic(model).energy(hopping_matrix(model))


# --- measurement generators ---

def single_particle_generator(meas: MeasurementSpec, n_sites: int) -> np.ndarray:
    """h with M = exp(sum_ij h_ij c_i^+ c_j) for the number-conserving kinds."""
    meas.check_size(n_sites)
    if meas.is_density:
        return np.diag(-meas.site_weights(n_sites))
    if meas.kind == MeasurementKind.BOND_XX_YY_PAIRED:
        h = np.zeros((n_sites, n_sites))
        for a in range(0, n_sites, 2):
            h[a, a + 1] = h[a + 1, a] = meas.strength
        return h
    raise DomainError(f"{meas.kind} does not conserve particle number")


def open_bonds(n_sites: int) -> list[tuple[int, int, int]]:
    return [(i, i + 1, 1) for i in range(n_sites - 1)]


def nambu_generator(meas: MeasurementSpec, n_sites: int,
                    bonds: list[tuple[int, int, int]]) -> np.ndarray:
    """M = [[A^T, B^*], [-B, -A]] of the measurement generator."""
    n = n_sites
    a = np.zeros((n, n))
    b = np.zeros((n, n))
    if meas.kind == MeasurementKind.BOND_XX:
        # (W/2) s (c_i^+ - c_i)(c_j^+ + c_j) on every bond
        half = meas.strength / 2
        for i, j, sign in bonds:
            a[i, j] += half * sign
            a[j, i] += half * sign
            b[i, j] += half * sign
            b[j, i] -= half * sign
    else:
        a = single_particle_generator(meas, n)
    return np.block([[a.T, b.conj()], [-b, -a]])


def apply_measurement(state: GaussianState, meas: MeasurementSpec,
                      model: ModelSpec | None = None) -> GaussianState:
    """Normalized M|psi> inside the Gaussian family.

    ``model`` fixes the bond list of ``bond_xx``; open chain when omitted.
    """
    n = state.n_sites
    if model is not None and model.n_sites != n:
        raise SizeGuardError(f"model has {model.n_sites} sites, state has {n}")
    bonds = model.bonds() if model is not None else open_bonds(n)
    try:
        meas.check_size(n)
    except DomainError as e:
        raise SizeGuardError(str(e)) from e

    if isinstance(state, SlaterState) and meas.conserves_number:
        evolved = _expm_hermitian(single_particle_generator(meas, n)) @ state.orbitals
        return SlaterState(_reorthonormalize(evolved))

    if isinstance(state, SlaterState):
        state = state.to_bogoliubov()
    evolved = _expm_hermitian(nambu_generator(meas, n, bonds)) @ state.stacked
    return BogoliubovState.from_stacked(_reorthonormalize(evolved))


# --- entropies ---

def entanglement_entropy(state: GaussianState, region: Region) -> float:
    """Von Neumann entropy (nats) of the region from the restricted correlations."""
    region.check(state.n_sites)
    if not len(region):
        return 0.0
    idx = region.indices()
    if isinstance(state, SlaterState):
        c = state.correlation()[np.ix_(idx, idx)]
        return _entropy_from_occupations(linalg.eigvalsh(c))
    nambu_idx = np.concatenate([idx, idx + state.n_sites])
    gamma = state.nambu()[np.ix_(nambu_idx, nambu_idx)]
    nu = linalg.eigvalsh(gamma)
    if nu.min() < -EIG_RANGE_TOL or nu.max() > 1 + EIG_RANGE_TOL:
        raise NumericalError(f"Nambu eigenvalue outside [0, 1]: [{nu.min():.3e}, {nu.max():.3e}]")
    nu = np.clip(nu, EIG_CLIP, 1.0 - EIG_CLIP)
    return float(-xlogy(nu, nu).sum())


def mutual_information(state: GaussianState, a: Region, b: Region) -> float:
    if not a.is_disjoint(b):
        raise DomainError(f"regions overlap on {a.intersection(b).sites}")
    return (entanglement_entropy(state, a) + entanglement_entropy(state, b)
            - entanglement_entropy(state, a.union(b)))


def half_chain_entropy(state: GaussianState) -> float:
    return entanglement_entropy(state, Region.half(state.n_sites))


def entropy_profile(state: GaussianState) -> np.ndarray:
    """S([0, l)) for l = 1 .. L-1."""
    return np.array([entanglement_entropy(state, Region.interval(0, l))
                     for l in range(1, state.n_sites)])


def measured_state(model: ModelSpec, meas: MeasurementSpec) -> GaussianState:
    return apply_measurement(ground_state_quadratic(model), meas, model)
