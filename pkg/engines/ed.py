"""Exact diagonalization of the interacting chain in the occupation basis.

Basis states are bit masks; site j is bit (L - 1 - j), so site 0 is the most
significant bit and ``amplitudes.reshape((2,) * L)`` has axes in site order.
Fermion signs follow the Jordan-Wigner ordering of the sites.
"""

import logging
from dataclasses import dataclass, field
from math import comb

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as sparse_linalg
from scipy.special import xlogy

from config import (
    ED_DENSE_LIMIT,
    ED_GAP_TOL,
    ED_LANCZOS_SEED,
    ED_LANCZOS_TOL,
    ED_MAX_SITES_FULL,
    ED_MAX_SITES_SECTOR,
    NORM_TOL,
)
from errors import DegeneracyError, DomainError, NumericalError, SizeGuardError
from lattice.specs import MeasurementKind, MeasurementSpec, ModelSpec, Region

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DenseState:
    """Amplitudes over the full 2^L occupation basis.

    ``check_norm=False`` is for derivative vectors, which are not normalized.
    """

    amplitudes: np.ndarray
    n_sites: int
    check_norm: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.amplitudes.shape != (2 ** self.n_sites,):
            raise SizeGuardError(
                f"{self.amplitudes.shape} amplitudes do not match {self.n_sites} sites")
        norm = np.linalg.norm(self.amplitudes)
        if self.check_norm and abs(norm - 1.0) > NORM_TOL:
            raise NumericalError(f"state norm {norm!r} differs from 1")

    @classmethod
    def normalized(cls, amplitudes: np.ndarray, n_sites: int) -> "DenseState":
        norm = np.linalg.norm(amplitudes)
        if not norm > 0 or not np.isfinite(norm):
            raise NumericalError(f"cannot normalize a state of norm {norm}")
        return cls(amplitudes / norm, n_sites)

    def overlap(self, other: "DenseState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "DenseState") -> float:
        return abs(self.overlap(other)) ** 2


@dataclass(frozen=True, eq=False)
class SectorBasis:
    n_sites: int
    n_particles: int | None
    states: np.ndarray

    @classmethod
    def full(cls, n_sites: int) -> "SectorBasis":
        if n_sites > ED_MAX_SITES_FULL:
            raise SizeGuardError(f"full space limited to {ED_MAX_SITES_FULL} sites, got {n_sites}")
        return cls(n_sites, None, np.arange(2 ** n_sites, dtype=np.int64))

    @classmethod
    def sector(cls, n_sites: int, n_particles: int) -> "SectorBasis":
        if n_sites > ED_MAX_SITES_SECTOR:
            raise SizeGuardError(
                f"particle sector limited to {ED_MAX_SITES_SECTOR} sites, got {n_sites}")
        states = np.arange(2 ** n_sites, dtype=np.int64)
        states = states[np.bitwise_count(states) == n_particles]
        assert states.size == comb(n_sites, n_particles)
        return cls(n_sites, n_particles, states)

    @property
    def dim(self) -> int:
        return self.states.size

    def lookup(self, states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Indices of ``states`` in the basis and a mask of the ones present."""
        idx = np.searchsorted(self.states, states)
        idx = np.minimum(idx, self.dim - 1)
        return idx, self.states[idx] == states

    def embed(self, vector: np.ndarray) -> np.ndarray:
        full = np.zeros(2 ** self.n_sites, dtype=complex)
        full[self.states] = vector
        return full


# --- fermion operators on bit masks ---

def _bit(site: int, n_sites: int) -> int:
    return 1 << (n_sites - 1 - site)


def occupations(states: np.ndarray, n_sites: int) -> np.ndarray:
    """(len(states), n_sites) array of n_j."""
    shifts = np.arange(n_sites - 1, -1, -1)
    return (states[:, None] >> shifts) & 1


def _apply_fermion(states, site, create, n_sites):
    bit = _bit(site, n_sites)
    occupied = (states & bit) != 0
    valid = ~occupied if create else occupied
    left = ((1 << n_sites) - 1) ^ ((bit << 1) - 1)
    sign = 1 - 2 * (np.bitwise_count(states & left).astype(np.int64) & 1)
    return states ^ bit, sign, valid


def _bilinear(states, a, create_a, b, create_b, n_sites):
    """op_a op_b |s>: (new states, sign, valid)."""
    s1, sign1, valid1 = _apply_fermion(states, b, create_b, n_sites)
    s2, sign2, valid2 = _apply_fermion(s1, a, create_a, n_sites)
    return s2, sign1 * sign2, valid1 & valid2


def fermion_operator(basis: SectorBasis, terms) -> sparse.csr_matrix:
    """Sparse matrix of sum coef * op_a op_b; terms are (coef, a, create_a, b, create_b)."""
    rows, cols, vals = [], [], []
    source = np.arange(basis.dim)
    for coef, a, create_a, b, create_b in terms:
        new, sign, valid = _bilinear(basis.states, a, create_a, b, create_b, basis.n_sites)
        idx, present = basis.lookup(new)
        keep = valid & present
        rows.append(idx[keep])
        cols.append(source[keep])
        vals.append(coef * sign[keep])
    if not rows:
        return sparse.csr_matrix((basis.dim, basis.dim))
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(basis.dim, basis.dim))


def _hopping_terms(a: int, b: int, coef: float):
    return [(coef, a, True, b, False), (coef, b, True, a, False)]


def _pair_bond_terms(a: int, b: int, coef: float):
    """coef * (c_a^+ - c_a)(c_b^+ + c_b)."""
    return [(coef, a, True, b, True), (coef, a, True, b, False),
            (-coef, a, False, b, True), (-coef, a, False, b, False)]


def build_hamiltonian(model: ModelSpec, basis: SectorBasis | None = None) -> sparse.csr_matrix:
    """-t sum (c^+ c + h.c.) + 2 t delta sum (n - 1/2)(n - 1/2) on ``basis``."""
    if basis is None:
        basis = SectorBasis.sector(model.n_sites, model.n_particles)
    if basis.n_sites != model.n_sites:
        raise SizeGuardError(f"basis has {basis.n_sites} sites, model {model.n_sites}")
    terms = []
    for i, j, sign in model.bonds():
        terms += _hopping_terms(i, j, -model.hopping * sign)
    h = fermion_operator(basis, terms)
    if model.delta:
        occ = occupations(basis.states, model.n_sites) - 0.5
        diag = np.zeros(basis.dim)
        for i, j, _ in model.bonds():
            diag += occ[:, i] * occ[:, j]
        h = h + sparse.diags(2.0 * model.hopping * model.delta * diag)
    return h.tocsr()


def _lowest_pair(h: sparse.csr_matrix) -> tuple[np.ndarray, np.ndarray]:
    if h.shape[0] <= ED_DENSE_LIMIT:
        evals, evecs = linalg.eigh(h.toarray())
        return evals[:2], evecs[:, :2]
    v0 = np.random.default_rng(ED_LANCZOS_SEED).standard_normal(h.shape[0])
    evals, evecs = sparse_linalg.eigsh(h, k=2, which="SA", v0=v0, tol=ED_LANCZOS_TOL)
    order = np.argsort(evals)
    return evals[order], evecs[:, order]


def ground_state_sector(model: ModelSpec) -> tuple[float, DenseState]:
    basis = SectorBasis.sector(model.n_sites, model.n_particles)
    h = build_hamiltonian(model, basis)
    logger.debug("ED L=%d dim=%d path=%s", model.n_sites, basis.dim,
                 "dense" if basis.dim <= ED_DENSE_LIMIT else "lanczos")
    evals, evecs = _lowest_pair(h)
    if evals.size > 1 and evals[1] - evals[0] < ED_GAP_TOL:
        gap = float(evals[1] - evals[0])
        raise DegeneracyError(
            f"degenerate ground state for L={model.n_sites}, delta={model.delta}, "
            f"boundary={model.boundary} (gap {gap:.2e}); use boundary 'open' or "
            f"'spin_periodic'", gap)
    vec = evecs[:, 0].astype(complex)
    pivot = vec[np.argmax(np.abs(vec))]
    vec *= abs(pivot) / pivot
    return float(evals[0]), DenseState.normalized(basis.embed(vec), model.n_sites)


def ground_state_ed(model: ModelSpec) -> DenseState:
    return ground_state_sector(model)[1]


def ground_energy_ed(model: ModelSpec) -> float:
    return ground_state_sector(model)[0]


# --- measurements ---

def density_generator(meas: MeasurementSpec, n_sites: int) -> np.ndarray:
    """Diagonal of H_m = sum_j w_j n_j at unit strength, over the full space."""
    states = np.arange(2 ** n_sites, dtype=np.int64)
    return occupations(states, n_sites) @ meas.unit_weights(n_sites)


def _bond_operators(meas: MeasurementSpec, n_sites: int, bonds) -> list[sparse.csr_matrix]:
    basis = SectorBasis.full(n_sites)
    if meas.kind == MeasurementKind.BOND_XX_YY_PAIRED:
        return [fermion_operator(basis, _hopping_terms(a, a + 1, 1.0))
                for a in range(0, n_sites, 2)]
    return [fermion_operator(basis, _pair_bond_terms(i, j, float(sign)))
            for i, j, sign in bonds]


def apply_measurement_ed(state: DenseState, meas: MeasurementSpec,
                         model: ModelSpec | None = None) -> DenseState:
    """Exact M|psi> / |M psi|; ``model`` supplies the bonds of ``bond_xx``."""
    n = state.n_sites
    if model is not None and model.n_sites != n:
        raise SizeGuardError(f"model has {model.n_sites} sites, state has {n}")
    try:
        meas.check_size(n)
    except DomainError as e:
        raise SizeGuardError(str(e)) from e
    psi = state.amplitudes.astype(complex)
    w = meas.strength

    if meas.is_density:
        psi = psi * np.exp(-w * density_generator(meas, n))
    elif meas.kind == MeasurementKind.BOND_XX_YY_PAIRED:
        # X = c_a^+ c_b + h.c. has X^3 = X: exp(wX) = 1 + sinh(w) X + (cosh(w) - 1) X^2
        for x in _bond_operators(meas, n, None):
            x_psi = x @ psi
            psi = psi + np.sinh(w) * x_psi + (np.cosh(w) - 1.0) * (x @ x_psi)
    else:
        # X^2 = 1 and all bond operators commute
        bonds = model.bonds() if model is not None else [(i, i + 1, 1) for i in range(n - 1)]
        for x in _bond_operators(meas, n, bonds):
            psi = np.cosh(w / 2) * psi + np.sinh(w / 2) * (x @ psi)
    return DenseState.normalized(psi, n)


def imaginary_time_reference(state: DenseState, generator, tau: float) -> DenseState:
    """exp(-tau G)|psi> normalized; G is a diagonal vector, sparse or dense matrix."""
    if tau < 0:
        raise DomainError(f"imaginary time must be >= 0, got {tau}")
    psi = state.amplitudes
    if sparse.issparse(generator):
        off_diagonal = generator - sparse.diags(generator.diagonal())
        generator = generator.diagonal() if off_diagonal.count_nonzero() == 0 else generator.toarray()
    generator = np.asarray(generator)
    if generator.ndim == 1:
        return DenseState.normalized(np.exp(-tau * generator) * psi, state.n_sites)
    if generator.shape[0] > ED_DENSE_LIMIT:
        raise SizeGuardError(f"dense generator limited to dimension {ED_DENSE_LIMIT}")
    evals, evecs = linalg.eigh(generator)
    evolved = evecs @ (np.exp(-tau * (evals - evals.min())) * (evecs.conj().T @ psi))
    return DenseState.normalized(evolved, state.n_sites)


# --- entropies ---

def _reorder_signs(n_sites: int, order: list[int]) -> np.ndarray:
    """Fermion signs of moving the modes into ``order``."""
    states = np.arange(2 ** n_sites, dtype=np.int64)
    occ = occupations(states, n_sites)
    parity = np.zeros(states.size, dtype=np.int64)
    for p in range(n_sites):
        for q in range(p + 1, n_sites):
            if order[p] > order[q]:
                parity ^= occ[:, order[p]] & occ[:, order[q]]
    return 1 - 2 * parity


def ee_ed(state: DenseState, region: Region) -> float:
    """Fermionic entanglement entropy of ``region`` (nats)."""
    n = state.n_sites
    region.check(n)
    k = len(region)
    if k in (0, n):
        return 0.0
    order = list(region.sites) + [s for s in range(n) if s not in region.sites]
    psi = state.amplitudes
    if order != list(range(n)):
        psi = psi * _reorder_signs(n, order)
    matrix = psi.reshape((2,) * n).transpose(order).reshape(2 ** k, 2 ** (n - k))
    p = linalg.svdvals(matrix) ** 2
    return float(-xlogy(p, p).sum())


def mutual_information_ed(state: DenseState, a: Region, b: Region) -> float:
    if not a.is_disjoint(b):
        raise DomainError(f"regions overlap on {a.intersection(b).sites}")
    return ee_ed(state, a) + ee_ed(state, b) - ee_ed(state, a.union(b))


def half_chain_entropy_ed(state: DenseState) -> float:
    return ee_ed(state, Region.half(state.n_sites))


def entropy_profile_ed(state: DenseState) -> np.ndarray:
    return np.array([ee_ed(state, Region.interval(0, l)) for l in range(1, state.n_sites)])


def sector_weight_outside(state: DenseState, n_particles: int) -> float:
    """Total probability outside the n_particles sector."""
    counts = np.bitwise_count(np.arange(2 ** state.n_sites, dtype=np.int64))
    return float(np.sum(np.abs(state.amplitudes[counts != n_particles]) ** 2))
