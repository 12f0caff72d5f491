"""Variational imaginary-time evolution (McLachlan) over a layered Pauli-rotation circuit.

Qubit j is site j, bit (L - 1 - j) of the basis index, as in ``engines.ed``.
Two-qubit gates are exp(i theta P) with P in {XX, YY, ZZ}, single-qubit gates
exp(i theta sigma / 2). The circuit applies, right after the seed gate
exp(i theta_0 Z_0 / 2), for every layer: XX, YY, ZZ on bonds (0,1), (2,3), ...;
XX, YY, ZZ on bonds (1,2), (3,4), ...; then X, Y, Z on every site. Parameters
are indexed in application order.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property
from typing import NamedTuple

import numpy as np
from scipy import linalg

from config import (
    VQA_INTEGRATOR,
    VQA_REGULARIZATION,
    VQA_SEED_OFFSET,
    VQA_SINGULAR_TOL,
    VQA_STEP,
)
from engines.ed import DenseState, density_generator, ground_state_ed, imaginary_time_reference
from errors import DomainError, NumericalError, SizeGuardError, SolverError
from lattice.specs import MeasurementSpec, ModelSpec

logger = logging.getLogger(__name__)

A_SYMMETRY_TOL = 1e-10
A_NEGATIVE_TOL = 1e-9


class Integrator(StrEnum):
    EULER = "euler"
    RK4 = "rk4"


@dataclass(frozen=True)
class PauliGate:
    """exp(i theta * scale * P) for a Pauli string P given by bit masks."""

    label: str
    sites: tuple[int, ...]
    flip_mask: int
    sign_mask: int
    n_y: int
    scale: float

    @classmethod
    def build(cls, paulis: str, sites: tuple[int, ...], n_qubits: int) -> "PauliGate":
        flip = sign = 0
        for p, site in zip(paulis, sites):
            bit = 1 << (n_qubits - 1 - site)
            if p in "XY":
                flip |= bit
            if p in "YZ":
                sign |= bit
        scale = 1.0 if len(sites) == 2 else 0.5
        label = "".join(f"{p.lower()}{s}" for p, s in zip(paulis, sites))
        return cls(label, sites, flip, sign, paulis.count("Y"), scale)

    def action(self, dim: int) -> tuple[np.ndarray, np.ndarray]:
        """(perm, phase) with (P psi)[k] = phase[k] * psi[perm[k]]."""
        perm = np.arange(dim, dtype=np.int64) ^ self.flip_mask
        parity = np.bitwise_count(perm & self.sign_mask).astype(np.int64) & 1
        phase = (1j ** self.n_y) * (1 - 2 * parity)
        return perm, phase


@dataclass(frozen=True)
class AnsatzSpec:
    n_qubits: int
    n_layers: int
    boundary: str = "open"

    def __post_init__(self):
        if self.n_qubits < 2:
            raise DomainError(f"ansatz needs at least 2 qubits, got {self.n_qubits}")
        if self.n_layers < 1:
            raise DomainError(f"ansatz needs at least 1 layer, got {self.n_layers}")
        if self.boundary != "open":
            raise DomainError(f"only the open-boundary circuit is available, got {self.boundary}")

    @property
    def odd_bonds(self) -> list[tuple[int, int]]:
        return [(i, i + 1) for i in range(0, self.n_qubits - 1, 2)]

    @property
    def even_bonds(self) -> list[tuple[int, int]]:
        return [(i, i + 1) for i in range(1, self.n_qubits - 1, 2)]

    @property
    def params_per_layer(self) -> int:
        return 3 * (len(self.odd_bonds) + len(self.even_bonds)) + 3 * self.n_qubits

    @property
    def n_params(self) -> int:
        return self.n_layers * self.params_per_layer + 1

    @cached_property
    def gates(self) -> list[PauliGate]:
        n = self.n_qubits
        gates = [PauliGate.build("Z", (0,), n)]
        for _ in range(self.n_layers):
            for bonds in (self.odd_bonds, self.even_bonds):
                for p in "XYZ":
                    gates += [PauliGate.build(p + p, bond, n) for bond in bonds]
            for p in "XYZ":
                gates += [PauliGate.build(p, (site,), n) for site in range(n)]
        return gates

    @cached_property
    def actions(self) -> list[tuple[np.ndarray, np.ndarray]]:
        dim = 2 ** self.n_qubits
        return [gate.action(dim) for gate in self.gates]

    @property
    def seed_partner_index(self) -> int:
        """Index of the first-layer Z rotation on site 0."""
        return 1 + 3 * (len(self.odd_bonds) + len(self.even_bonds)) + 2 * self.n_qubits

    def check(self, theta: np.ndarray, base: DenseState) -> None:
        if len(theta) != self.n_params:
            raise SizeGuardError(f"expected {self.n_params} parameters, got {len(theta)}")
        if base.n_sites != self.n_qubits:
            raise SizeGuardError(f"state has {base.n_sites} sites, ansatz {self.n_qubits} qubits")


@dataclass(frozen=True)
class VqaRunConfig:
    total_tau: float
    step_size: float = VQA_STEP
    regularization: float = VQA_REGULARIZATION
    integrator: Integrator = Integrator(VQA_INTEGRATOR)
    seed_trick: bool = True
    oracle: bool = True

    def __post_init__(self):
        object.__setattr__(self, "integrator", Integrator(self.integrator))
        if self.step_size <= 0:
            raise DomainError(f"step size must be > 0, got {self.step_size}")
        if self.regularization < 0:
            raise DomainError(f"regularization must be >= 0, got {self.regularization}")
        if self.total_tau < 0:
            raise DomainError(f"total imaginary time must be >= 0, got {self.total_tau}")


class TrajectoryRow(NamedTuple):
    step: int
    tau: float
    norm_c: float
    min_eig_a: float
    fidelity: float


@dataclass(frozen=True, eq=False)
class VqaResult:
    state: DenseState
    theta: np.ndarray
    trajectory: list[TrajectoryRow] = field(default_factory=list)


def _apply_gate(vectors: np.ndarray, gate: PauliGate, theta: float, action) -> np.ndarray:
    """Apply exp(i theta scale P) along the last axis."""
    perm, phase = action
    angle = theta * gate.scale
    return math.cos(angle) * vectors + 1j * math.sin(angle) * phase * vectors[..., perm]


def _generator_times(vectors: np.ndarray, gate: PauliGate, action) -> np.ndarray:
    perm, phase = action
    return 1j * gate.scale * phase * vectors[..., perm]


def ansatz_state(spec: AnsatzSpec, theta, base: DenseState) -> DenseState:
    theta = np.asarray(theta, dtype=float)
    spec.check(theta, base)
    psi = base.amplitudes.astype(complex)
    for gate, action, t in zip(spec.gates, spec.actions, theta):
        if t:
            psi = _apply_gate(psi, gate, t, action)
    return DenseState(psi, spec.n_qubits)


def _tangents_and_state(spec: AnsatzSpec, theta: np.ndarray, base: DenseState):
    """Forward sweep: every derivative state is carried through the remaining gates."""
    spec.check(theta, base)
    dim = 2 ** spec.n_qubits
    psi = base.amplitudes.astype(complex)
    tangents = np.zeros((spec.n_params, dim), dtype=complex)
    for a, (gate, action, t) in enumerate(zip(spec.gates, spec.actions, theta)):
        if t:
            psi = _apply_gate(psi, gate, t, action)
            if a:
                tangents[:a] = _apply_gate(tangents[:a], gate, t, action)
        tangents[a] = _generator_times(psi, gate, action)
    return tangents, psi


def tangent_vectors(spec: AnsatzSpec, theta, base: DenseState) -> list[DenseState]:
    """d|psi(theta)>/d theta_a for every parameter, in parameter order (not normalized)."""
    tangents, _ = _tangents_and_state(spec, np.asarray(theta, dtype=float), base)
    return [DenseState(row, spec.n_qubits, check_norm=False) for row in tangents]


def tangent_matrix(spec: AnsatzSpec, theta, base: DenseState) -> np.ndarray:
    """Tangents as rows of a (n_params, 2^L) array."""
    return _tangents_and_state(spec, np.asarray(theta, dtype=float), base)[0]


def _apply_generator(generator, psi: np.ndarray) -> np.ndarray:
    if isinstance(generator, np.ndarray) and generator.ndim == 1:
        return generator * psi
    return generator @ psi


class McLachlanSystem(NamedTuple):
    a: np.ndarray
    c: np.ndarray
    psi: np.ndarray

    @property
    def min_eigenvalue(self) -> float:
        return float(linalg.eigvalsh(self.a)[0])


def mclachlan_system(spec: AnsatzSpec, theta, base: DenseState, generator) -> McLachlanSystem:
    """A_ab = Re <d_a psi|d_b psi>, C_a = -Re <d_a psi|H_m|psi>."""
    tangents, psi = _tangents_and_state(spec, np.asarray(theta, dtype=float), base)
    a = np.real(tangents.conj() @ tangents.T)
    c = -np.real(tangents.conj() @ _apply_generator(generator, psi))
    asymmetry = np.max(np.abs(a - a.T)) if a.size else 0.0
    if asymmetry > A_SYMMETRY_TOL:
        raise NumericalError(f"McLachlan matrix not symmetric ({asymmetry:.2e})")
    return McLachlanSystem(0.5 * (a + a.T), c, psi)


def _solve(system: McLachlanSystem, regularization: float) -> np.ndarray:
    a = system.a
    if regularization == 0.0:
        min_eig = system.min_eigenvalue
        if min_eig < VQA_SINGULAR_TOL:
            raise SolverError(
                f"singular McLachlan matrix (smallest eigenvalue {min_eig:.3e}) without regularization",
                min_eig)
        return linalg.solve(a, system.c, assume_a="sym")
    return linalg.solve(a + regularization * np.eye(a.shape[0]), system.c, assume_a="sym")


def _theta_dot(spec, theta, base, generator, regularization) -> np.ndarray:
    return _solve(mclachlan_system(spec, theta, base, generator), regularization)


def _advance(spec, theta, base, generator, config: VqaRunConfig, dtau: float,
             first: McLachlanSystem | None = None) -> np.ndarray:
    eps = config.regularization
    k1 = _solve(first, eps) if first is not None else _theta_dot(spec, theta, base, generator, eps)
    if config.integrator == Integrator.EULER:
        return theta + dtau * k1
    k2 = _theta_dot(spec, theta + 0.5 * dtau * k1, base, generator, eps)
    k3 = _theta_dot(spec, theta + 0.5 * dtau * k2, base, generator, eps)
    k4 = _theta_dot(spec, theta + dtau * k3, base, generator, eps)
    return theta + dtau / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def mclachlan_step(spec: AnsatzSpec, theta, base: DenseState, generator,
                   config: VqaRunConfig, dtau: float | None = None) -> np.ndarray:
    """Advance theta by one step of dtau (default config.step_size)."""
    theta = np.asarray(theta, dtype=float)
    return _advance(spec, theta, base, generator, config,
                    config.step_size if dtau is None else dtau)


def initial_theta(spec: AnsatzSpec, seed_trick: bool = True) -> np.ndarray:
    """Zero parameters; with the seed trick the seed gate and its partner cancel exactly."""
    theta = np.zeros(spec.n_params)
    if seed_trick:
        theta[0] = VQA_SEED_OFFSET
        theta[spec.seed_partner_index] = -VQA_SEED_OFFSET
    return theta


def _step_schedule(total: float, step: float) -> list[float]:
    n_steps = math.ceil(total / step - 1e-9) if total > 0 else 0
    steps = [step] * n_steps
    if n_steps:
        steps[-1] = total - step * (n_steps - 1)
    return steps


def run_vqa(model: ModelSpec, meas: MeasurementSpec, spec: AnsatzSpec, config: VqaRunConfig,
            base: DenseState | None = None) -> VqaResult:
    """Evolve the ground state in imaginary time tau in [0, total_tau] under H_m.

    H_m is the unit-strength generator of the density measurement, so tau plays
    the role of the measurement strength W.
    """
    if not meas.is_density:
        raise DomainError(f"variational evolution needs a density measurement, got {meas.kind}")
    if spec.n_qubits != model.n_sites:
        raise SizeGuardError(f"ansatz has {spec.n_qubits} qubits, model {model.n_sites} sites")
    base = base if base is not None else ground_state_ed(model)
    generator = density_generator(meas, model.n_sites)
    theta = initial_theta(spec, config.seed_trick)

    def fidelity(psi: np.ndarray, tau: float) -> float:
        if not config.oracle:
            return math.nan
        target = imaginary_time_reference(base, generator, tau)
        return abs(np.vdot(target.amplitudes, psi)) ** 2

    trajectory = []
    tau = 0.0
    steps = _step_schedule(config.total_tau, config.step_size)
    logger.info("VQA L=%d layers=%d params=%d steps=%d integrator=%s",
                spec.n_qubits, spec.n_layers, spec.n_params, len(steps), config.integrator)
    for step, dtau in enumerate(steps + [None]):
        system = mclachlan_system(spec, theta, base, generator)
        row = TrajectoryRow(step, tau, float(np.linalg.norm(system.c)),
                            system.min_eigenvalue, fidelity(system.psi, tau))
        trajectory.append(row)
        logger.debug("VQA step=%d tau=%.4f |C|=%.3e min_eig_A=%.3e fidelity=%.8f eps=%.1e",
                     row.step, row.tau, row.norm_c, row.min_eig_a, row.fidelity,
                     config.regularization)
        if row.min_eig_a < -A_NEGATIVE_TOL:
            raise NumericalError(f"McLachlan matrix has eigenvalue {row.min_eig_a:.3e} < 0")
        if dtau is None:
            break
        theta = _advance(spec, theta, base, generator, config, dtau, first=system)
        tau += dtau

    state = ansatz_state(spec, theta, base)
    return VqaResult(state, theta, trajectory)
