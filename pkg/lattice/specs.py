"""Models, measurements, protocols and regions as plain immutable data."""

from dataclasses import dataclass, field, replace
from enum import StrEnum
from fractions import Fraction

import numpy as np

from errors import DomainError


class Boundary(StrEnum):
    OPEN = "open"
    PERIODIC = "periodic"
    ANTIPERIODIC = "antiperiodic"
    # XXZ ring: periodic fermions for odd particle number, antiperiodic for even
    SPIN_PERIODIC = "spin_periodic"


class MeasurementKind(StrEnum):
    DENSITY_STAGGERED = "density_staggered"
    BOND_XX_YY_PAIRED = "bond_xx_yy_paired"
    BOND_XX = "bond_xx"
    DENSITY_PATTERN = "density_pattern"


class Projector(StrEnum):
    PARTICLE = "particle"
    HOLE = "hole"


DENSITY_KINDS = (MeasurementKind.DENSITY_STAGGERED, MeasurementKind.DENSITY_PATTERN)


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value).limit_denominator(1000)
    return Fraction(str(value))


@dataclass(frozen=True)
class ModelSpec:
    """Spinless fermion chain with hopping t and nearest-neighbour interaction.

    H = -t sum (c_i^+ c_{i+1} + h.c.) + 2 t delta sum (n_i - 1/2)(n_{i+1} - 1/2),
    i.e. 2t sum (SxSx + SySy + delta SzSz) in spin language.
    """

    n_sites: int
    boundary: Boundary = Boundary.OPEN
    delta: float = 0.0
    hopping: float = 1.0
    filling: Fraction = Fraction(1, 2)

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        object.__setattr__(self, "filling", as_fraction(self.filling))
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "hopping", float(self.hopping))
        if self.n_sites < 2:
            raise DomainError(f"n_sites must be >= 2, got {self.n_sites}")
        if not 0 < self.filling <= Fraction(1, 2):
            raise DomainError(f"filling must lie in (0, 1/2], got {self.filling}")
        if (self.filling * self.n_sites).denominator != 1:
            raise DomainError(
                f"filling {self.filling} x n_sites {self.n_sites} is not an integer particle number")

    @property
    def n_particles(self) -> int:
        return int(self.filling * self.n_sites)

    @property
    def is_closed(self) -> bool:
        return self.boundary != Boundary.OPEN

    def wrap_sign(self) -> int:
        """Sign of the bond (L-1, 0) in fermion language; 0 for open chains."""
        if self.boundary == Boundary.OPEN or self.n_sites == 2:
            return 0
        if self.boundary == Boundary.PERIODIC:
            return 1
        if self.boundary == Boundary.ANTIPERIODIC:
            return -1
        return 1 if self.n_particles % 2 == 1 else -1

    def bonds(self) -> list[tuple[int, int, int]]:
        """Nearest-neighbour bonds as (i, j, sign)."""
        bonds = [(i, i + 1, 1) for i in range(self.n_sites - 1)]
        sign = self.wrap_sign()
        if sign:
            bonds.append((self.n_sites - 1, 0, sign))
        return bonds

    def with_size(self, n_sites: int) -> "ModelSpec":
        return replace(self, n_sites=n_sites)

    def with_delta(self, delta: float) -> "ModelSpec":
        return replace(self, delta=delta)


@dataclass(frozen=True)
class MeasurementSpec:
    """Post-selected Kraus operator M = exp(h) of a given family and strength.

    Density kinds: M = exp(-sum_j w_j n_j) with w from ``site_weights``.
    The pattern of ``density_pattern`` is given in units of ``strength``.
    """

    kind: MeasurementKind
    strength: float = 0.0
    pattern: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", MeasurementKind(self.kind))
        object.__setattr__(self, "strength", float(self.strength))
        if self.pattern is not None:
            object.__setattr__(self, "pattern", tuple(float(p) for p in self.pattern))
        if self.strength < 0:
            raise DomainError(f"measurement strength must be >= 0, got {self.strength}")
        if self.kind == MeasurementKind.DENSITY_PATTERN and not self.pattern:
            raise DomainError("density_pattern needs a non-empty pattern")

    @property
    def is_density(self) -> bool:
        return self.kind in DENSITY_KINDS

    @property
    def conserves_number(self) -> bool:
        return self.kind != MeasurementKind.BOND_XX

    def with_strength(self, strength: float) -> "MeasurementSpec":
        return replace(self, strength=strength)

    def check_size(self, n_sites: int) -> None:
        if self.kind == MeasurementKind.DENSITY_PATTERN and n_sites % len(self.pattern):
            raise DomainError(
                f"pattern length {len(self.pattern)} does not divide n_sites {n_sites}")
        if self.kind == MeasurementKind.BOND_XX_YY_PAIRED and n_sites % 2:
            raise DomainError(f"paired bond measurement needs an even chain, got {n_sites}")

    def unit_weights(self, n_sites: int) -> np.ndarray:
        """Per-site weights at unit strength (the generator H_m of the density kinds)."""
        self.check_size(n_sites)
        if self.kind == MeasurementKind.DENSITY_STAGGERED:
            return np.array([(-1.0) ** (j + 1) for j in range(n_sites)])
        if self.kind == MeasurementKind.DENSITY_PATTERN:
            return np.tile(np.asarray(self.pattern), n_sites // len(self.pattern))
        raise DomainError(f"{self.kind} is not a density measurement")

    def site_weights(self, n_sites: int) -> np.ndarray:
        return self.strength * self.unit_weights(n_sites)

    def ceff_strength(self) -> float | None:
        """Strength to feed the staggered closed form for c_eff, if one applies."""
        if self.kind != MeasurementKind.DENSITY_PATTERN:
            return self.strength
        if len(self.pattern) == 2:
            return self.strength * abs(self.pattern[0] - self.pattern[1]) / 2
        return None


@dataclass(frozen=True)
class ProtocolSpec:
    """Ancilla post-selection protocol at filling n with per-site strengths W_j."""

    filling: Fraction
    period_weights: tuple[float, ...]
    chain_length: int
    projectors: tuple[Projector, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "filling", as_fraction(self.filling))
        object.__setattr__(self, "period_weights", tuple(float(w) for w in self.period_weights))
        if self.projectors is None:
            object.__setattr__(self, "projectors", (Projector.PARTICLE,) * len(self.period_weights))
        else:
            object.__setattr__(self, "projectors", tuple(Projector(p) for p in self.projectors))
        if not self.period_weights:
            raise DomainError("protocol needs at least one weight")
        if any(w < 0 for w in self.period_weights):
            raise DomainError(f"protocol weights must be >= 0, got {self.period_weights}")
        if len(self.projectors) != len(self.period_weights):
            raise DomainError("one projector per weight is required")
        if self.chain_length <= 0 or self.chain_length % len(self.period_weights):
            raise DomainError(
                f"period {len(self.period_weights)} does not divide chain length {self.chain_length}")
        if not 0 <= self.filling <= Fraction(1, 2):
            raise DomainError(f"filling must lie in [0, 1/2], got {self.filling}")


@dataclass(frozen=True)
class Region:
    """Sorted set of distinct site indices."""

    sites: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        sites = tuple(int(s) for s in self.sites)
        if len(set(sites)) != len(sites):
            raise DomainError(f"duplicate sites in region {sites}")
        object.__setattr__(self, "sites", tuple(sorted(sites)))

    @classmethod
    def interval(cls, start: int, stop: int) -> "Region":
        return cls(tuple(range(start, stop)))

    @classmethod
    def half(cls, n_sites: int) -> "Region":
        return cls.interval(0, n_sites // 2)

    def __len__(self) -> int:
        return len(self.sites)

    def check(self, n_sites: int) -> None:
        if self.sites and (self.sites[0] < 0 or self.sites[-1] >= n_sites):
            raise DomainError(f"region {self.sites} outside [0, {n_sites})")

    def indices(self) -> np.ndarray:
        return np.array(self.sites, dtype=int)

    def union(self, other: "Region") -> "Region":
        return Region(tuple(set(self.sites) | set(other.sites)))

    def intersection(self, other: "Region") -> "Region":
        return Region(tuple(set(self.sites) & set(other.sites)))

    def is_disjoint(self, other: "Region") -> bool:
        return not set(self.sites) & set(other.sites)

    def mirrored(self, n_sites: int) -> "Region":
        return Region(tuple(n_sites - 1 - s for s in self.sites))
