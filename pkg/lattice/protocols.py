"""Success-probability arithmetic of ancilla-based post-selection."""

import math
from fractions import Fraction
from typing import NamedTuple

from errors import DomainError, NumericalError
from lattice.specs import Projector, ProtocolSpec

QUARTER = Fraction(1, 4)
HALF = Fraction(1, 2)


class SuccessProbability(NamedTuple):
    probability: float
    lower_bound: float


def site_probability(weight: float, occupation: float) -> float:
    """Born probability p_j = 1 - (1 - exp(-2 W_j)) <P_j> of keeping the ancilla up."""
    return 1.0 - (1.0 - math.exp(-2.0 * weight)) * occupation


def success_probability(protocol: ProtocolSpec) -> SuccessProbability:
    """P = prod_j p_j over the tiled chain, with the bound prod_j (1 - <P_j>).

    For particle projectors only the bound is (1 - n)^L.
    """
    n = float(protocol.filling)
    repeats = protocol.chain_length // len(protocol.period_weights)
    log_p = 0.0
    log_bound = 0.0
    for weight, projector in zip(protocol.period_weights, protocol.projectors):
        occupation = n if projector == Projector.PARTICLE else 1.0 - n
        log_p += math.log(site_probability(weight, occupation))
        log_bound += math.log1p(-occupation) if occupation < 1.0 else -math.inf
    probability = math.exp(repeats * log_p)
    lower_bound = math.exp(repeats * log_bound)
    if probability < lower_bound * (1.0 - 1e-12):
        raise NumericalError(f"success probability {probability} below its bound {lower_bound}")
    return SuccessProbability(probability, lower_bound)


def shift_to_nonnegative(signed_weights) -> tuple[float, ...]:
    """Shift by exp(W sum_j n_j); the post-selected state is unchanged at fixed N."""
    low = min(signed_weights)
    return tuple(float(w) - low for w in signed_weights)


def direct_protocol(signed_weights, filling, chain_length: int, strength: float = 1.0) -> ProtocolSpec:
    """Particles measured on positive weights, holes on negative ones."""
    projectors = tuple(Projector.PARTICLE if w >= 0 else Projector.HOLE for w in signed_weights)
    return ProtocolSpec(
        filling=filling,
        period_weights=tuple(strength * abs(w) for w in signed_weights),
        chain_length=chain_length,
        projectors=projectors,
    )


def shifted_protocol(signed_weights, filling, chain_length: int, strength: float = 1.0) -> ProtocolSpec:
    weights = shift_to_nonnegative(signed_weights)
    return ProtocolSpec(filling, tuple(strength * w for w in weights), chain_length)


def coupling_time(weight: float) -> float:
    """Ancilla evolution time u_j with exp(-W_j) = cos(u_j)."""
    if weight < 0:
        raise DomainError(f"measurement strength must be >= 0, got {weight}")
    return math.acos(math.exp(-weight))


def strength_from_coupling(u: float) -> float:
    if not 0.0 <= u < math.pi / 2:
        raise DomainError(f"coupling time must lie in [0, pi/2), got {u}")
    return -math.log(abs(math.cos(u)))


# --- named protocols of the quarter-filling example ---

def quarter_direct(strength: float, chain_length: int) -> ProtocolSpec:
    return direct_protocol((1, 0, -1, 0), QUARTER, chain_length, strength)


def quarter_shifted(strength: float, chain_length: int) -> ProtocolSpec:
    return shifted_protocol((1, 0, -1, 0), QUARTER, chain_length, strength)


def half_shifted(strength: float, chain_length: int) -> ProtocolSpec:
    return shifted_protocol((1, -1), HALF, chain_length, strength)


def quarter_imperfect(strength: float, chain_length: int) -> ProtocolSpec:
    return ProtocolSpec(QUARTER, tuple(strength * w for w in (2, 2, 0, 2)), chain_length)


NAMED_PROTOCOLS = {
    "quarter_direct": quarter_direct,
    "quarter_shifted": quarter_shifted,
    "half_shifted": half_shifted,
    "quarter_imperfect": quarter_imperfect,
}
