"""CHSH bench: quantum correlations, commutation audit, and hidden-variable
outcome streams.

Measurement directions live in the z-x plane, so each setting is a single
angle and the observable is cos(theta) sigma_z + sin(theta) sigma_x. The
hidden-variable side draws a unit vector uniformly on the 2-sphere and
responds with the sign of its projection on the setting direction; all four
responses are evaluated on the same draw, which is what makes the
incompatible-pair correlations computable from one stream.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DimensionMismatchError, ValidationError

PAIR_NAMES = ("A1B1", "A1B2", "A2B1", "A2B2", "A1A2", "B1B2")
_COLUMNS = {"A1": 0, "A2": 1, "B1": 2, "B2": 3}

# Quantum-optimal settings for the singlet state.
OPTIMAL_ANGLES = (0.0, np.pi / 2, np.pi / 4, -np.pi / 4)


@dataclass(frozen=True)
class ChshAngles:
    """Measurement angles (a1, a2) for Alice and (b1, b2) for Bob, radians."""

    a1: float
    a2: float
    b1: float
    b2: float

    def __post_init__(self):
        for name in ("a1", "a2", "b1", "b2"):
            if not np.isfinite(getattr(self, name)):
                raise ValidationError(f"angle {name} is not finite")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.a1, self.a2, self.b1, self.b2)


def observable_from_angle(theta: float) -> np.ndarray:
    """Spin observable cos(theta) sigma_z + sin(theta) sigma_x; eigenvalues +-1."""
    return np.cos(theta) * linalg.SIGMA_Z + np.sin(theta) * linalg.SIGMA_X


def singlet_state() -> np.ndarray:
    """Density operator of the two-qubit singlet (|01> - |10>)/sqrt(2)."""
    psi = np.zeros(4, dtype=complex)
    psi[1] = 1.0 / np.sqrt(2.0)
    psi[2] = -1.0 / np.sqrt(2.0)
    return np.outer(psi, psi.conj())


def quantum_correlation(rho: np.ndarray, theta_a: float, theta_b: float) -> float:
    """Correlation Tr(rho A(theta_a) (x) B(theta_b)) in [-1, 1]."""
    r = linalg.check_density(rho)
    if r.shape != (4, 4):
        raise DimensionMismatchError("two-qubit state must be 4x4")
    ab = linalg.tensor_product(
        observable_from_angle(theta_a), observable_from_angle(theta_b)
    )
    val = linalg.trace_product(r, ab)
    if abs(val) > 1.0 + 1e-10:
        raise ValidationError(f"correlation {val} outside [-1, 1]")
    return float(np.clip(val, -1.0, 1.0))


def chsh_value(rho: np.ndarray, angles: ChshAngles) -> float:
    """S = E(a1,b1) + E(a1,b2) + E(a2,b1) - E(a2,b2)."""
    e11 = quantum_correlation(rho, angles.a1, angles.b1)
    e12 = quantum_correlation(rho, angles.a1, angles.b2)
    e21 = quantum_correlation(rho, angles.a2, angles.b1)
    e22 = quantum_correlation(rho, angles.a2, angles.b2)
    return e11 + e12 + e21 - e22


def chsh_grid_max(rho: np.ndarray, n_angles: int = 61) -> tuple[float, ChshAngles]:
    """Maximum |S| over a uniform angle grid, with the attaining settings.

    The per-pair correlation table is computed once and the four-index
    combination broadcast, so the quartic grid stays cheap.
    """
    thetas = np.linspace(-np.pi, np.pi, n_angles)
    table = np.empty((n_angles, n_angles))
    for i, ta in enumerate(thetas):
        for j, tb in enumerate(thetas):
            table[i, j] = quantum_correlation(rho, ta, tb)
    s = (
        table[:, None, :, None]
        + table[:, None, None, :]
        + table[None, :, :, None]
        - table[None, :, None, :]
    )
    flat = np.argmax(np.abs(s))
    i1, i2, j1, j2 = np.unravel_index(flat, s.shape)
    best = ChshAngles(thetas[i1], thetas[i2], thetas[j1], thetas[j2])
    return float(np.abs(s).max()), best


def compatibility_audit(angles: ChshAngles) -> dict:
    """Commutator norms of all six observable pairs in the bipartite realization.

    Cross pairs (Alice vs Bob) commute identically; local pairs commute only
    when the two settings coincide modulo pi, in which case the CHSH
    combination degenerates and cannot exceed the classical bound.
    """
    eye = np.eye(2, dtype=complex)
    a1 = linalg.tensor_product(observable_from_angle(angles.a1), eye)
    a2 = linalg.tensor_product(observable_from_angle(angles.a2), eye)
    b1 = linalg.tensor_product(eye, observable_from_angle(angles.b1))
    b2 = linalg.tensor_product(eye, observable_from_angle(angles.b2))
    cross = {
        "A1B1": linalg.commutator_norm(a1, b1),
        "A1B2": linalg.commutator_norm(a1, b2),
        "A2B1": linalg.commutator_norm(a2, b1),
        "A2B2": linalg.commutator_norm(a2, b2),
    }
    local = {
        "A1A2": linalg.commutator_norm(a1, a2),
        "B1B2": linalg.commutator_norm(b1, b2),
    }
    degenerate = min(local.values()) <= 1e-12
    return {"cross": cross, "local": local, "degenerate": degenerate}


@dataclass(frozen=True)
class HvStrategy:
    """Hidden-variable strategy: a distribution over lambda plus four
    +-1-valued responses.

    kind "sphere_sign": lambda uniform on the unit 2-sphere, response
    sign(lambda . n(theta)) with n(theta) = (sin theta, 0, cos theta).
    kind "constant": responses are fixed values, independent of lambda.
    """

    kind: str = "sphere_sign"
    angles: ChshAngles = field(
        default_factory=lambda: ChshAngles(*OPTIMAL_ANGLES)
    )
    constants: tuple[int, int, int, int] = (1, 1, 1, 1)

    def __post_init__(self):
        if self.kind not in ("sphere_sign", "constant"):
            raise ValidationError(f"unknown strategy kind {self.kind!r}")
        if self.kind == "constant" and any(
            c not in (-1, 1) for c in self.constants
        ):
            raise ValidationError("constant responses must be +-1")

    def describe(self) -> dict:
        if self.kind == "constant":
            return {"kind": self.kind, "constants": list(self.constants)}
        return {"kind": self.kind, "angles": list(self.angles.as_tuple())}


@dataclass(frozen=True)
class OutcomeStream:
    """n joint records (A1, A2, B1, B2) in {-1, +1}^4 from one strategy."""

    outcomes: np.ndarray  # (n, 4) int8
    seed: int
    strategy: dict

    @property
    def n(self) -> int:
        return self.outcomes.shape[0]


def hv_sample(strategy: HvStrategy, n: int, seed: int) -> OutcomeStream:
    """Evaluate all four responses on n independent lambda draws."""
    if n < 1:
        raise ValidationError("need at least one record")
    if strategy.kind == "constant":
        out = np.tile(np.array(strategy.constants, dtype=np.int8), (n, 1))
        return OutcomeStream(outcomes=out, seed=seed, strategy=strategy.describe())
    rng = np.random.Generator(np.random.Philox(np.uint64(seed)))
    lam = rng.standard_normal((n, 3))
    lam /= np.linalg.norm(lam, axis=1, keepdims=True)
    out = np.empty((n, 4), dtype=np.int8)
    thetas = strategy.angles.as_tuple()
    for col, theta in enumerate(thetas):
        direction = np.array([np.sin(theta), 0.0, np.cos(theta)])
        proj = lam @ direction
        out[:, col] = np.where(proj >= 0.0, 1, -1)
    return OutcomeStream(outcomes=out, seed=seed, strategy=strategy.describe())


def empirical_correlation(stream: OutcomeStream, pair: str) -> float:
    """Mean product of one outcome pair; all six pairs share the stream."""
    if pair not in PAIR_NAMES:
        raise ValidationError(f"unknown pair {pair!r}; expected one of {PAIR_NAMES}")
    i = _COLUMNS[pair[:2]]
    j = _COLUMNS[pair[2:]]
    prod = stream.outcomes[:, i].astype(float) * stream.outcomes[:, j]
    return float(prod.mean())


def chsh_from_stream(stream: OutcomeStream) -> float:
    """S estimated from the four cross pairs of one joint stream."""
    return (
        empirical_correlation(stream, "A1B1")
        + empirical_correlation(stream, "A1B2")
        + empirical_correlation(stream, "A2B1")
        - empirical_correlation(stream, "A2B2")
    )


def sphere_sign_correlation(theta_1: float, theta_2: float) -> float:
    """Analytic pair correlation 1 - 2|dtheta|/pi for the sign-on-sphere model."""
    delta = abs((theta_1 - theta_2 + np.pi) % (2 * np.pi) - np.pi)
    return 1.0 - 2.0 * delta / np.pi


def deterministic_bound_enumeration() -> float:
    """Max |S| over all 16 deterministic +-1 assignments; equals 2."""
    best = 0.0
    for a1, a2, b1, b2 in itertools.product((-1, 1), repeat=4):
        s = a1 * b1 + a1 * b2 + a2 * b1 - a2 * b2
        best = max(best, abs(float(s)))
    return best
