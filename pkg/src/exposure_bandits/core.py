"""Problem instances, validation, and the exploration-rate computation.

Everything else in the package consumes the immutable :class:`Instance`
description defined here: ``n`` user types arriving i.i.d. from ``P``,
``k`` arms with expected utilities ``mu[u][a]``, and a horizon of ``T``
rounds split into phases of length ``tau``.  An arm that receives fewer
than ``delta[a]`` pulls within a phase departs permanently at the phase
boundary.

``compute_gamma`` answers the feasibility question behind uniform
exploration: the largest per-arm rate ``gamma`` such that pulling every
arm ``max(delta[a], gamma*tau)`` times still fits into one phase.
"""

from __future__ import annotations

import numbers
import warnings
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterator

__all__ = [
    "NEG_INF",
    "Instance",
    "GammaResult",
    "InfeasibleError",
    "ResourceGuardError",
    "validate",
    "gamma_from_parts",
    "compute_gamma",
    "iter_subsets",
]

SIMPLEX_TOL = 1e-12

REWARD_KINDS = ("bernoulli", "deterministic")


class InfeasibleError(Exception):
    """No commitment or schedule can satisfy the exposure constraints."""


class ResourceGuardError(Exception):
    """A configured state/size cap would be exceeded by this request."""


class _NegInf:
    """Typed stand-in for a minus-infinite objective value.

    Orders below every real number so ``max``/``sorted`` work, but supports
    no arithmetic: accidentally adding it to a running total raises
    ``TypeError`` instead of silently poisoning downstream values the way
    ``float('-inf')`` would.  There is a single shared instance,
    ``NEG_INF``; test with ``value is NEG_INF``.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __lt__(self, other):
        if other is self:
            return False
        if isinstance(other, numbers.Real):
            return True
        return NotImplemented

    def __le__(self, other):
        if other is self or isinstance(other, numbers.Real):
            return True
        return NotImplemented

    def __gt__(self, other):
        if other is self or isinstance(other, numbers.Real):
            return False
        return NotImplemented

    def __ge__(self, other):
        if other is self:
            return True
        if isinstance(other, numbers.Real):
            return False
        return NotImplemented

    def __repr__(self):
        return "NEG_INF"


NEG_INF = _NegInf()


@dataclass(frozen=True)
class Instance:
    """Full description of one exposure-constrained bandit problem.

    Parameters
    ----------
    n : int
        Number of user types.
    k : int
        Number of arms.
    tau : int
        Phase length in rounds.
    T : int
        Horizon in rounds; must be a positive multiple of ``tau``.
    P : tuple of float
        Arrival probability per type, a strictly positive simplex.
    delta : tuple of int
        Exposure threshold per arm, each in ``{0, ..., tau}``.
    mu : tuple of tuple of float
        Expected utility matrix, ``n`` rows by ``k`` columns, entries in
        ``[0, 1]``.
    reward_kind : str
        ``"bernoulli"`` for 0/1 rewards with mean ``mu[u][a]``, or
        ``"deterministic"`` for rewards equal to ``mu[u][a]``.
    """

    n: int
    k: int
    tau: int
    T: int
    P: tuple[float, ...]
    delta: tuple[int, ...]
    mu: tuple[tuple[float, ...], ...]
    reward_kind: str = "bernoulli"

    def __post_init__(self):
        # normalize sequence inputs so instances hash and compare by value
        object.__setattr__(self, "P", tuple(float(p) for p in self.P))
        object.__setattr__(self, "delta", tuple(int(d) for d in self.delta))
        object.__setattr__(
            self, "mu", tuple(tuple(float(v) for v in row) for row in self.mu)
        )

    @property
    def phases(self) -> int:
        return self.T // self.tau


@dataclass(frozen=True)
class GammaResult:
    """Outcome of the exploration-rate computation.

    ``gamma`` is the largest multiple of ``1/tau`` in ``(0, 1/k]`` such
    that ``sum_a max(delta[a], gamma*tau) <= tau``, stored as a
    ``Fraction`` so that ``floor(gamma*tau)`` is exact.  ``gamma`` is
    ``None`` when no positive multiple of ``1/tau`` satisfies the
    inequality.  ``feasible`` is ``False`` exactly when even the limit
    ``gamma -> 0`` fails, i.e. ``sum(delta) > tau``.  ``quota`` caches
    ``floor(gamma*tau)`` as an exact integer (0 when gamma is absent);
    downstream exploration consumes pull counts, not the rate itself.
    """

    gamma: Fraction | None
    feasible: bool
    quota: int = 0


def validate(instance: Instance) -> None:
    """Check every :class:`Instance` invariant.

    Raises ``ValueError`` describing the first violated invariant:
    non-positive sizes, a non-simplex ``P``, a ``delta`` entry outside
    ``[0, tau]``, a ``mu`` entry outside ``[0, 1]``, a horizon that is not
    a positive multiple of ``tau``, or an unknown ``reward_kind``.
    """
    n, k, tau, T = instance.n, instance.k, instance.tau, instance.T
    for name, value in (("n", n), ("k", k), ("tau", tau), ("T", T)):
        if not isinstance(value, int) or value < 1:
            raise ValueError(f"{name} must be a positive integer, got {value!r}")
    if len(instance.P) != n:
        raise ValueError(f"P has {len(instance.P)} entries, expected n={n}")
    for u, p in enumerate(instance.P):
        if not p > 0.0:
            raise ValueError(f"P[{u}]={p} is not strictly positive")
        if p * tau < 1.0:
            # accepted, but confidence floors degenerate for such types
            warnings.warn(
                f"type {u} arrives less than once per phase in expectation",
                RuntimeWarning,
                stacklevel=2,
            )
    total = sum(instance.P)
    if abs(total - 1.0) > SIMPLEX_TOL:
        raise ValueError(f"P sums to {total!r}, not 1 within {SIMPLEX_TOL}")
    if len(instance.delta) != k:
        raise ValueError(f"delta has {len(instance.delta)} entries, expected k={k}")
    for a, d in enumerate(instance.delta):
        if not 0 <= d <= tau:
            raise ValueError(f"delta[{a}]={d} outside [0, tau={tau}]")
    if len(instance.mu) != n:
        raise ValueError(f"mu has {len(instance.mu)} rows, expected n={n}")
    for u, row in enumerate(instance.mu):
        if len(row) != k:
            raise ValueError(f"mu row {u} has {len(row)} entries, expected k={k}")
        for a, v in enumerate(row):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"mu[{u}][{a}]={v} outside [0, 1]")
    if T % tau != 0:
        raise ValueError(f"T={T} is not a multiple of tau={tau}")
    if instance.reward_kind not in REWARD_KINDS:
        raise ValueError(
            f"reward_kind {instance.reward_kind!r} not in {REWARD_KINDS}"
        )


def gamma_from_parts(delta, tau: int, k: int) -> GammaResult:
    """Exploration rate from thresholds alone (arrival law not needed).

    Largest integer quota ``g`` with ``g/tau <= 1/k`` and
    ``sum_a max(delta[a], g) <= tau``; the left side is nondecreasing in
    ``g``, so a downward scan from ``floor(tau/k)`` finds the maximum.
    """
    delta = tuple(int(d) for d in delta)
    if sum(delta) > tau:
        return GammaResult(gamma=None, feasible=False)
    g = tau // k
    while g > 0 and sum(max(d, g) for d in delta) > tau:
        g -= 1
    if g == 0:
        return GammaResult(gamma=None, feasible=True, quota=0)
    return GammaResult(gamma=Fraction(g, tau), feasible=True, quota=g)


def compute_gamma(instance: Instance) -> GammaResult:
    """Largest feasible exploration rate for a validated instance.

    ``feasible`` is ``False`` iff ``sum(instance.delta) > instance.tau``.
    When a rate exists, ``sum_a max(delta[a], floor(gamma*tau)) <= tau``
    holds exactly, and enlarging any ``delta[a]`` never increases the
    returned ``gamma``.
    """
    validate(instance)
    return gamma_from_parts(instance.delta, instance.tau, instance.k)


def iter_subsets(k: int) -> Iterator[tuple[int, ...]]:
    """Nonempty subsets of ``range(k)`` ordered by cardinality, then
    lexicographically.  The shared tie-break order for subset searches."""
    for size in range(1, k + 1):
        yield from combinations(range(k), size)
