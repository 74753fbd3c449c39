"""Canonical instances used across tests, docs, and the CLI.

Each factory captures one regime worth regression-testing: thresholds
that are tight but symmetric, subsidy that pays off, subsidy that
backfires, a horizon where harvesting an arm early beats any fixed
commitment, and the indistinguishable instance pairs that drive the
lower-bound demonstrations.
"""

from __future__ import annotations

import math

from .core import Instance

__all__ = [
    "symmetric_tight",
    "subsidy_worthwhile",
    "subsidy_wasteful",
    "one_type_two_arms",
    "early_harvest",
    "reward_uncertainty_pair",
    "hidden_threshold_pair",
    "PRESETS",
]

_IDENTITY2 = ((1.0, 0.0), (0.0, 1.0))


def symmetric_tight(T: int = 1000, tau: int = 100) -> Instance:
    """Two symmetric types and arms, thresholds at 40% of the phase.

    Myopic play meets both thresholds in a typical phase but loses an
    arm to arrival variance every ~30 phases; rare-event subsidy is
    needed.
    """
    return Instance(
        n=2, k=2, tau=tau, T=T, P=(0.5, 0.5),
        delta=(2 * tau // 5, 2 * tau // 5), mu=_IDENTITY2,
    )


def subsidy_worthwhile(T: int = 1000, tau: int = 100) -> Instance:
    """Arm 1 is cheap to keep (10%), arm 2 expensive (60%) while only
    half the arrivals want it: structural subsidy is required and pays,
    lifting per-round value from ~0.5 to ~0.9."""
    return Instance(
        n=2, k=2, tau=tau, T=T, P=(0.5, 0.5),
        delta=(tau // 10, 3 * tau // 5), mu=_IDENTITY2,
    )


def subsidy_wasteful(T: int = 1000, tau: int = 100) -> Instance:
    """Same thresholds, but the arm-2 audience is scarce (10%): feeding
    arm 2 its 60% quota burns half the rounds, so the best commitment
    forgoes it entirely."""
    return Instance(
        n=2, k=2, tau=tau, T=T, P=(0.9, 0.1),
        delta=(tau // 10, 3 * tau // 5), mu=_IDENTITY2,
    )


def one_type_two_arms(T: int = 1000, tau: int = 100) -> Instance:
    """Single user type, one useful arm, one worthless arm that still
    demands 20% exposure: any policy that blindly meets every threshold
    caps out at 0.8 per round."""
    return Instance(
        n=1, k=2, tau=tau, T=T, P=(1.0,),
        delta=(tau // 10, tau // 5), mu=((1.0, 0.0),),
    )


def early_harvest(tau: int = 2000, phases: int = 4) -> Instance:
    """Long phases, arm 2 wanted by 20% of users but demanding 50%
    exposure: committing to it forever loses, yet serving it for one
    phase and letting it depart beats every fixed commitment by
    a margin growing with tau."""
    return Instance(
        n=2, k=2, tau=tau, T=tau * phases, P=(0.8, 0.2),
        delta=(0, tau // 2), mu=_IDENTITY2,
    )


def reward_uncertainty_pair(T: int, tau: int, p: float = 0.25, c: float | None = None):
    """Two instances identical except for which of two look-alike arms
    is slightly better; distinguishing them needs more exploration than
    the phase budget allows, so every learner risks dropping the
    instrumental arm.
    """
    if not 0 < p < 0.5:
        raise ValueError("p must be in (0, 1/2)")
    t23 = T ** (2 / 3)
    if c is None:
        c = 1.0 if t23 > tau else 2.0 * tau / t23
    if c * t23 <= tau:
        raise ValueError("need c * T^(2/3) > tau")
    eps = T ** (-1 / 3) / (2.0 * math.sqrt(2.0 * c))
    d = round(p * tau)
    base = dict(n=2, k=3, tau=tau, T=T, P=(1.0 - p, p), delta=(0, d, d))
    mu1 = ((0.5, 0.0, 0.0), (0.0, (1.0 + eps) / 2.0, 0.5))
    mu2 = ((0.5, 0.0, 0.0), (0.0, 0.5, (1.0 + eps) / 2.0))
    return Instance(mu=mu1, **base), Instance(mu=mu2, **base)


def hidden_threshold_pair(T: int = 1000, tau: int = 100):
    """Two instances identical except for arm 2's threshold (30% vs
    40%): an algorithm that cannot observe thresholds must guess how
    much to subsidize and loses linearly on one of the two."""
    base = dict(n=2, k=2, tau=tau, T=T, P=(0.7, 0.3), mu=_IDENTITY2)
    return (
        Instance(delta=(0, round(0.3 * tau)), **base),
        Instance(delta=(0, round(0.4 * tau)), **base),
    )


PRESETS = {
    "symmetric_tight": symmetric_tight,
    "subsidy_worthwhile": subsidy_worthwhile,
    "subsidy_wasteful": subsidy_wasteful,
    "one_type_two_arms": one_type_two_arms,
    "early_harvest": early_harvest,
}
