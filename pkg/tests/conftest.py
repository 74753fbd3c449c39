from __future__ import annotations

import numpy as np

from exposure_bandits import Instance

IDENTITY2 = ((1.0, 0.0), (0.0, 1.0))


def make_instance(n=2, k=2, tau=100, phases=10, P=None, delta=None, mu=None,
                  reward_kind="bernoulli") -> Instance:
    if P is None:
        P = tuple([1.0 / n] * n)
    if delta is None:
        delta = tuple([0] * k)
    if mu is None:
        mu = tuple(tuple(1.0 if a == u else 0.0 for a in range(k)) for u in range(n))
    return Instance(n=n, k=k, tau=tau, T=tau * phases, P=P, delta=delta,
                    mu=mu, reward_kind=reward_kind)


def random_simplex(rng: np.random.Generator, n: int) -> tuple:
    # rational weights keep the simplex check exact
    w = rng.integers(1, 9, size=n)
    total = int(w.sum())
    return tuple(int(x) / total for x in w)


def random_mu(rng: np.random.Generator, n: int, k: int, dyadic: bool = False):
    if dyadic:
        # multiples of 1/16 are exact binary floats, so value comparisons
        # between independent solvers can demand exact equality
        return tuple(tuple(int(v) / 16 for v in rng.integers(0, 17, size=k))
                     for _ in range(n))
    return tuple(tuple(float(v) for v in rng.random(k)) for _ in range(n))


def random_instance(rng: np.random.Generator, *, n_max=3, k_max=3, tau_max=8,
                    phases_max=1, dyadic=False, delta_sum_within_tau=True) -> Instance:
    n = int(rng.integers(1, n_max + 1))
    k = int(rng.integers(1, k_max + 1))
    tau = int(rng.integers(2, tau_max + 1))
    phases = int(rng.integers(1, phases_max + 1))
    if delta_sum_within_tau:
        # draw thresholds that leave a feasible joint commitment
        delta = []
        left = tau
        for _ in range(k):
            d = int(rng.integers(0, left + 1))
            delta.append(d)
            left -= d
        rng.shuffle(delta)
        delta = tuple(delta)
    else:
        delta = tuple(int(d) for d in rng.integers(0, tau + 1, size=k))
    return Instance(
        n=n, k=k, tau=tau, T=tau * phases,
        P=random_simplex(rng, n),
        delta=delta,
        mu=random_mu(rng, n, k, dyadic=dyadic),
    )


def random_counts(rng: np.random.Generator, n: int, tau: int) -> tuple:
    """Type counts summing to at most tau (no slack row)."""
    counts = []
    left = tau
    for _ in range(n):
        c = int(rng.integers(0, left + 1))
        counts.append(c)
        left -= c
    return tuple(counts)
