"""Sampling engines producing empirical passage tuples.

Three routes, matched to what the analytic module predicts:

* a stable-increment random walk run to first passage over a level -- the
  walk's passage triple is exact, and rescaled by the level it converges to
  the explicit stable triple law as the level grows;
* the pathwise map sending first-passage triples of the unconditioned walk
  to last-passage triples of the walk conditioned to stay positive (a pure
  coordinate change, no randomness);
* samplers for the self-similar process driven by the conditioned-stable
  driver: a tabulated-inverse-CDF increment sampler built by Fourier
  inversion of the driver's characteristic exponent feeds a passage skeleton
  at the driver level, and the position just before last passage from 0 is
  drawn exactly from its uniform-times-size-biased representation.

Determinism: every sampler takes an :class:`RngSpec`; identical specs give
bit-identical samples, distinct ``stream_id`` values give independent
streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import (ParameterError, StableParams, lamperti_up_exponent,
                     lamperti_up_model)
from .numerics import QuadSpec, quad

__all__ = [
    "RngSpec", "PassageSamples", "LastPassageSamples", "BudgetError",
    "sample_stable_increment", "simulate_first_passage_rw", "tanaka_map",
    "simulate_pssmp", "sample_pssmp_last_position_from0",
    "simulate_conditioned_crossing_rw",
]


@dataclass(frozen=True)
class RngSpec:
    """Seed and stream id; the pair fully determines the sample sequence."""

    seed: int = 0
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed,
                                    spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))


@dataclass
class PassageSamples:
    """First-passage tuples, stored columnwise.

    ``undershoot_max`` is level minus the running maximum before passage,
    ``undershoot`` level minus the position before passage, ``overshoot``
    the jump past the level.  ``crossed`` marks proper crossings (always
    true for recurrent walks, kept for defective settings).
    """

    undershoot_max: np.ndarray
    undershoot: np.ndarray
    overshoot: np.ndarray
    crossed: np.ndarray

    def __len__(self):
        return len(self.overshoot)


@dataclass
class LastPassageSamples:
    """Last-passage tuples of the conditioned walk: position gap before the
    final visit, the position after it, and the overshoot of the future
    infimum."""

    undershoot_last: np.ndarray
    overshoot_last: np.ndarray
    future_inf: np.ndarray

    def __len__(self):
        return len(self.overshoot_last)


class BudgetError(RuntimeError):
    """Step budget exhausted; carries the samples completed so far."""

    def __init__(self, message, partial):
        super().__init__(message)
        self.partial = partial


def stable_skewness(p: StableParams) -> float:
    """Skewness parameter of the one-parameterization reproducing the
    positivity parameter ``rho``; raises if the pair is infeasible."""
    al, rho = p.alpha, p.rho
    if al == 1.0:
        return 0.0
    t = math.tan(math.pi * al * (rho - 0.5))
    beta = t / math.tan(math.pi * al / 2.0)
    if abs(beta) > 1.0 + 1e-12:
        raise ParameterError(
            f"no stable law has alpha={al}, rho={rho}: implied skewness {beta:.4f}")
    return float(min(1.0, max(-1.0, beta)))


def sample_stable_increment(p: StableParams, rng: np.random.Generator,
                            size: int = 1) -> np.ndarray:
    """Draws from the strictly stable law with index alpha and positivity
    parameter rho, unit scale (Chambers-Mallows-Stuck).

    For alpha = 1 strict stability forces a Cauchy with a drift
    ``tan(pi(rho - 1/2))`` fixing the positivity parameter.
    """
    al, rho = p.alpha, p.rho
    V = rng.uniform(-math.pi / 2.0, math.pi / 2.0, size=size)
    if al == 1.0:
        return np.tan(V) + math.tan(math.pi * (rho - 0.5))
    beta = stable_skewness(p)
    W = rng.standard_exponential(size=size)
    theta0 = math.atan(beta * math.tan(math.pi * al / 2.0)) / al
    scale = (1.0 + beta ** 2 * math.tan(math.pi * al / 2.0) ** 2) ** (1.0 / (2.0 * al))
    s = np.sin(al * (V + theta0)) / np.cos(V) ** (1.0 / al)
    t = (np.cos(V - al * (V + theta0)) / W) ** ((1.0 - al) / al)
    return scale * s * t


def simulate_first_passage_rw(p: StableParams, level: float, rng: RngSpec,
                              n: int, max_total_steps: int = 10 ** 9,
                              batch_rounds: int = 10 ** 6) -> PassageSamples:
    """Runs n stable random walks to first passage over ``level`` and
    records the passage triple of each.

    Rescaled by the level, the triples converge in law to the explicit
    stable triple as level grows.  Exhausting ``max_total_steps`` raises
    :class:`BudgetError` carrying the finished samples.
    """
    if level <= 0:
        raise ParameterError("level must be positive")
    if n < 0:
        raise ParameterError("n must be nonnegative")
    gen = rng.generator()
    um = np.empty(n)
    uu = np.empty(n)
    oo = np.empty(n)
    if n == 0:
        return PassageSamples(um, uu, oo, np.zeros(0, dtype=bool))

    pos = np.zeros(n)
    runmax = np.zeros(n)
    alive = np.arange(n)
    steps = 0
    while alive.size:
        inc = sample_stable_increment(p, gen, alive.size)
        steps += alive.size
        if steps > max_total_steps:
            done = np.setdiff1d(np.arange(n), alive)
            raise BudgetError(
                f"step budget {max_total_steps} exhausted with "
                f"{done.size} of {n} walks finished",
                PassageSamples(um[done], uu[done], oo[done],
                               np.ones(done.size, dtype=bool)))
        new = pos[alive] + inc
        crossed = new > level
        idx = alive[crossed]
        um[idx] = level - runmax[idx]
        uu[idx] = level - pos[idx]
        oo[idx] = new[crossed] - level
        keep = alive[~crossed]
        pos[keep] = new[~crossed]
        runmax[keep] = np.maximum(runmax[keep], pos[keep])
        alive = keep
    return PassageSamples(um, uu, oo, np.ones(n, dtype=bool))


def tanaka_map(samples: PassageSamples) -> LastPassageSamples:
    """Maps first-passage triples of the walk to last-passage triples of the
    walk conditioned to stay positive (issued from 0), at the same level.

    The map identifies the position before the last visit with the running
    maximum before first passage, the future-infimum overshoot with the
    first-passage overshoot, and the position after the last visit with
    overshoot + undershoot - max-undershoot.
    """
    y = samples.undershoot_max
    v = samples.undershoot
    u = samples.overshoot
    if np.any(y > v + 1e-12) or np.any(u <= 0):
        raise ParameterError("samples violate the path inequalities")
    return LastPassageSamples(undershoot_last=y.copy(),
                              overshoot_last=u + v - y,
                              future_inf=u.copy())


class DriverIncrementTable:
    """Inverse-CDF table for increments of the conditioned-stable driver.

    The density of the time-``dt`` increment is recovered by FFT inversion
    of ``exp(-dt * Psi)`` with ``Psi`` the driver's Gamma-ratio exponent
    (any positive multiple of Psi only rescales time, which passage
    functionals ignore).  The driver has exponential tails on both sides, so
    a finite grid captures the law to high accuracy.
    """

    def __init__(self, alpha: float, rho: float, dt: float,
                 half_width: float = 60.0, grid_size: int = 2 ** 20):
        if dt <= 0:
            raise ParameterError("dt must be positive")
        self.alpha, self.rho, self.dt = alpha, rho, dt
        M = grid_size
        dx = 2.0 * half_width / M
        lam = 2.0 * math.pi / (M * dx) * (np.arange(M) - M // 2)
        phi = np.exp(-dt * lamperti_up_exponent(lam, alpha, rho))
        phase = np.exp(1j * lam * half_width)
        dens = np.fft.fft(np.fft.ifftshift(phi * phase)).real
        dens *= (lam[1] - lam[0]) / (2.0 * math.pi)
        dens = np.maximum(dens, 0.0)
        x = -half_width + dx * np.arange(M)
        cdf = np.cumsum(dens) * dx
        cdf /= cdf[-1]
        keep = np.concatenate([[True], np.diff(cdf) > 0])
        self._x = x[keep]
        self._cdf = cdf[keep]

    def sample(self, gen: np.random.Generator, size: int) -> np.ndarray:
        return np.interp(gen.uniform(size=size), self._cdf, self._x)


def simulate_pssmp(alpha: float, rho: float, start: float, b: float,
                   step: float, rng: RngSpec, n: int,
                   max_total_steps: int = 10 ** 9,
                   table: DriverIncrementTable | None = None):
    """Simulates the passage triple (max before, position before, position
    at passage) of the self-similar process driven by the conditioned-stable
    driver, started at ``start`` in (0, b).

    Passage is detected on the driver's path skeleton with time step
    ``step`` and mapped through the exponential, so there is no
    time-discretization bias in the time change, only the skeleton bias of
    sampling the driver at discrete times (shrinks with ``step``).

    Returns three arrays (running max, position before, position at
    passage).
    """
    if not (0.0 < start < b):
        raise ParameterError("need 0 < start < b")
    if n < 0:
        raise ParameterError("n must be nonnegative")
    if table is None:
        table = DriverIncrementTable(alpha, rho, step)
    gen = rng.generator()
    ell = math.log(b / start)
    M = np.empty(n)
    V = np.empty(n)
    W = np.empty(n)
    if n == 0:
        return M, V, W
    pos = np.zeros(n)
    runmax = np.zeros(n)
    alive = np.arange(n)
    steps = 0
    while alive.size:
        inc = table.sample(gen, alive.size)
        steps += alive.size
        if steps > max_total_steps:
            raise BudgetError(
                f"step budget exhausted with {n - alive.size} of {n} done",
                (M, V, W))
        new = pos[alive] + inc
        crossed = new > ell
        idx = alive[crossed]
        M[idx] = start * np.exp(runmax[idx])
        V[idx] = start * np.exp(pos[idx])
        W[idx] = start * np.exp(new[crossed])
        keep = alive[~crossed]
        pos[keep] = new[~crossed]
        runmax[keep] = np.maximum(runmax[keep], pos[keep])
        alive = keep
    return M, V, W


def sample_pssmp_last_position_from0(alpha: float, rho: float, b: float,
                                     rng: RngSpec, n: int,
                                     grid_size: int = 4096) -> np.ndarray:
    """Draws the position just before last passage below ``b`` of the
    self-similar process started continuously from 0.

    Uses the exact representation position = b * exp(-U Z) with U uniform
    and Z distributed as the size-biased ascending ladder jump,
    ``P(Z > u) = (1/mu) int_u^inf s Pi_H(ds)``; Z is drawn by tabulated
    inverse CDF (the integrated tail is computed by quadrature on a log-
    spaced grid).
    """
    if n < 0:
        raise ParameterError("n must be nonnegative")
    m = lamperti_up_model(alpha, rho)
    gen = rng.generator()
    if n == 0:
        return np.empty(0)

    # survival of Z on a grid; the integrand s*pi_H(s) is integrable at 0
    # (exponent -alpha*rho) and decays exponentially
    c = alpha * rho
    grid = np.concatenate([[0.0], np.geomspace(1e-6, 60.0, grid_size - 1)])

    def surv(u):
        u = np.atleast_1d(u)

        def f(t):
            s = u[..., None] + t
            return s * m.ladder_density(s)

        return quad(f, 0.0, math.inf, QuadSpec(1e-12, 1e-10),
                    left_exponent=-c) / m.mu_plus

    sv = np.clip(surv(grid), 0.0, 1.0)
    sv[0] = 1.0
    # invert: Z = S^{-1}(V), V uniform; survival is decreasing
    uu = gen.uniform(size=n)
    z = np.interp(uu, sv[::-1], grid[::-1])
    return b * np.exp(-gen.uniform(size=n) * z)


def simulate_conditioned_crossing_rw(alpha: float, drift: float, level: float,
                                     rng: RngSpec, n_target: int,
                                     max_attempts: int = 10 ** 7):
    """Pareto-jump random walk with negative drift, conditioned (by
    rejection) on crossing ``level``; returns the passage triples of the
    accepted walks and the acceptance rate.

    This is the heavy-tailed drifting-to-minus-infinity regime where the
    rescaled conditional triple has the explicit product limit; feasible at
    moderate levels only, since acceptance decays with the level.
    """
    if not (0.0 < alpha < 1.0):
        raise ParameterError("alpha must lie in (0,1)")
    if drift <= 0 or level <= 0:
        raise ParameterError("drift and level must be positive")
    gen = rng.generator()
    um, uu, oo = [], [], []
    attempts = 0
    batch = max(256, n_target)
    # a walk that drops below this floor has crossing probability too small
    # to matter for the conditional law at the stated tolerances
    floor = -60.0 * level
    while len(oo) < n_target and attempts < max_attempts:
        attempts += batch
        pos = np.zeros(batch)
        runmax = np.zeros(batch)
        alive = np.ones(batch, dtype=bool)
        while np.any(alive):
            k = int(alive.sum())
            jumps = gen.pareto(alpha, size=k) + 1.0   # Pareto tail x^-alpha
            inc = jumps - drift - 1.0
            idx = np.flatnonzero(alive)
            new = pos[idx] + inc
            crossed = new > level
            cidx = idx[crossed]
            um.extend((level - runmax[cidx]).tolist())
            uu.extend((level - pos[cidx]).tolist())
            oo.extend((new[crossed] - level).tolist())
            dead = new < floor
            keep = idx[~crossed & ~dead]
            pos[keep] = new[~crossed & ~dead]
            runmax[keep] = np.maximum(runmax[keep], pos[keep])
            alive[:] = False
            alive[keep] = True
    k = min(len(oo), n_target)
    samples = PassageSamples(np.array(um[:k]), np.array(uu[:k]),
                             np.array(oo[:k]), np.ones(k, dtype=bool))
    return samples, k / max(attempts, 1)
