"""The three explicit Levy families and their fluctuation structure.

Each family is packaged as a :class:`FluctuationModel`: the Levy density and
its tails, the ascending/descending ladder-height Levy measures, the renewal
densities, the ladder Laplace exponents with their killing rates, and the
mean of the ascending ladder height.  The normalization of local time is
pinned so that every passage density built from the bundle is a genuine
probability density with no free constants:

* stable:  ``kappa(b) = b**(alpha*rho)``, renewal densities
  ``x**(alpha*rho-1)/Gamma(alpha*rho)`` etc., which forces the jump-density
  constants ``c+ = Gamma(alpha+1) sin(pi alpha rho)/pi`` (and symmetrically
  for ``c-``);
* conditioned-stable driver ("lamperti up"): ``c+ = 1`` and the descending
  renewal function normalized to 1 at infinity, with unit killing of the
  descending ladder;
* hypergeometric: both ladder Levy densities carry constant 1 and the
  descending ladder is killed at rate
  ``Gamma(1-vr) Gamma(1-beta+vr) / (vr Gamma(1-beta))``.

The module also hosts the structural identity checks (the ladder-tail
convolution identity, the Laplace transform duality between renewal density
and Laplace exponent, the exponent-vs-Levy-measure consistency, and the
Wiener-Hopf product constancy) used by the verification suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import betainc, gammaln, hyp2f1, loggamma

from .numerics import DEFAULT_QUAD, QuadSpec, quad

__all__ = [
    "StableParams", "LampertiStableChar", "HypergeometricParams",
    "FluctuationModel", "stable_model", "lamperti_up_model",
    "lamperti_char_model", "hypergeometric_model", "check_vigon",
    "check_laplace_duality", "check_kappa_levy_consistency",
    "wiener_hopf_product", "exp_beta_tail", "lamperti_up_exponent",
]


class ParameterError(ValueError):
    """Invalid family parameters."""


@dataclass(frozen=True)
class StableParams:
    """Strictly stable process: index ``alpha``, positivity parameter ``rho``.

    ``c_plus``/``c_minus`` override the jump-density constants; by default
    they are pinned by the ladder normalization above.
    """

    alpha: float
    rho: float
    c_plus: float | None = None
    c_minus: float | None = None

    def __post_init__(self):
        a, r = self.alpha, self.rho
        if not (0.0 < a < 2.0):
            raise ParameterError(f"alpha must lie in (0,2), got {a}")
        if not (0.0 < r < 1.0):
            raise ParameterError(f"rho must lie in (0,1), got {r}")
        if a * r > 1.0 or a * (1.0 - r) > 1.0:
            raise ParameterError(
                "alpha*rho and alpha*(1-rho) must not exceed 1 "
                f"(got {a * r:.4f}, {a * (1 - r):.4f})")

    @property
    def pos_index(self):
        return self.alpha * self.rho

    @property
    def neg_index(self):
        return self.alpha * (1.0 - self.rho)

    def default_c_plus(self):
        return math.gamma(self.alpha + 1.0) * math.sin(math.pi * self.pos_index) / math.pi

    def default_c_minus(self):
        return math.gamma(self.alpha + 1.0) * math.sin(math.pi * self.neg_index) / math.pi


@dataclass(frozen=True)
class LampertiStableChar:
    """Characteristics (varrho, beta, gamma) of a Lamperti-stable Levy measure
    ``c+ e^{beta x}/(e^x-1)^{1+varrho}`` on x>0 and the mirrored ``c-`` part
    on x<0."""

    varrho: float
    beta: float
    gamma: float
    c_plus: float = 1.0
    c_minus: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.varrho < 2.0):
            raise ParameterError(f"varrho must lie in (0,2), got {self.varrho}")
        if self.beta > self.varrho + 1.0 or self.gamma > self.varrho + 1.0:
            raise ParameterError("beta and gamma must not exceed varrho+1")
        if self.c_plus < 0 or self.c_minus < 0 or self.c_plus + self.c_minus <= 0:
            raise ParameterError("need nonnegative c+/c- with c+ + c- > 0")


@dataclass(frozen=True)
class HypergeometricParams:
    """Characteristics (varrho, gamma, beta) of a hypergeometric Levy process
    built from two driftless ladder subordinators with Levy densities
    ``e^{beta x}/(e^x-1)^{1+varrho}`` (descending) and
    ``e^x/(e^x-1)^{1+gamma}`` (ascending)."""

    varrho: float
    gamma: float
    beta: float

    def __post_init__(self):
        if not (0.0 < self.varrho < 1.0):
            raise ParameterError(f"varrho must lie in (0,1), got {self.varrho}")
        if not (0.0 < self.gamma < 1.0):
            raise ParameterError(f"gamma must lie in (0,1), got {self.gamma}")
        if self.beta > 1.0:
            raise ParameterError(f"beta must not exceed 1, got {self.beta}")


@dataclass(frozen=True)
class FluctuationModel:
    """Uniform evaluator bundle for one explicit family.

    All callables are vectorized over numpy arrays.  Tails are one-sided:
    ``levy_tail_plus(x)`` is the mass of jumps above ``x > 0`` and
    ``levy_tail_minus(x)`` the mass of jumps below ``-x``.  The killing rates
    satisfy ``kill_asc * kill_desc == 0``.  The ``*_exponent0`` / ``*_decay``
    fields are quadrature hints: the power behavior of the corresponding
    function at 0+ and (for polynomial tails) its decay rate at infinity.
    """

    family: str
    params: object
    levy_density: Callable
    levy_tail_plus: Callable
    levy_tail_minus: Callable
    ladder_density: Callable
    ladder_tail: Callable
    ladder_hat_density: Callable
    ladder_hat_tail: Callable
    asc_renewal_density: Callable
    desc_renewal_density: Callable
    desc_renewal_fn: Callable
    kappa: Callable
    kappa_hat: Callable
    kill_asc: float
    kill_desc: float
    drift_mode: str
    mu_plus: float
    asc_renewal_exponent0: float
    desc_renewal_exponent0: float
    levy_tail_plus_exponent0: float
    ladder_tail_exponent0: float
    ladder_hat_tail_exponent0: float
    levy_tail_plus_decay: float | None = None
    vigon_tail_decay: float | None = None

    def __post_init__(self):
        if self.kill_asc * self.kill_desc != 0.0:
            raise ParameterError("at most one ladder process may be killed")
        if self.drift_mode not in ("oscillates", "drifts_up", "drifts_down"):
            raise ParameterError(f"unknown drift mode {self.drift_mode!r}")


def _as_pos(x):
    return np.asarray(x, dtype=float)


def exp_beta_tail(z, p, q):
    """``int_z^inf e^{-p s} (1 - e^{-s})^q ds`` for z > 0, p > 0, q > -p...

    Evaluated through the Gauss hypergeometric function after substituting
    ``t = e^{-s}``; vectorized over ``z``.  Requires ``p + q > 0`` wheneve
    ``z`` may approach 0 (integrability at the lower limit is the caller's
    concern, the tail itself converges for every z > 0).
    """
    z = _as_pos(z)
    w = np.exp(-z)
    return np.exp(-p * z) / p * hyp2f1(-q, p, p + 1.0, w)


def _scaled_power(base, expo):
    """base**expo with base clipped away from 0 to dodge 0**negative."""
    return np.where(base > 0, base, 1.0) ** expo


def stable_model(p: StableParams) -> FluctuationModel:
    """Fluctuation bundle of the strictly stable process."""
    al, rho = p.alpha, p.rho
    c = p.pos_index           # ascending ladder index
    a = p.neg_index           # descending ladder index
    cp = p.c_plus if p.c_plus is not None else p.default_c_plus()
    cm = p.c_minus if p.c_minus is not None else p.default_c_minus()

    inv_gamma_c = 1.0 / math.gamma(c)
    inv_gamma_a = 1.0 / math.gamma(a)
    # ladder Levy tails; Gamma(1 - index) diverges as index -> 1 (no jumps)
    tail_H = 0.0 if c >= 1.0 else 1.0 / math.gamma(1.0 - c)
    tail_Hh = 0.0 if a >= 1.0 else 1.0 / math.gamma(1.0 - a)

    def levy_density(x):
        x = _as_pos(x)
        return np.where(x > 0, cp * _scaled_power(np.abs(x), -1.0 - al),
                        cm * _scaled_power(np.abs(x), -1.0 - al))

    def levy_tail_plus(x):
        return cp / al * _as_pos(x) ** -al

    def levy_tail_minus(x):
        return cm / al * _as_pos(x) ** -al

    return FluctuationModel(
        family="stable",
        params=p,
        levy_density=levy_density,
        levy_tail_plus=levy_tail_plus,
        levy_tail_minus=levy_tail_minus,
        ladder_density=lambda x: tail_H * c * _as_pos(x) ** (-1.0 - c),
        ladder_tail=lambda x: tail_H * _as_pos(x) ** -c,
        ladder_hat_density=lambda x: tail_Hh * a * _as_pos(x) ** (-1.0 - a),
        ladder_hat_tail=lambda x: tail_Hh * _as_pos(x) ** -a,
        asc_renewal_density=lambda x: inv_gamma_c * _as_pos(x) ** (c - 1.0),
        desc_renewal_density=lambda x: inv_gamma_a * _as_pos(x) ** (a - 1.0),
        desc_renewal_fn=lambda x: inv_gamma_a / a * _as_pos(x) ** a,
        kappa=lambda b: _as_pos(b) ** c,
        kappa_hat=lambda b: _as_pos(b) ** a,
        kill_asc=0.0,
        kill_desc=0.0,
        drift_mode="oscillates",
        mu_plus=math.inf,
        asc_renewal_exponent0=c - 1.0,
        desc_renewal_exponent0=a - 1.0,
        levy_tail_plus_exponent0=-al,
        ladder_tail_exponent0=-c,
        ladder_hat_tail_exponent0=-a,
        levy_tail_plus_decay=al,
        vigon_tail_decay=1.0 + c,
    )


def lamperti_up_model(alpha: float, rho: float) -> FluctuationModel:
    """Fluctuation bundle of the conditioned-stable driver process.

    This is the Lamperti-stable process with characteristics
    ``(alpha, alpha(1-rho)+1, alpha*rho)``; its positive jump density is
    ``e^{(alpha(1-rho)+1)x} (e^x-1)^{-alpha-1}`` and all ladder quantities
    are in closed form.
    """
    c = alpha * rho
    a = alpha * (1.0 - rho)
    if not (0.0 < c < 1.0 and 0.0 < a < 1.0):
        raise ParameterError(
            "lamperti_up_model needs alpha*rho and alpha*(1-rho) strictly "
            f"inside (0,1), got {c:.4f}, {a:.4f}")

    sin_c = math.sin(math.pi * c)
    sin_a = math.sin(math.pi * a)
    g = math.gamma
    CH = g(c) * g(a + 1.0) / g(alpha + 1.0)            # ladder tail constant
    Cv = sin_c / math.pi * g(alpha + 1.0) / (g(c) * g(a + 1.0))
    mu_plus = math.pi / sin_c * g(c) * g(a + 1.0) / g(alpha + 1.0)
    kap_const = math.pi / sin_c * g(a + 1.0) / g(alpha + 1.0)

    def levy_density(x):
        x = _as_pos(x)
        ax = np.abs(x)
        pos = np.exp(-c * ax) * _scaled_power(-np.expm1(-ax), -1.0 - alpha)
        # negative side through the dual convolution identity (see below)
        return np.where(x > 0, pos, _neg_density(ax))

    def levy_tail_plus(x):
        # int_x^inf e^{(a+1)u}(e^u-1)^{-alpha-1} du, rewritten with decaying
        # exponentials
        return exp_beta_tail(x, c, -alpha - 1.0)

    def ladder_tail(x):
        x = _as_pos(x)
        return CH * np.exp(-c * x) * _scaled_power(-np.expm1(-x), -c)

    def ladder_density(x):
        x = _as_pos(x)
        return CH * c * np.exp(-c * x) * _scaled_power(-np.expm1(-x), -1.0 - c)

    def ladder_hat_density(x):
        x = _as_pos(x)
        return sin_a / math.pi * np.exp(-(1.0 + a) * x) * \
            _scaled_power(-np.expm1(-x), -1.0 - a)

    def ladder_hat_tail(x):
        return sin_a / math.pi * exp_beta_tail(x, 1.0 + a, -1.0 - a)

    def _neg_density(z):
        # pi_X(-z) from the descending-ladder convolution:
        # -d/dz int_0^inf pihat(z+t) barPi_H(t) dt
        z = np.atleast_1d(_as_pos(z))

        def f(t):
            u = z[..., None] + t
            dpih = sin_a / math.pi * (1.0 + a) * \
                np.exp(-(1.0 + a) * u) * _scaled_power(-np.expm1(-u), -2.0 - a)
            return dpih * ladder_tail(t)

        out = quad(f, 0.0, math.inf, DEFAULT_QUAD, left_exponent=-c)
        return out

    def asc_renewal_density(x):
        x = _as_pos(x)
        return Cv * _scaled_power(-np.expm1(-x), c - 1.0)

    def desc_renewal_density(x):
        x = _as_pos(x)
        return a * np.exp(-x) * _scaled_power(-np.expm1(-x), a - 1.0)

    def desc_renewal_fn(x):
        x = _as_pos(x)
        return np.where(x > 0, -np.expm1(-np.maximum(x, 0.0)), 0.0) ** a

    def kappa(b):
        b = _as_pos(b)
        with np.errstate(invalid="ignore"):
            out = kap_const * np.exp(gammaln(b + c) - gammaln(np.where(b > 0, b, 1.0)))
        return np.where(b > 0, out, 0.0)

    def kappa_hat(b):
        b = _as_pos(b)
        return np.exp(gammaln(a + 1.0 + b) - gammaln(a + 1.0) - gammaln(b + 1.0))

    return FluctuationModel(
        family="lamperti_up",
        params=(alpha, rho),
        levy_density=levy_density,
        levy_tail_plus=levy_tail_plus,
        levy_tail_minus=lambda z: quad(
            lambda t: ladder_hat_density(_as_pos(z)[..., None] + t) * ladder_tail(t),
            0.0, math.inf, DEFAULT_QUAD, left_exponent=-c),
        ladder_density=ladder_density,
        ladder_tail=ladder_tail,
        ladder_hat_density=ladder_hat_density,
        ladder_hat_tail=ladder_hat_tail,
        asc_renewal_density=asc_renewal_density,
        desc_renewal_density=desc_renewal_density,
        desc_renewal_fn=desc_renewal_fn,
        kappa=kappa,
        kappa_hat=kappa_hat,
        kill_asc=0.0,
        kill_desc=1.0,
        drift_mode="drifts_up",
        mu_plus=mu_plus,
        asc_renewal_exponent0=c - 1.0,
        desc_renewal_exponent0=a - 1.0,
        levy_tail_plus_exponent0=-alpha,
        ladder_tail_exponent0=-c,
        ladder_hat_tail_exponent0=-a,
        levy_tail_plus_decay=None,
        vigon_tail_decay=None,
    )


def lamperti_char_model(kind: str, alpha: float, rho: float):
    """Lamperti-stable characteristics of the three conditioned stable drivers.

    Returns ``(char, killing_rate)``; the killing rate is nonzero only for
    ``kind='star'`` (the driver of the stable process absorbed at its first
    passage below zero), where it equals ``c_minus / alpha`` for the stable
    normalization in force.
    """
    StableParams(alpha, rho)  # validate
    a = alpha * (1.0 - rho)
    c = alpha * rho
    if kind == "up":
        return LampertiStableChar(alpha, a + 1.0, c), 0.0
    if kind == "down":
        return LampertiStableChar(alpha, a, c + 1.0), 0.0
    if kind == "star":
        cm = StableParams(alpha, rho).default_c_minus()
        return LampertiStableChar(alpha, 1.0, alpha), cm / alpha
    raise ParameterError(f"unknown conditioned driver kind {kind!r}")


def _poch_log(z, n):
    return gammaln(z + n) - gammaln(z)


class _HyperTails:
    """Series evaluators for the hypergeometric Levy measure.

    The positive tail is the friendship convolution of the two ladder Levy
    measures plus the killing term ``khat * barPi_H``; expanding the
    convolution twice binomially and collapsing one index yields

        conv(x) = sum_k  (gamma+1)_k / k!  *  e^{-x (gamma+k)} * I_k / (gamma+k)

    where ``I_k`` has the regularized-Beta closed form evaluated here via
    log-gammas.  The negative tail collapses to genuine Beta factors.
    """

    def __init__(self, vr, ga, be):
        self.vr, self.ga, self.be = vr, ga, be
        self.A = vr + 1.0 - be
        self._kmax = 0
        self._grow(256)

    def _grow(self, kmax):
        if kmax <= self._kmax:
            return
        vr, ga, be = self.vr, self.ga, self.be
        ks = np.arange(kmax, dtype=float)
        A = self.A
        B = A + ga + ks
        # I_k = Gamma(-vr) [G(A)/G(A-vr) - G(B_k)/G(B_k-vr)]
        gm = -math.gamma(1.0 - vr) / vr
        Ik = gm * (np.exp(gammaln(A) - gammaln(A - vr))
                   - np.exp(gammaln(B) - gammaln(B - vr)))
        logc = _poch_log(ga + 1.0, ks) - gammaln(ks + 1.0)
        # positive side: rates gamma + k, weights
        self._pos_rates = ga + ks
        self._pos_tail_w = np.exp(logc) * Ik / (ga + ks)
        self._pos_dens_w = np.exp(logc) * Ik
        # negative side: rates vr + 1 - beta + k, Beta-closed weights
        C = ga + vr + 1.0 - be + ks
        logd = _poch_log(vr + 1.0, ks) - gammaln(ks + 1.0)
        Jk = np.exp(gammaln(C) + gammaln(1.0 - ga) - gammaln(C + 1.0 - ga))
        self._neg_rates = vr + 1.0 - be + ks
        self._neg_tail_w = np.exp(logd) * Jk / ga
        self._neg_dens_w = self._neg_tail_w * self._neg_rates
        self._kmax = kmax

    def _ensure(self, xmin):
        # geometric factor e^{-x k}: crude bound on needed terms
        need = int(min(200_000, max(256, 45.0 / max(xmin, 1e-4) + 64)))
        if need > self._kmax:
            self._grow(need)

    def _sum(self, x, rates, weights):
        x = np.atleast_1d(_as_pos(x))
        self._ensure(float(x.min()))
        out = np.einsum("...k,k->...",
                        np.exp(-x[..., None] * rates[None, :]), weights)
        return out

    def conv_tail(self, x):
        return self._sum(x, self._pos_rates, self._pos_tail_w)

    def conv_density(self, x):
        return self._sum(x, self._pos_rates, self._pos_dens_w)

    def neg_tail(self, x):
        return self._sum(x, self._neg_rates, self._neg_tail_w)

    def neg_density(self, x):
        return self._sum(x, self._neg_rates, self._neg_dens_w)


def hypergeometric_model(p: HypergeometricParams) -> FluctuationModel:
    """Fluctuation bundle of the hypergeometric Levy process."""
    vr, ga, be = p.varrho, p.gamma, p.beta
    g = math.gamma
    oscillating = (be == 1.0)
    q_hat = 0.0 if oscillating else g(1.0 - vr) * g(1.0 - be + vr) / (vr * g(1.0 - be))
    mu_plus = math.pi / (ga * math.sin(math.pi * ga))
    tails = None if oscillating else _HyperTails(vr, ga, be)

    def ladder_density(x):
        x = _as_pos(x)
        return np.exp(-ga * x) * _scaled_power(-np.expm1(-x), -1.0 - ga)

    def ladder_tail(x):
        x = _as_pos(x)
        return np.exp(-ga * x) * _scaled_power(-np.expm1(-x), -ga) / ga

    def ladder_hat_density(x):
        x = _as_pos(x)
        return np.exp(-(1.0 + vr - be) * x) * _scaled_power(-np.expm1(-x), -1.0 - vr)

    def ladder_hat_tail(x):
        return exp_beta_tail(x, 1.0 + vr - be, -1.0 - vr)

    if oscillating:
        Cpos = g(ga + vr) * g(1.0 - vr) / (vr * g(ga + 1.0))
        Cneg = g(ga + vr) * g(1.0 - ga) / (ga * g(vr + 1.0))
        m = ga + vr

        def levy_tail_plus(x):
            x = _as_pos(x)
            return Cpos * np.exp(-ga * x) * _scaled_power(-np.expm1(-x), -m)

        def levy_tail_minus(x):
            x = _as_pos(x)
            return Cneg * np.exp(-vr * x) * _scaled_power(-np.expm1(-x), -m)

        def pos_density(x):
            x = _as_pos(x)
            omx = -np.expm1(-x)
            return Cpos * np.exp(-ga * x) * _scaled_power(omx, -m - 1.0) * \
                (ga * omx + m * np.exp(-x))

        def neg_density(x):
            x = _as_pos(x)
            omx = -np.expm1(-x)
            return Cneg * np.exp(-vr * x) * _scaled_power(omx, -m - 1.0) * \
                (vr * omx + m * np.exp(-x))
    else:
        def levy_tail_plus(x):
            return tails.conv_tail(x) + q_hat * ladder_tail(x)

        def levy_tail_minus(x):
            return tails.neg_tail(x)

        def pos_density(x):
            return tails.conv_density(x) + q_hat * ladder_density(x)

        def neg_density(x):
            return tails.neg_density(x)

    def levy_density(x):
        x = _as_pos(x)
        ax = np.abs(np.where(x != 0, x, 1.0))
        return np.where(x > 0, pos_density(ax), neg_density(ax))

    def asc_renewal_density(x):
        x = _as_pos(x)
        return ga * math.sin(math.pi * ga) / math.pi * \
            _scaled_power(-np.expm1(-x), ga - 1.0)

    def desc_renewal_density(x):
        x = _as_pos(x)
        return vr * math.sin(math.pi * vr) / math.pi * np.exp((be - 1.0) * x) * \
            _scaled_power(-np.expm1(-x), vr - 1.0)

    if oscillating:
        def desc_renewal_fn(x):
            x = np.atleast_1d(_as_pos(x))
            w = -np.expm1(-x)
            out = vr * math.sin(math.pi * vr) / math.pi * \
                w ** vr / vr * hyp2f1(1.0, vr, vr + 1.0, w)
            return out
    else:
        def desc_renewal_fn(x):
            # normalized to V^(x)/V^(inf) = regularized incomplete Beta
            x = _as_pos(x)
            return betainc(vr, 1.0 - be, -np.expm1(-x))

    def kappa(b):
        b = _as_pos(b)
        with np.errstate(invalid="ignore"):
            out = g(1.0 - ga) / ga * np.exp(
                gammaln(b + ga) - gammaln(np.where(b > 0, b, 1.0)))
        return np.where(b > 0, out, 0.0)

    def kappa_hat(b):
        b = _as_pos(b)
        return g(1.0 - vr) / vr * np.exp(
            gammaln(b + 1.0 - be + vr) - gammaln(b + 1.0 - be))

    return FluctuationModel(
        family="hypergeometric",
        params=p,
        levy_density=levy_density,
        levy_tail_plus=levy_tail_plus,
        levy_tail_minus=levy_tail_minus,
        ladder_density=ladder_density,
        ladder_tail=ladder_tail,
        ladder_hat_density=ladder_hat_density,
        ladder_hat_tail=ladder_hat_tail,
        asc_renewal_density=asc_renewal_density,
        desc_renewal_density=desc_renewal_density,
        desc_renewal_fn=desc_renewal_fn,
        kappa=kappa,
        kappa_hat=kappa_hat,
        kill_asc=0.0,
        kill_desc=q_hat,
        drift_mode="oscillates" if oscillating else "drifts_up",
        mu_plus=mu_plus,
        asc_renewal_exponent0=ga - 1.0,
        desc_renewal_exponent0=vr - 1.0,
        levy_tail_plus_exponent0=-(ga + vr),
        ladder_tail_exponent0=-ga,
        ladder_hat_tail_exponent0=-vr,
        levy_tail_plus_decay=None,
        vigon_tail_decay=None,
    )


def check_vigon(m: FluctuationModel, r: float, spec: QuadSpec = DEFAULT_QUAD):
    """Both sides of the ladder-tail convolution identity at height ``r``.

    lhs is the ascending ladder Levy tail; rhs convolves the descending
    renewal density with the positive Levy tail.  The descending renewal
    measure has no atom at 0 for the families implemented here, so no atomic
    correction enters.
    """
    if r <= 0:
        raise ParameterError("r must be positive")
    lhs = float(m.ladder_tail(r))

    def f(l):
        return m.desc_renewal_density(l) * m.levy_tail_plus(l + r)

    rhs = quad(f, 0.0, math.inf, spec,
               left_exponent=m.desc_renewal_exponent0,
               tail_decay=m.vigon_tail_decay)
    return lhs, float(rhs)


def check_laplace_duality(m: FluctuationModel, side: str, beta: float,
                          spec: QuadSpec = DEFAULT_QUAD):
    """``kappa(0, beta) * int_0^inf e^{-beta x} v(x) dx`` (resp. hatted).

    Equals 1 for the pinned normalizations whenever the renewal measure has
    a density (true for all three families).
    """
    if beta <= 0:
        raise ParameterError("beta must be positive")
    if side == "asc":
        dens, expo, kap = m.asc_renewal_density, m.asc_renewal_exponent0, m.kappa
    elif side == "desc":
        dens, expo, kap = m.desc_renewal_density, m.desc_renewal_exponent0, m.kappa_hat
    else:
        raise ParameterError("side must be 'asc' or 'desc'")

    lt = quad(lambda x: np.exp(-beta * x) * dens(x), 0.0, math.inf, spec,
              left_exponent=expo)
    return float(kap(beta)) * float(lt)


def check_kappa_levy_consistency(m: FluctuationModel, side: str, lam: float,
                                 spec: QuadSpec = DEFAULT_QUAD):
    """Laplace exponent vs killing + integrated ladder Levy tail.

    rhs uses the integrated-by-parts form
    ``q + lam * int_0^inf e^{-lam x} barPi(x) dx`` which avoids evaluating
    the ladder Levy density at 0.
    """
    if lam <= 0:
        raise ParameterError("lam must be positive")
    if side == "asc":
        lhs = float(m.kappa(lam))
        tail, expo, kill = m.ladder_tail, m.ladder_tail_exponent0, m.kill_asc
    elif side == "desc":
        lhs = float(m.kappa_hat(lam))
        tail, expo, kill = m.ladder_hat_tail, m.ladder_hat_tail_exponent0, m.kill_desc
    else:
        raise ParameterError("side must be 'asc' or 'desc'")

    integ = quad(lambda x: np.exp(-lam * x) * tail(x), 0.0, math.inf, spec,
                 left_exponent=expo)
    return lhs, kill + lam * float(integ)


def lamperti_up_exponent(lam, alpha: float, rho: float):
    """Characteristic exponent of the conditioned-stable driver on a real
    grid (vectorized), up to the positive constant fixed by the printed
    ladder normalization; the value at 0 is 0."""
    lam = np.asarray(lam, dtype=float)
    c = alpha * rho
    a = alpha * (1.0 - rho)
    il = 1j * lam
    const = math.log(math.pi / math.sin(math.pi * c)) - gammaln(alpha + 1.0)
    out = np.exp(const + loggamma(c - il) - loggamma(-il)
                 + loggamma(a + 1.0 + il) - loggamma(1.0 + il))
    return np.where(lam == 0.0, 0.0, out)


def _gamma_ratio(num, den):
    """exp(loggamma(num) - loggamma(den)) elementwise for complex input."""
    return np.exp(loggamma(num) - loggamma(den))


def _guard_poles(*args):
    for z in args:
        z = complex(z)
        if abs(z.imag) < 1e-8 and z.real <= 1e-8 and \
                abs(z.real - round(z.real)) < 1e-8:
            raise ParameterError(f"Gamma argument {z} is within 1e-8 of a pole")


def wiener_hopf_product(kind: str, params, lam: float):
    """Characteristic exponent vs the product of its two ladder factors.

    Returns ``(full, product)`` where ``full`` is the single Gamma-ratio
    expression and ``product`` multiplies the ascending factor at ``-i lam``
    with the descending factor at ``i lam``.  Their ratio is constant in
    ``lam`` (and equal to 1 for the normalizations used here).
    """
    ilam = 1j * lam
    if kind == "lamperti_up":
        alpha, rho = params
        c = alpha * rho
        a = alpha * (1.0 - rho)
        _guard_poles(c - ilam, a + 1.0 + ilam)
        if lam == 0.0:
            return 0.0 + 0.0j, 0.0 + 0.0j
        full = math.pi / (math.sin(math.pi * c) * math.gamma(alpha + 1.0)) * \
            _gamma_ratio(c - ilam, -ilam) * _gamma_ratio(a + 1.0 + ilam, 1.0 + ilam)
        asc = math.pi / math.sin(math.pi * c) * math.gamma(a + 1.0) / \
            math.gamma(alpha + 1.0) * _gamma_ratio(c - ilam, -ilam)
        desc = _gamma_ratio(a + 1.0 + ilam, 1.0 + ilam) / math.gamma(a + 1.0)
        return complex(full), complex(asc * desc)
    if kind == "hypergeometric":
        p = params if isinstance(params, HypergeometricParams) \
            else HypergeometricParams(*params)
        vr, ga, be = p.varrho, p.gamma, p.beta
        _guard_poles(ga - ilam, ilam + 1.0 - be + vr)
        if lam == 0.0 and be == 1.0:
            return 0.0 + 0.0j, 0.0 + 0.0j
        if lam == 0.0:
            return 0.0 + 0.0j, 0.0 + 0.0j
        full = math.gamma(1.0 - ga) * math.gamma(1.0 - vr) / (vr * ga) * \
            _gamma_ratio(ga - ilam, -ilam) * \
            _gamma_ratio(ilam + 1.0 - be + vr, ilam + 1.0 - be)
        asc = math.gamma(1.0 - ga) / ga * _gamma_ratio(ga - ilam, -ilam)
        desc = math.gamma(1.0 - vr) / vr * \
            _gamma_ratio(ilam + 1.0 - be + vr, ilam + 1.0 - be)
        return complex(full), complex(asc * desc)
    raise ParameterError(f"unknown family kind {kind!r}")
