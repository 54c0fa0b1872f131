"""Quadrature and series engines shared by every evaluator in the package.

The central tool is a batched adaptive Gauss-Kronrod integrator: integrands
receive a numpy array of abscissae and may return extra *leading* batch axes,
in which case a whole family of integrals is computed in one adaptive pass
(all batch elements share the subdivision, refined until every element meets
tolerance).  This is what makes the deeply nested integrals of the passage
laws affordable in pure numpy.

Endpoint trouble is handled by explicit substitutions rather than
extrapolation:

* an algebraic endpoint singularity ``(x-a)**p`` (``p > -1``) is removed by
  ``x = a + (b-a) q**k`` with ``k = 2/(1+p)``, which makes the transformed
  integrand locally linear at the endpoint;
* a semi-infinite tail is mapped through ``x = a + 1/s``; when the integrand
  decays like ``x**-d`` the additional substitution ``s = q**(2/(d-1))``
  removes the induced algebraic endpoint;
* doubly-infinite ranges are split at zero, finite ranges with two bad
  endpoints at their midpoint.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy.special import gammaln, loggamma


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to converge.

    Carries the last estimate and its error bound so callers can decide
    whether the partial answer is still useful.
    """

    def __init__(self, message, estimate=None, error_bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class SeriesError(RuntimeError):
    """Double-series summation failed; ``reason`` is 'divergence' or
    'nonconvergence'."""

    def __init__(self, message, reason, partial=None):
        super().__init__(message)
        self.reason = reason
        self.partial = partial


@dataclass(frozen=True)
class QuadSpec:
    """Tolerances and budgets for adaptive quadrature.

    ``singular_endpoints`` flags algebraic endpoint singularities when the
    caller does not pass an explicit exponent; the flagged end is then
    substituted with a generic square-root-strength exponent.  ``deadline``
    (seconds, ``time.monotonic`` clock) cooperatively cancels long runs.
    ``eval_noise`` declares the relative evaluation noise of integrands;
    convergence is accepted once the remaining error estimate is dominated by
    that noise level (times the L1 mass), which keeps the engine from
    grinding against float cancellation inside the integrand.
    """

    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_depth: int = 50
    singular_endpoints: frozenset = field(default_factory=frozenset)
    max_intervals: int = 4096
    deadline: float | None = None
    eval_noise: float = 1e-14

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        bad = set(self.singular_endpoints) - {"left", "right"}
        if bad:
            raise ValueError(f"unknown endpoint flags: {bad}")


DEFAULT_QUAD = QuadSpec()


@dataclass(frozen=True)
class SeriesSpec:
    tail_tol: float = 1e-10
    max_terms_per_axis: int = 200_000

    def __post_init__(self):
        if not self.tail_tol > 0:
            raise ValueError("tail_tol must be positive")
        if self.max_terms_per_axis < 1:
            raise ValueError("max_terms_per_axis must be >= 1")


DEFAULT_SERIES = SeriesSpec()


def log_gamma(x):
    """ln Gamma(x) for real x > 0 (vectorized)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise ValueError("log_gamma requires x > 0")
    out = gammaln(x)
    return float(out) if out.ndim == 0 else out


def log_gamma_complex(z):
    """Principal branch of ln Gamma on the complex plane (vectorized)."""
    return loggamma(np.asarray(z, dtype=complex))


# 21-point Kronrod / 10-point Gauss rule on [-1, 1] (QUADPACK dqk21 constants).
_XGK = np.array([
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821,
])
_WG = np.array([
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338,
])

_KNODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
_GW = np.zeros(21)
_GW[1:20:2] = np.concatenate([_WG, _WG[::-1]])

_EPS = np.finfo(float).eps


def _gk21(f, q0, q1):
    """Apply the GK21 rule to a batch of subintervals of [0, 1].

    ``q0``/``q1`` are 1-d arrays of interval endpoints; ``f`` maps an array
    of nodes to values with optional leading batch axes.  Returns Kronrod
    estimates and QUADPACK-scaled error bounds, both with a trailing axis
    enumerating the subintervals.
    """
    mid = 0.5 * (q0 + q1)
    half = 0.5 * (q1 - q0)
    nodes = (mid[:, None] + half[:, None] * _KNODES[None, :]).reshape(-1)
    vals = np.asarray(f(nodes), dtype=float)
    vals = vals.reshape(vals.shape[:-1] + (len(q0), 21))
    ik = (vals * _KW).sum(-1) * half
    ig = (vals * _GW).sum(-1) * half
    resabs = (np.abs(vals) * _KW).sum(-1) * half
    mean = ik / np.where(half > 0, 2.0 * half, 1.0)
    resasc = (np.abs(vals - mean[..., None]) * _KW).sum(-1) * half
    raw = np.abs(ik - ig)
    with np.errstate(divide="ignore", invalid="ignore"):
        shrink = np.minimum(1.0, (200.0 * raw / np.where(resasc > 0, resasc, 1.0)) ** 1.5)
    err = np.where(resasc > 0, resasc * shrink, raw)
    err = np.maximum(err, 50.0 * _EPS * resabs)
    err = np.where(np.isfinite(ik), err, np.inf)
    return ik, err, resabs


def _sub_power(p):
    """Substitution strength for an algebraic endpoint exponent p > -1."""
    if p is None:
        return 1.0
    if p <= -1.0:
        raise ValueError(f"endpoint exponent must exceed -1, got {p}")
    k = 2.0 / (1.0 + p)
    return float(min(max(k, 1.0), 60.0))


def _piece_affine(a, width, kappa):
    """Map q in (0,1) to a + width*q**kappa (singular end at q=0)."""
    if kappa == 1.0:
        return (lambda q: a + width * q, lambda q: np.full_like(q, width))
    return (
        lambda q: a + width * q ** kappa,
        lambda q: width * kappa * q ** (kappa - 1.0),
    )


def _piece_tail(a, scale, kappa):
    """Map q in (0,1) to a + scale/q**kappa ... i.e. x -> infinity as q -> 0."""

    def xmap(q):
        return a + scale / q ** kappa

    def jac(q):
        return scale * kappa / q ** (kappa + 1.0)

    return xmap, jac


def _build_pieces(a, b, left_exponent, right_exponent, tail_decay, flags):
    """Decompose (a, b) into substituted unit-interval pieces."""
    if left_exponent is None and "left" in flags:
        left_exponent = -0.5
    if right_exponent is None and "right" in flags:
        right_exponent = -0.5

    pieces = []
    a_inf = np.isinf(a)
    b_inf = np.isinf(b)
    if a_inf and b_inf:
        raise ValueError("doubly infinite ranges must be split by the caller")

    if not a_inf and not b_inf:
        if right_exponent is None and left_exponent is None:
            pieces.append(_piece_affine(a, b - a, 1.0))
        elif right_exponent is None:
            pieces.append(_piece_affine(a, b - a, _sub_power(left_exponent)))
        elif left_exponent is None:
            xm, jc = _piece_affine(0.0, b - a, _sub_power(right_exponent))
            pieces.append((lambda q, xm=xm: b - xm(q), jc))
        else:
            half = 0.5 * (b - a)
            pieces.append(_piece_affine(a, half, _sub_power(left_exponent)))
            xm, jc = _piece_affine(0.0, half, _sub_power(right_exponent))
            pieces.append((lambda q, xm=xm: b - xm(q), jc))
        return pieces

    if b_inf:
        scale = 1.0
        pieces.append(_piece_affine(a, scale, _sub_power(left_exponent)))
        if tail_decay is not None:
            if tail_decay <= 1.0:
                raise ValueError("tail_decay must exceed 1 for integrability")
            kt = _sub_power(tail_decay - 2.0)
        else:
            kt = 1.0
        pieces.append(_piece_tail(a, scale, kt))
        return pieces

    # a = -inf, b finite: reflect.
    reflected = _build_pieces(-b, math.inf, right_exponent, None, tail_decay, flags)
    return [
        (lambda q, xm=xm: -xm(q), jc) for xm, jc in reflected
    ]


def quad(f, a, b, spec: QuadSpec = DEFAULT_QUAD, *,
         left_exponent=None, right_exponent=None, tail_decay=None):
    """Integrate ``f`` over (a, b) adaptively.

    ``f`` must accept a 1-d numpy array of abscissae and return an array
    whose *last* axis matches it; leading axes are treated as a batch and a
    batch of integrals is returned.  Infinite endpoints are allowed.

    ``left_exponent`` / ``right_exponent`` declare algebraic endpoint
    behavior ``(x-a)**p`` resp. ``(b-x)**p`` and trigger the smoothing
    substitutions; ``tail_decay`` declares polynomial decay ``|x|**-d`` at an
    infinite endpoint.  Raises :class:`QuadratureError` (with the last
    estimate and error bound attached) if the interval budget or bisection
    depth is exhausted before the tolerances are met.
    """
    if a == b:
        return 0.0
    if b < a:
        out = quad(f, b, a, spec, left_exponent=right_exponent,
                   right_exponent=left_exponent, tail_decay=tail_decay)
        return -out
    if np.isinf(a) and np.isinf(b):
        lo = quad(lambda x: f(x), a, 0.0, spec, left_exponent=None,
                  right_exponent=right_exponent, tail_decay=tail_decay)
        hi = quad(f, 0.0, b, spec, left_exponent=left_exponent,
                  right_exponent=None, tail_decay=tail_decay)
        return lo + hi

    pieces = _build_pieces(float(a), float(b), left_exponent, right_exponent,
                           tail_decay, spec.singular_endpoints)

    def piece_eval(idx, q0, q1):
        xmap, jac = pieces[idx]

        def g(q):
            return f(xmap(q)) * jac(q)

        return _gk21(g, q0, q1)

    segs = []      # (piece_idx, q0, q1, depth)
    vals = []      # integral estimate per segment (batch-shaped)
    errs = []
    l1s = []       # integral of |f| per segment (noise-floor bookkeeping)
    prios = []     # worst error-to-tolerance ratio over the batch

    def priority(e, tol):
        r = np.where(np.isfinite(e), e, np.inf) / tol
        return float(np.max(r))

    total = err = floor = None
    for idx in range(len(pieces)):
        iv, ev, av = piece_eval(idx, np.array([0.0]), np.array([1.0]))
        segs.append((idx, 0.0, 1.0, 0))
        vals.append(iv[..., 0])
        errs.append(ev[..., 0])
        l1s.append(av[..., 0])
        prios.append(0.0)

    loops = 0
    while True:
        # running sums maintained incrementally; refreshed periodically to
        # shed accumulated float drift
        if loops % 64 == 0 or total is None:
            total = np.sum(np.stack(vals, -1), -1)
            err = np.sum(np.stack(errs, -1), -1)
            floor = spec.eval_noise * np.sum(np.stack(l1s, -1), -1)
        tol = np.maximum.reduce([np.broadcast_to(spec.abs_tol, total.shape),
                                 spec.rel_tol * np.abs(total), 2.0 * floor])
        if np.all(err <= tol):
            return total if total.ndim else float(total)
        if spec.deadline is not None and time.monotonic() > spec.deadline:
            raise QuadratureError("quadrature deadline exceeded",
                                  estimate=total, error_bound=err)
        # refinement chases the segment whose error is worst relative to the
        # per-batch-element tolerance
        if loops % 64 == 0:
            for i in range(len(segs)):
                prios[i] = priority(errs[i], tol)
        worst = int(np.argmax(prios))
        idx, q0, q1, depth = segs[worst]
        if depth >= spec.max_depth or len(segs) >= spec.max_intervals:
            raise QuadratureError(
                f"quadrature did not converge (depth={depth}, "
                f"intervals={len(segs)})", estimate=total, error_bound=err)
        qm = 0.5 * (q0 + q1)
        iv, ev, av = piece_eval(idx, np.array([q0, qm]), np.array([qm, q1]))
        total = total - vals[worst] + iv[..., 0] + iv[..., 1]
        err = err - errs[worst] + ev[..., 0] + ev[..., 1]
        floor = floor + spec.eval_noise * (av[..., 0] + av[..., 1] - l1s[worst])
        segs[worst] = (idx, q0, qm, depth + 1)
        vals[worst] = iv[..., 0]
        errs[worst] = ev[..., 0]
        l1s[worst] = av[..., 0]
        prios[worst] = priority(ev[..., 0], tol)
        segs.append((idx, qm, q1, depth + 1))
        vals.append(iv[..., 1])
        errs.append(ev[..., 1])
        l1s.append(av[..., 1])
        prios.append(priority(ev[..., 1], tol))
        loops += 1


_LEVEL_SHRINK = 10.0 ** -0.7


def quad_nd(f, box, spec: QuadSpec = DEFAULT_QUAD, *,
            exponents=None, tail_decays=None):
    """Iterated quadrature of ``f`` over a rectangular box (2 to 4 axes).

    ``f`` receives one broadcast-compatible array per axis and must evaluate
    elementwise.  ``exponents`` is an optional per-axis list of
    ``(left, right)`` endpoint exponents, ``tail_decays`` a per-axis list of
    polynomial decay rates for infinite ends.  Inner levels run at tightened
    tolerances; the composed accuracy degrades roughly linearly with the
    number of axes, so callers wanting 1e-6 end-to-end should request 1e-7.
    """
    box = list(box)
    ndim = len(box)
    if ndim < 1 or ndim > 4:
        raise ValueError("quad_nd supports 1 to 4 axes")
    exponents = list(exponents) if exponents is not None else [None] * ndim
    tail_decays = list(tail_decays) if tail_decays is not None else [None] * ndim

    def level(k, fixed):
        a, b = box[k]
        exp = exponents[k] or (None, None)
        lspec = replace(spec,
                        abs_tol=spec.abs_tol * _LEVEL_SHRINK ** k,
                        rel_tol=spec.rel_tol * _LEVEL_SHRINK ** k)

        def integrand(t):
            if fixed:
                shape = fixed[0].shape
                ef = [np.broadcast_to(c[..., None], shape + t.shape) for c in fixed]
                tt = np.broadcast_to(t, shape + t.shape)
            else:
                ef, tt = [], t
            if k == ndim - 1:
                return np.asarray(f(*ef, tt), dtype=float)
            return level(k + 1, ef + [tt])

        return quad(integrand, a, b, lspec, left_exponent=exp[0],
                    right_exponent=exp[1], tail_decay=tail_decays[k])

    out = level(0, [])
    return float(out) if np.ndim(out) == 0 else out


def series2d(term, spec: SeriesSpec = DEFAULT_SERIES):
    """Sum ``sum_{n,k>=0} term(n, k)`` for eventually positive terms.

    ``term`` must be vectorized over broadcast integer arrays.  Rows (fixed
    ``n``) are summed with a geometric tail estimate from observed
    successive-term ratios, and the same estimate is applied across row sums.
    A persistent ratio >= 1 raises ``SeriesError('divergence')``; exceeding
    ``max_terms_per_axis`` raises ``SeriesError('nonconvergence')``.  The
    tail estimate is extrapolated from finitely many ratios, so it is an
    estimate, not a bound; the engine stops only when it is below
    ``tail_tol / 2`` with a safety factor.
    """
    kblock = 128
    nblock = 256
    max_terms = spec.max_terms_per_axis
    tol = spec.tail_tol

    def row_sums(n_lo, n_hi):
        """Vectorized sums over k for rows n_lo..n_hi-1."""
        ns = np.arange(n_lo, n_hi)[:, None]
        total = np.zeros(n_hi - n_lo)
        k0 = 0
        last_block = None
        while k0 < max_terms:
            ks = np.arange(k0, min(k0 + kblock, max_terms))[None, :]
            block = np.asarray(term(ns, ks), dtype=float)
            bs = block.sum(1)
            total += bs
            tail_small = True
            if block.shape[1] >= 2:
                lastcol = np.abs(block[:, -1])
                prevcol = np.abs(block[:, -2])
                with np.errstate(divide="ignore", invalid="ignore"):
                    ratio = np.where(prevcol > 0, lastcol / prevcol, 0.0)
                if np.any(ratio >= 1.0) and np.any(lastcol > tol):
                    if k0 + kblock >= 4 * kblock:
                        raise SeriesError("terms not decaying along k",
                                          "divergence", partial=total.sum())
                    tail_small = False
                else:
                    tail_est = np.where(ratio < 1.0,
                                        lastcol * ratio / np.maximum(1.0 - ratio, 1e-12),
                                        np.inf)
                    tail_small = bool(np.all(tail_est <= tol / 16.0))
            if tail_small and np.all(np.abs(bs) <= tol / 16.0) and k0 > 0:
                return total
            if tail_small and block.shape[1] >= 2 and np.all(np.abs(block[:, -1]) <= tol / 16.0):
                return total
            k0 += kblock
            last_block = block
        raise SeriesError("k axis exceeded max_terms_per_axis",
                          "nonconvergence", partial=total.sum())

    total = 0.0
    rows_done = 0
    recent = []
    zero_rows = 0
    while rows_done < max_terms:
        hi = min(rows_done + nblock, max_terms)
        rs = row_sums(rows_done, hi)
        total += rs.sum()
        for v in rs:
            recent.append(abs(v))
            if len(recent) > 8:
                recent.pop(0)
        rows_done = hi
        nz = [v for v in recent if v > 0]
        if not nz:
            zero_rows += 1
            if zero_rows >= 2:
                return total
            continue
        zero_rows = 0
        if len(recent) >= 8:
            ratios = [recent[i + 1] / recent[i] for i in range(len(recent) - 1)
                      if recent[i] > 0]
            if ratios:
                r = max(ratios)
                if r >= 1.0 and min(ratios) >= 1.0 and recent[-1] > tol:
                    raise SeriesError("row sums not decaying along n",
                                      "divergence", partial=total)
                if r < 1.0:
                    tail_est = recent[-1] * r / (1.0 - r)
                    if tail_est <= tol / 2.0 and recent[-1] <= tol / 2.0:
                        return total
    raise SeriesError("n axis exceeded max_terms_per_axis",
                      "nonconvergence", partial=total)
