#!/usr/bin/python
# -*- coding: utf-8 -*-
# pylint: disable=invalid-name, too-many-arguments, too-many-locals
# pylint: disable=too-many-instance-attributes

"""
Fractional powers P_α(T) by quadrature along the imaginary axis. The module
include:

    * :class:`QuadratureSpec`: α, axis j, node count, truncation and side
    * :class:`FracPowerReport`: Result with error estimate and integrand
      diagnostics
    * :func:`frac_power_apply`: P_α(T)v with the right or left S-resolvent
    * :func:`convergence_report`: Decay exponents of the integrand and
      self-convergence deltas
    * :func:`matrix_oracle`: Comparison with the complex adjoint matrix
      power on random quaternion matrices
    * :func:`gauss_legendre_panels`: Composite Gauss-Legendre nodes

The path -jℝ is parametrized by s = -jt, t in ℝ, so s^(α-1) = |t|^(α-1)
(cos(α-1)π/2 ∓ j sin(α-1)π/2) for t ≷ 0 and ds_j is a real multiple of dt.
The substitution |t| = e^u, u in [-U, U], maps both half lines to a finite
interval where the integrand decays like e^(αu) and e^((α-1)u). The cut
tails are added with their power law models, t^(α-1) near zero and t^(α-2)
at infinity. The sign of the measure is fixed once with the scalar case
q = 4, α = 1/2 where the result must be 2.

Right form: (1/2π)∫ s^(α-1) ds_j S_R⁻¹(s, T)Tv, for |t| ≤ 1 evaluated as
s^(α-1)(sS_R⁻¹(s, T)v - v). Left form: (1/2π)∫ S_L⁻¹(s, T) ds_j s^(α-1)Tv.
"""

from __future__ import division
from functools import lru_cache
import logging
from math import exp, pi, sqrt
import warnings

import numpy as np
from scipy import linalg

from ._utils import _Report, _jsonable, loglog_slope, ordered_map
from .assembly import AssembledOperator
from .grid import QField
from .quaternion import E1, SpectralParam, _axis_power, \
    adjoint_to_quaternion, check_axis, complex_adjoint, qmatmul
from .resolvent import Resolvent, _left, _unwrap


log = logging.getLogger(__name__)

PANEL = 8


class QuadratureSpec(_Report):
    """
    Quadrature settings of P_α(T)

    Parameters
    ----------
    alpha : float
        Exponent in (0, 1)
    axis : Quaternion
        Imaginary unit j of the path -jℝ
    n_nodes : int
        Gauss-Legendre nodes on [-U, U], panels of 8, at least 8
    trunc : float
        U, the truncation in u = log|t|
    side : str
        ``right`` (S_R⁻¹ form) or ``left`` (S_L⁻¹ form)
    """

    kwargs = {"alpha": None,
              "axis": E1,
              "n_nodes": 400,
              "trunc": 30.0,
              "side": "right"}
    required = ("alpha", )

    def calculo(self):
        alpha = float(self.kwargs["alpha"])
        if not 0 < alpha < 1:
            raise ValueError("alpha must lie in (0, 1), got %r" % alpha)
        if int(self.kwargs["n_nodes"]) < PANEL:
            raise ValueError("n_nodes must be at least %d" % PANEL)
        if not float(self.kwargs["trunc"]) > 0:
            raise ValueError("trunc must be positive")
        if self.kwargs["side"] not in ("left", "right"):
            raise ValueError("side must be left or right")
        self.alpha = alpha
        self.axis = check_axis(self.kwargs["axis"])
        self.n_nodes = int(self.kwargs["n_nodes"])
        self.trunc = float(self.kwargs["trunc"])
        self.side = self.kwargs["side"]

    def copy(self, **kwargs):
        """New spec with some settings replaced"""
        values = dict(self.kwargs)
        values.update(kwargs)
        return QuadratureSpec(**values)

    def as_dict(self):
        return {"alpha": self.alpha, "axis": list(self.axis),
                "n_nodes": self.n_nodes, "trunc": self.trunc,
                "side": self.side}


def gauss_legendre_panels(n_nodes, trunc):
    """Composite Gauss-Legendre rule on [-trunc, trunc]

    Parameters
    ----------
    n_nodes : int
        Requested nodes, rounded up to a multiple of 8
    trunc : float

    Returns
    -------
    u, w : numpy.ndarray
        Nodes and weights
    """
    panels = -(-int(n_nodes)//PANEL)
    x, w = np.polynomial.legendre.leggauss(PANEL)
    edges = np.linspace(-trunc, trunc, panels+1)
    half = (edges[1:]-edges[:-1])/2
    mid = (edges[1:]+edges[:-1])/2
    u = (mid[:, None] + half[:, None]*x).ravel()
    weights = (half[:, None]*w).ravel()
    return u, weights


def _node_values(resolvent, spec, x, Tx, t):
    """Integrand at +t and -t, t > 0"""
    values = []
    for sign in (1, -1):
        s = SpectralParam.imaginary(-sign*t, spec.axis)
        power = _axis_power(spec.axis*(-sign), t, spec.alpha-1)
        if spec.side == "right":
            if t <= 1:
                inner = _left(s.s, resolvent.SR(s, x)) - x
            else:
                inner = resolvent.SR(s, Tx)
            values.append(_left(power, inner))
        else:
            values.append(resolvent.SL(s, _left(power, Tx)))
    return values


def _sum(rows):
    """Deterministic pairwise sum of a list of equal-length vectors"""
    return np.ascontiguousarray(np.array(rows).T).sum(axis=1)


class _Integral(object):
    """Unsigned quadrature sum of one spec, with integrand diagnostics"""

    def __init__(self, spec, x, Tx, T, opts, threads, weight):
        U, alpha = spec.trunc, spec.alpha
        u, w = gauss_legendre_panels(spec.n_nodes, U)
        t = np.exp(u)

        def node(tk):
            return _node_values(Resolvent(T, opts), spec, x, Tx, tk)

        values = ordered_map(node, list(t) + [exp(U), exp(-U)], threads)
        g_tail, g_zero = values[-2], values[-1]
        values = values[:-2]

        rows = [(wk*tk)*(gp+gm) for wk, tk, (gp, gm) in zip(w, t, values)]
        rows.append(exp(U)/(1-alpha)*(g_tail[0]+g_tail[1]))
        rows.append(exp(-U)/alpha*(g_zero[0]+g_zero[1]))
        self.total = _sum(rows)

        self.t = t
        self.u = u
        plus = np.array([np.linalg.norm(gp) for gp, _ in values])*weight
        minus = np.array([np.linalg.norm(gm) for _, gm in values])*weight
        self.norms = plus + minus
        near = t <= 1
        self.segments = {
            "near_zero": float(np.sum((w*t*self.norms)[near])),
            "tail_positive": float(np.sum((w*t*plus)[~near])),
            "tail_negative": float(np.sum((w*t*minus)[~near]))}


@lru_cache(maxsize=None)
def orientation():
    """Sign of the measure ds_j along s = -jt, from q = 4, α = 1/2 → 2"""
    T = AssembledOperator.from_quaternion_matrix([[[4.0, 0, 0, 0]]])
    x = np.array([1.0, 0, 0, 0])
    spec = QuadratureSpec(alpha=0.5)
    value = _Integral(spec, x, T.dot(x), T, None, 1, 1.0).total[0]/(2*pi)
    ratio = value/2
    if abs(abs(ratio)-1) > 1e-6:
        raise RuntimeError("Orientation calibration failed, q = 4 gives %r"
                           % value)
    log.debug("Quadrature orientation %+d", np.sign(ratio))
    return float(np.sign(ratio))


class FracPowerReport(object):
    """
    Result of :func:`frac_power_apply`

    Attributes
    ----------
    result : QField or numpy.ndarray
        P_α(T)v, same type as v
    error_estimate : float or None
        L² norm of the change when the node count doubles
    segments : dict
        ∫‖integrand‖dt estimates on |t| ≤ 1 (``near_zero``), t > 1
        (``tail_positive``) and t < -1 (``tail_negative``)
    t, integrand_norms : numpy.ndarray
        Quadrature nodes |t| and ‖g(t)‖ + ‖g(-t)‖ there
    spec : QuadratureSpec
    """

    def __init__(self, result, error_estimate, segments, t, norms, spec):
        self.result = result
        self.error_estimate = error_estimate
        self.segments = segments
        self.t = t
        self.integrand_norms = norms
        self.spec = spec

    def as_dict(self):
        return {"spec": self.spec.as_dict(),
                "error_estimate": _jsonable(self.error_estimate),
                "segments": {k: _jsonable(v)
                             for k, v in sorted(self.segments.items())}}


def _weight(v):
    return sqrt(v.grid.h**3) if isinstance(v, QField) else 1.0


def _quadrature(spec, x, Tx, T, opts, threads, weight):
    integral = _Integral(spec, x, Tx, T, opts, threads, weight)
    return orientation()*integral.total/(2*pi), integral


def frac_power_apply(spec, v, T, opts=None, report=None, threads=None,
                     estimate_error=True):
    """Fractional power P_α(T)v

    Parameters
    ----------
    spec : QuadratureSpec
    v : QField or array_like, shape (n, 4)
        Field or quaternion vector in the domain of T
    T : AssembledOperator
        Closed discrete T, or the operator of a quaternion matrix
    opts : SolveOptions, optional
    report : ConditionReport, optional
        Warn when its verdict fails
    threads : int, optional
        Workers over quadrature nodes, summation order fixed
    estimate_error : bool
        Repeat with twice the nodes for the error estimate

    Returns
    -------
    report : FracPowerReport

    Raises
    ------
    SolverError
        Propagated from the node solves

    Examples
    --------
    >>> T = AssembledOperator.from_quaternion_matrix([[[1., 0, 0, 0]]])
    >>> r = frac_power_apply(QuadratureSpec(alpha=0.5), [[2., 0, 0, 0]], T)
    >>> round(r.result[0, 0], 8)
    2.0
    """
    if report is not None and not report.verdict().passed:
        warnings.warn("Condition verdict fails, P_alpha(T) may not exist")
    x, wrap = _unwrap(v)
    Tx = T.dot(x)
    weight = _weight(v)
    total, integral = _quadrature(spec, x, Tx, T, opts, threads, weight)

    error = None
    if estimate_error:
        fine, _ = _quadrature(spec.copy(n_nodes=2*spec.n_nodes), x, Tx, T,
                              opts, threads, weight)
        error = float(np.linalg.norm(fine-total)*weight)
    log.info("P_alpha(T)v, alpha=%g, %d nodes, side %s, error estimate %s",
             spec.alpha, spec.n_nodes, spec.side, error)
    return FracPowerReport(wrap(total), error, integral.segments, integral.t,
                           integral.norms, spec)


def convergence_report(spec, v, T, opts=None, threads=None):
    """Absolute convergence diagnostics of the quadrature

    Returns
    -------
    table : dict
        ``tail_slope`` and ``near_zero_slope``: log-log slopes of the
        sampled integrand norm for u > 0.6U and u < -0.6U, models α - 2 and
        α - 1; ``tail_ok``, ``near_zero_ok``: slopes within 0.1 of the
        models on the safe side; ``delta_doubling``: change when the node
        count doubles; ``delta_trunc``: change when U shrinks to 2U/3;
        ``abs_integral`` and ``abs_integral_delta``: ∫‖integrand‖ and its
        change between the two truncations
    """
    x, _ = _unwrap(v)
    Tx = T.dot(x)
    weight = _weight(v)
    base, integral = _quadrature(spec, x, Tx, T, opts, threads, weight)
    fine, _ = _quadrature(spec.copy(n_nodes=2*spec.n_nodes), x, Tx, T, opts,
                          threads, weight)
    short, short_int = _quadrature(spec.copy(trunc=2*spec.trunc/3), x, Tx, T,
                                   opts, threads, weight)

    U = spec.trunc
    tail = integral.u > 0.6*U
    zero = integral.u < -0.6*U
    tail_slope = loglog_slope(integral.t[tail], integral.norms[tail])
    zero_slope = loglog_slope(integral.t[zero], integral.norms[zero])
    abs_long = sum(integral.segments.values())
    abs_short = sum(short_int.segments.values())
    return {"alpha": spec.alpha,
            "tail_slope": tail_slope,
            "near_zero_slope": zero_slope,
            "tail_ok": bool(tail_slope <= spec.alpha-2+0.1),
            "near_zero_ok": bool(zero_slope >= spec.alpha-1-0.1),
            "delta_doubling": float(np.linalg.norm(fine-base)*weight),
            "delta_trunc": float(np.linalg.norm(short-base)*weight),
            "abs_integral": abs_long,
            "abs_integral_delta": abs(abs_long-abs_short)}


def random_test_matrix(n, seed):
    """D + (0.1/n)R, D = diag(a_k + b_k e1), a_k in [1, 2], b_k in [-1, 1]

    The complex adjoint of D has the eigenvalue pairs a_k ± i b_k in the
    open right half plane and the small perturbation keeps them there.
    """
    rng = np.random.default_rng(seed)
    M = (0.1/n)*rng.standard_normal((n, n, 4))
    a = rng.uniform(1, 2, n)
    b = rng.uniform(-1, 1, n)
    M[np.arange(n), np.arange(n), 0] += a
    M[np.arange(n), np.arange(n), 1] += b
    return M, rng.standard_normal((n, 4))


def adjoint_power(M, alpha):
    """Principal power of a quaternion matrix through its complex adjoint

    Returns
    -------
    power : numpy.ndarray, shape (n, n, 4)
    cond : float
        Condition number of the eigenvector matrix

    Raises
    ------
    ValueError
        If an eigenvalue lies on (-∞, 0]
    """
    C = complex_adjoint(M)
    lam, V = linalg.eig(C)
    if np.any((np.abs(lam.imag) < 1e-14*np.abs(lam)) & (lam.real <= 0)):
        raise ValueError("Eigenvalue on the branch cut (-inf, 0]")
    cond = float(np.linalg.cond(V))
    if cond > 1e8:
        warnings.warn("Ill-conditioned eigenbasis, cond = %.3e" % cond)
    F = linalg.solve(V.T, (V*lam**alpha).T).T
    return adjoint_to_quaternion(F, tol=1e-8), cond


class OracleReport(object):
    """Comparison of the quadrature with the complex adjoint power"""

    def __init__(self, **kwargs):
        self.__dict__.update(kwargs)

    def as_dict(self):
        return {"n": self.n, "seed": self.seed, "alpha": self.alpha,
                "side": self.side, "n_nodes": self.n_nodes,
                "rel_diff": _jsonable(self.rel_diff),
                "cond": _jsonable(self.cond),
                "composition_error": _jsonable(self.composition_error)}


def matrix_oracle(n, seed, alpha, n_nodes=800, trunc=30.0, side="right",
                  axis=E1, matrix=None, threads=None, composition=True):
    """Quadrature vs complex adjoint eigendecomposition on a dense matrix

    Parameters
    ----------
    n : int
        Matrix size
    seed : int
        Seed of the matrix and the vector, see :func:`random_test_matrix`
    alpha : float
    n_nodes, trunc, side, axis :
        Quadrature settings
    matrix : array_like, shape (n, n, 4), optional
        Explicit matrix instead of the random one
    composition : bool
        Also compute ‖P_½(P_½v) - Tv‖/‖Tv‖ with the quadrature

    Returns
    -------
    report : OracleReport
        ``rel_diff`` max relative difference, ``cond`` of the eigenbasis,
        ``composition_error``, ``quadrature`` and ``oracle`` vectors
    """
    if matrix is None:
        M, v = random_test_matrix(n, seed)
    else:
        M = np.asarray(matrix, dtype=float)
        n = M.shape[0]
        v = np.random.default_rng(seed).standard_normal((n, 4))
    T = AssembledOperator.from_quaternion_matrix(M)
    spec = QuadratureSpec(alpha=alpha, axis=axis, n_nodes=n_nodes,
                          trunc=trunc, side=side)
    quad = frac_power_apply(spec, v, T, threads=threads,
                            estimate_error=False).result

    P, cond = adjoint_power(M, alpha)
    exact = qmatmul(P, v[:, None, :])[:, 0, :]
    rel = float(np.linalg.norm(quad-exact)/np.linalg.norm(exact))

    comp = None
    if composition:
        half = spec.copy(alpha=0.5)
        w = frac_power_apply(half, v, T, threads=threads,
                             estimate_error=False).result
        w = frac_power_apply(half, w, T, threads=threads,
                             estimate_error=False).result
        Tv = T.apply(v)
        comp = float(np.linalg.norm(w-Tv)/np.linalg.norm(Tv))
    log.info("Matrix oracle n=%d seed=%d alpha=%g: rel diff %.3e", n, seed,
             alpha, rel)
    return OracleReport(n=n, seed=seed, alpha=alpha, side=side,
                        n_nodes=n_nodes, rel_diff=rel, cond=cond,
                        composition_error=comp, quadrature=quad,
                        oracle=exact)
