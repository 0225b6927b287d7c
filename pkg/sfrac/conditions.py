#!/usr/bin/python
# -*- coding: utf-8 -*-
# pylint: disable=invalid-name, too-many-instance-attributes

"""
Constants and verdicts of the solvability conditions. The module include:

    * :class:`ConditionReport`: Every constant of the coercivity hypotheses
      with the bounded, unbounded and compatibility verdicts
    * :func:`compute_constants`: Build a report from coefficients and grid
    * :func:`check_bounded`: C_T - C_T'C_P - K(1 + C_P²) > 0
    * :func:`check_unbounded`: C_T - K₃M > 0
    * :func:`check_compatibility`: a_ℓ = μ and a = μb on ∂Ω, Robin-type rows
      equal μ times the physical rows
    * :func:`gagliardo_nirenberg_constant`: K_n = (2n - 2)/(n - 2)
    * :func:`continuity_constant`: Bound of |b_s(u, v)| in H¹
    * :func:`coercivity_constant`: Lower bound of Re b_s(u, u) in H¹
    * :func:`theta_formula`: Θ = 2max(1, 1/√C)

The Poincaré-Wirtinger constant is the convex domain bound diam(Ω)/π. The
trace constant has no closed form, it is given by the user or estimated as
max(1, (|∂Ω|/|Ω|)^½(1 + diam Ω)) and flagged ``heuristic``.
"""

from __future__ import division
import logging
from math import sqrt
import warnings

import numpy as np

from ._utils import Verdict, _Report, _jsonable, check_finite
from .assembly import _robin_type_rows, physical_robin_rows
from .grid import discrete_Lp_norm, poincare_constant


log = logging.getLogger(__name__)

ROW_RTOL = 1e-13
COMPAT_TOL = 1e-12


def gagliardo_nirenberg_constant(n=3):
    """K_n = (2n - 2)/(n - 2), the constant of the L^{2n/(n-2)} embedding

    Examples
    --------
    >>> gagliardo_nirenberg_constant(3)
    4.0
    """
    if n < 3:
        raise ValueError("K_n needs dimension n >= 3")
    return (2.*n-2)/(n-2)


def heuristic_trace_constant(grid):
    """max(1, (|∂Ω|/|Ω|)^½(1 + diam Ω)), no rigorous bound"""
    return max(1.0, sqrt(grid.surface_area/grid.volume)*(1+grid.diameter))


class ConditionReport(_Report):
    """
    Constants of the solvability conditions

    Parameters
    ----------
    coeffs : CoefficientSet
        Coefficients a_ℓ, gradients and boundary data
    grid : Grid, optional
        Grid, by default the grid of the coefficients
    c_trace : float, optional
        Trace constant C_∂Ω. When missing the heuristic estimate is used and
        ``C_dOmega_provenance`` is ``heuristic``

    Attributes
    ----------
    C_T : float
        min over ℓ and nodes of a_ℓ²
    C_T_prime : float
        Σ_{i,ℓ} max over nodes of |a_ℓ∂_ℓa_i|
    K_aOmega : float
        C_∂Ω²·sup|a| on the boundary
    C_P, C_dOmega : float
        Poincaré-Wirtinger and trace constants
    M : float
        Σ_{i,j} ‖a_i∂_ia_j‖ in L³
    K3 : float
        4, the n = 3 value of K_n
    kappa_Omega : float or None
        C_T - C_T'C_P - K(1 + C_P²) when positive
    C_bounded, C_unbounded : float or None
        Coercivity ratios of the bounded and unbounded theorems when their
        conditions hold
    C_coercivity : float or None
        The ratio matching the boundary kind of the grid
    verdict_bounded, verdict_unbounded : Verdict
    compat_mu : float or None
    verdict_compat : Verdict or None
        Only when b_phys and mu are present
    """

    kwargs = {"coeffs": None,
              "grid": None,
              "c_trace": None}
    required = ("coeffs", )

    def calculo(self):
        coeffs = self.kwargs["coeffs"]
        grid = self.kwargs["grid"] or coeffs.grid
        c_trace = self.kwargs["c_trace"]
        self.coeffs = coeffs
        self.grid = grid

        a = check_finite(coeffs.a, "coefficients a_l")
        prod = check_finite(coeffs.products(), "products a_i d_i a_j")
        self.C_T = float(np.min(a**2))
        self.C_T_prime = float(np.sum(np.max(np.abs(prod), axis=2)))
        self.M = float(sum(discrete_Lp_norm(prod[i][j], 3, grid)
                           for i in range(3) for j in range(3)))
        self.K3 = gagliardo_nirenberg_constant(3)
        self.C_P = poincare_constant(grid)

        if c_trace is None:
            self.C_dOmega = heuristic_trace_constant(grid)
            self.C_dOmega_provenance = "heuristic"
        else:
            self.C_dOmega = float(c_trace)
            self.C_dOmega_provenance = "user"
        boundary = grid.boundary_mask
        self.sup_a_robin = float(np.max(np.abs(coeffs.a_robin[boundary])))
        self.K_aOmega = self.C_dOmega**2*self.sup_a_robin
        if self.K_aOmega > 0 and self.C_dOmega_provenance == "heuristic":
            warnings.warn("Bounded verdict rests on the heuristic trace "
                          "constant %g" % self.C_dOmega)

        self.verdict_bounded = check_bounded(self)
        self.verdict_unbounded = check_unbounded(self)
        self.kappa_Omega = self.verdict_bounded.margin \
            if self.verdict_bounded.passed else None
        self.C_bounded = self.verdict_bounded.constant
        self.C_unbounded = self.verdict_unbounded.constant
        if grid.boundary_kind == "robin":
            self.C_coercivity = self.C_bounded
        else:
            self.C_coercivity = self.C_unbounded

        if coeffs.b_phys is not None and coeffs.mu is not None:
            self.compat_mu = coeffs.mu
            self.verdict_compat = check_compatibility(coeffs, grid)
        else:
            self.compat_mu = None
            self.verdict_compat = None
        log.debug("Constants C_T=%g C_T'=%g M=%g K=%g", self.C_T,
                  self.C_T_prime, self.M, self.K_aOmega)

    def verdict(self):
        """Verdict of the problem matching the grid boundary kind"""
        if self.grid.boundary_kind == "robin":
            return self.verdict_bounded
        return self.verdict_unbounded

    def as_dict(self):
        """JSON-ready document with every constant and verdict"""
        doc = {"boundary_kind": self.grid.boundary_kind,
               "C_dOmega_provenance": self.C_dOmega_provenance,
               "verdict_bounded": self.verdict_bounded.as_dict(),
               "verdict_unbounded": self.verdict_unbounded.as_dict(),
               "verdict_compat": self.verdict_compat.as_dict()
               if self.verdict_compat is not None else None}
        for key in ("C_T", "C_T_prime", "K_aOmega", "C_P", "C_dOmega", "M",
                    "K3", "kappa_Omega", "C_bounded", "C_unbounded",
                    "C_coercivity", "compat_mu", "sup_a_robin"):
            doc[key] = _jsonable(getattr(self, key))
        return doc


def compute_constants(coeffs, grid=None, c_trace=None):
    """Build the :class:`ConditionReport` of a coefficient set

    Raises
    ------
    ValueError
        If a coefficient or gradient value is not finite

    Examples
    --------
    >>> from sfrac.grid import Grid, CoefficientSet
    >>> r = compute_constants(CoefficientSet.constant(Grid.unit_cube(4)))
    >>> r.C_T, r.C_T_prime, r.M
    (1.0, 0.0, 0.0)
    """
    return ConditionReport(coeffs=coeffs, grid=grid, c_trace=c_trace)


def check_bounded(report):
    """Bounded Robin-type condition

    Returns
    -------
    verdict : Verdict
        Margin 𝒦_Ω = C_T - C_T'C_P - K(1 + C_P²); on pass the constant
        C = 𝒦_Ω/C_T, in (0, 1]. The inequality is strict, margin 0 fails
    """
    kappa = report.C_T - report.C_T_prime*report.C_P - \
        report.K_aOmega*(1+report.C_P**2)
    if report.C_T > 0 and kappa > 0:
        return Verdict("pass", kappa, kappa/report.C_T,
                       "C_T - C_T'C_P - K(1+C_P^2) > 0")
    return Verdict("fail", kappa, None,
                   "C_T - C_T'C_P - K(1+C_P^2) = %g <= 0" % kappa)


def check_unbounded(report):
    """Unbounded Dirichlet condition C_T - K₃M > 0

    Returns
    -------
    verdict : Verdict
        Margin C_T - 4M and on pass C = (C_T - 4M)/C_T. A non-finite M is
        ``inconclusive``
    """
    if not np.isfinite(report.M):
        return Verdict("inconclusive", None, None,
                       "M is not finite at the truncation")
    margin = report.C_T - report.K3*report.M
    if report.C_T > 0 and margin > 0:
        return Verdict("pass", margin, margin/report.C_T, "C_T - 4M > 0")
    return Verdict("fail", margin, None, "C_T - 4M = %g <= 0" % margin)


def _node_label(grid, node):
    i, j, k = (int(x[node]) for x in grid.indices())
    return "node %d (%d, %d, %d)" % (node, i, j, k)


def check_compatibility(coeffs, grid=None):
    """Compatibility of the Robin-type and physical Robin conditions

    Parameters
    ----------
    coeffs : CoefficientSet
        Needs b_phys and mu
    grid : Grid, optional

    Returns
    -------
    verdict : Verdict
        ``pass`` when a1 = a2 = a3 = μ and a = μb on every boundary node
        (tolerance 1e-12) and the Robin-type rows equal μ times the physical
        rows (relative tolerance 1e-13); the constant is the proportionality
        factor μ. ``fail`` names the first offending node
    """
    grid = coeffs.grid if grid is None else grid
    if coeffs.b_phys is None or coeffs.mu is None:
        return Verdict("inconclusive", None, None,
                       "boundary function b and mu are needed")
    mu = coeffs.mu
    boundary = np.flatnonzero(grid.boundary_mask)

    dev = np.max(np.abs(coeffs.a[:, boundary] - mu), axis=0)
    if np.any(dev > COMPAT_TOL):
        node = boundary[np.argmax(dev > COMPAT_TOL)]
        return Verdict("fail", -float(np.max(dev)), None,
                       "a_l differs from mu at %s" % _node_label(grid, node))
    dev = np.abs(coeffs.a_robin[boundary] - mu*coeffs.b_phys[boundary])
    if np.any(dev > COMPAT_TOL):
        node = boundary[np.argmax(dev > COMPAT_TOL)]
        return Verdict("fail", -float(np.max(dev)), None,
                       "a differs from mu*b at %s" % _node_label(grid, node))

    # rows are compared on any grid kind, the closure itself needs Robin
    try:
        robin = _robin_type_rows(coeffs, grid).matrix.toarray()
    except ValueError as err:
        return Verdict("fail", None, None, str(err))
    physical = mu*physical_robin_rows(coeffs, grid).matrix.toarray()
    scale = max(1.0, float(np.max(np.abs(robin))))
    dev = float(np.max(np.abs(robin - physical)))
    if dev > ROW_RTOL*scale:
        return Verdict("fail", -dev, None,
                       "Robin-type rows differ from mu times physical rows")
    return Verdict("pass", 0.0, mu,
                   "Robin-type rows = %g x physical rows" % mu)


def theta_formula(C):
    """Θ = 2max(1, 1/√C) of the S-resolvent decay, None when C is missing"""
    if C is None or not C > 0:
        return None
    return 2*max(1.0, 1/sqrt(C))


def continuity_constant(report, s):
    """Constant C(s) with |b_s(u, v)| ≤ C(s)‖u‖_H¹‖v‖_H¹

    Parameters
    ----------
    report : ConditionReport
    s : SpectralParam

    Notes
    -----
    Sum of the termwise bounds: sup a_ℓ² for the gradient term,
    ½ sup|∂_ℓ(a_ℓ²)| for the first order term, 2 sup_{i≠ℓ}|a_i∂_ia_ℓ| +
    2|s₀| sup|a_ℓ| for the vector part, |s|² for the mass term and, on
    Robin-type grids, sup|a|·C_∂Ω² for the boundary integral.
    """
    coeffs = report.coeffs
    prod = np.abs(coeffs.products())
    own = max(float(np.max(prod[l][l])) for l in range(3))
    cross = max(float(np.max(prod[i][l])) for i in range(3)
                for l in range(3) if i != l)
    sup_a = float(np.max(np.abs(coeffs.a)))
    value = sup_a**2 + own + 2*cross + 2*abs(s.s0)*sup_a + s.modulus2
    if report.grid.boundary_kind == "robin":
        value += report.sup_a_robin*report.C_dOmega**2
    return value


def coercivity_constant(report, s1, kind=None):
    """min(𝒦, s₁²), the bound Re b_{js₁}(u, u) ≥ min(𝒦, s₁²)‖u‖²_H¹

    𝒦 is 𝒦_Ω for the Robin-type problem and C_T - 4M for the Dirichlet
    problem; None when the matching condition fails.
    """
    kind = kind or report.grid.boundary_kind
    verdict = report.verdict_bounded if kind == "robin" else \
        report.verdict_unbounded
    if not verdict.passed:
        return None
    return min(verdict.margin, float(s1)**2)
