#!/usr/bin/python
# -*- coding: utf-8 -*-
"""S-resolvent operators and fractional powers of quaternionic operators
T = e1·a1(x)∂x1 + e2·a2(x)∂x2 + e3·a3(x)∂x3 on finite difference grids."""

import os

from .quaternion import (Quaternion, SpectralParam, E1, E2, E3,  # noqa
                         quat_pow, slice_polar)
from .grid import (Grid, QField, CoefficientSet, l2_inner,  # noqa
                   mean_zero_project, discrete_Lp_norm, load_field,
                   save_field)
from .assembly import (assemble_T, assemble_Q, scal_vect_decompose,  # noqa
                       robin_type_closure, eval_bilinear, BilinearForm,
                       assemble_weak_Q, boundary_mass)
from .conditions import (compute_constants, check_bounded,  # noqa
                         check_unbounded, check_compatibility)
from .resolvent import (SolveOptions, SolverError, solve_Q,  # noqa
                        apply_SL, apply_SR, op_norm_estimate,
                        resolvent_scan)
from .fracpower import (QuadratureSpec, frac_power_apply,  # noqa
                        convergence_report, matrix_oracle)

basepath = os.path.abspath(os.path.dirname(__file__))
with open(os.path.join(basepath, 'VERSION')) as version_file:
    __version__ = version_file.read().strip()

__doi__ = {
    "adjoint":
        {"autor": "Zhang, F.",
         "title": "Quaternions and Matrices of Quaternions",
         "ref": "Linear Algebra Appl. 251 (1997) 21-57",
         "doi": "10.1016/0024-3795(95)00543-9"},
    "gmres":
        {"autor": "Saad, Y., Schultz, M.H.",
         "title": "GMRES: A Generalized Minimal Residual Algorithm for "
                  "Solving Nonsymmetric Linear Systems",
         "ref": "SIAM J. Sci. Stat. Comput. 7(3) (1986) 856-869",
         "doi": "10.1137/0907058"},
    "superlu":
        {"autor": "Li, X.S.",
         "title": "An Overview of SuperLU: Algorithms, Implementation, and "
                  "User Interface",
         "ref": "ACM Trans. Math. Softw. 31(3) (2005) 302-325",
         "doi": "10.1145/1089014.1089017"},
    "fdm":
        {"autor": "LeVeque, R.J.",
         "title": "Finite Difference Methods for Ordinary and Partial "
                  "Differential Equations",
         "ref": "SIAM, 2007",
         "doi": "10.1137/1.9780898717839"},
}
