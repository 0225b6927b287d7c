#!/usr/bin/python
# -*- coding: utf-8 -*-
# pylint: disable=invalid-name, too-many-arguments, too-many-locals

"""
Sparse assembly of the discrete operators. The module include:

    * :class:`AssembledOperator`: Real 4N×4N sparse matrix of a right-linear
      quaternionic operator with its assembly metadata
    * :func:`assemble_T`: T = Σ e_ℓ a_ℓ(x)∂_ℓ with Dirichlet or Robin-type
      closure
    * :func:`assemble_Q`: Q_s(T) = T² - 2Re(s)T + |s|²I
    * :func:`scal_vect_decompose`: Scalar and vector parts of Q_s(T)
    * :func:`robin_type_closure`: Robin-type boundary rows
      Σ a_ℓ²n_ℓ∂_ℓ + a
    * :func:`physical_robin_rows`: Physical Robin rows Σ a_ℓn_ℓ∂_ℓ + b
    * :func:`boundary_mass`: Facet quadrature of ∫_{∂Ω} a conj(u)v dS
    * :func:`assemble_weak_Q`: Operator of b_s, the Robin-type solves
    * :class:`BilinearForm`, :func:`eval_bilinear`: The form b_s(u, v) and
      its terms
    * :func:`seminorm_D`, :func:`h1_norm`: Discrete Sobolev norms
    * :func:`export_operator`: QOP coordinate text files

A quaternion field is the real vector of length 4N with the components of
every node contiguous, so a scalar N×N operator X acting on every component
is kron(X, I4) and the imaginary unit e_ℓ acting from the left is
kron(I_N, L(e_ℓ)).

Closures
--------
Dirichlet: the interior rows keep the central stencils with the boundary
columns dropped, the boundary rows are identity rows. Robin-type: T keeps the
one-sided stencils at the boundary nodes and the condition
Σ a_ℓ²n_ℓ∂_ℓu + au = 0 is imposed at the centre of every facet, h/2 outside
the boundary node, through the quadratic through the three nearest nodes
along the normal (the ghost value of the facet eliminated). It enters the
solves as the natural boundary condition of b_s, see :func:`assemble_weak_Q`.
"""

from __future__ import division
import csv
import logging

import numpy as np
import scipy.sparse as sp

from .grid import QField, _check_grid, derivative_operators, l2_inner
from .quaternion import Quaternion, SpectralParam, UNITS, left_matrix, \
    real_matrix


log = logging.getLogger(__name__)

I4 = sp.identity(4, format="csr")
_LE = [sp.csr_matrix(left_matrix(e)) for e in UNITS]
# (ℓ, m, e_ℓe_m) for ℓ < m, Hamilton signs
_PAIRS = ((0, 1, UNITS[2]), (0, 2, -UNITS[1]), (1, 2, UNITS[0]))


class AssembledOperator(object):
    """
    Sparse real representation of a quaternionic operator

    Parameters
    ----------
    matrix : scipy.sparse matrix, shape (4N, 4N)
        Real matrix acting on flattened fields
    grid : Grid, optional
        Grid of the fields, None for dense matrix instances
    boundary_kind : str, optional
        ``dirichlet``, ``robin`` or ``none`` (raw stencils)
    s : SpectralParam, optional
        Spectral parameter of Q_s(T)
    label : str
        Short name, ``T``, ``Q``, ``Scal`` or ``Vect``
    parts : dict, optional
        Assembly metadata: ``coeffs``, ``D`` (closed scalar derivatives),
        ``M`` (scalar blocks a_ℓ∂_ℓ), ``B`` (boundary block), ``T`` (for Q)

    Notes
    -----
    The instance is immutable by convention and can be shared between
    threads.
    """

    def __init__(self, matrix, grid=None, boundary_kind="none", s=None,
                 label="T", parts=None):
        self.matrix = sp.csr_matrix(matrix)
        self.grid = grid
        self.boundary_kind = boundary_kind
        self.s = s
        self.label = label
        self.parts = parts or {}

    @classmethod
    def from_quaternion_matrix(cls, M):
        """Operator of a dense quaternion matrix of shape (n, n, 4)"""
        return cls(real_matrix(M), label="T")

    @classmethod
    def zero(cls, grid):
        """Zero operator on the grid, for tests where Q reduces to |s|²I"""
        N = grid.N
        Z = sp.csr_matrix((N, N))
        return cls(sp.csr_matrix((4*N, 4*N)), grid, grid.boundary_kind,
                   parts={"coeffs": None, "D": None, "M": [Z, Z, Z], "B": Z})

    @property
    def size(self):
        """Number of quaternion unknowns"""
        return self.matrix.shape[0]//4

    @property
    def mask(self):
        """Real 4N mask of the Dirichlet subspace, None otherwise"""
        if self.grid is None or self.boundary_kind != "dirichlet":
            return None
        return np.repeat(self.grid.interior_mask, 4)

    def dot(self, x):
        """Product with a flat real vector (or a 2D block of vectors)"""
        return self.matrix.dot(x)

    def apply(self, v):
        """Apply to a QField or an array of shape (n, 4), same type back"""
        if isinstance(v, QField):
            return QField(v.grid, self.matrix.dot(v.flat))
        v = np.asarray(v, dtype=float)
        return self.matrix.dot(v.reshape(-1)).reshape(v.shape)

    def __repr__(self):
        return "AssembledOperator(%s, %d unknowns, %s)" % (
            self.label, self.matrix.shape[0], self.boundary_kind)


def _lift(X, block=None):
    """kron(X, block) with block the 4×4 identity by default"""
    return sp.kron(X, I4 if block is None else block, format="csr")


def _singular_facet(grid, node):
    i, j, k = (int(x[node]) for x in grid.indices())
    return ValueError("Singular Robin-type closure at node %d (%d, %d, %d): "
                      "a_l^2 n_l vanishes on the facet" % (node, i, j, k))


# outward derivative and value at the facet centre of an end node, from the
# quadratic through the three nearest nodes along the normal
_FACE_DERIVATIVE = np.array([2., -3., 1.])
_FACE_VALUE = np.array([15., -10., 3.])/8


def _face_rows(grid, ax, side):
    """Facet nodes, value rows and outward derivative rows of one face

    ``side`` is -1 for the low and +1 for the high face of axis ``ax``; the
    rows are in node order of the facet nodes.
    """
    n = grid.shape[ax]
    ends = np.arange(3) if side < 0 else n-1-np.arange(3)
    zero = np.zeros(3, dtype=int)
    rows = []
    for weights in (_FACE_VALUE, _FACE_DERIVATIVE/grid.h):
        blocks = [sp.identity(m, format="csr") for m in grid.shape]
        blocks[ax] = sp.csr_matrix((weights, (zero, ends)), shape=(1, n))
        rows.append(sp.kron(blocks[2], sp.kron(blocks[1], blocks[0]),
                            format="csr"))
    nodes = np.flatnonzero(grid.side(ax) == side)
    return nodes, rows[0], rows[1]


def assemble_T(coeffs, grid=None, closed=True):
    """Discrete T = Σ e_ℓ a_ℓ(x)∂_ℓ

    Parameters
    ----------
    coeffs : CoefficientSet
        Coefficients a_ℓ and boundary data
    grid : Grid, optional
        Must agree with the grid of the coefficients
    closed : bool
        Apply the closure of grid.boundary_kind. With False the raw stencils
        (central inside, one-sided second order on the faces) are returned.
        The Robin-type closure keeps the raw stencils and stores its facet
        rows as ``parts["closure"]``

    Returns
    -------
    T : AssembledOperator

    Raises
    ------
    ValueError
        Grid mismatch, or singular Robin-type facet (node index reported)

    Examples
    --------
    >>> from sfrac.grid import Grid, CoefficientSet
    >>> g = Grid(4, 4, 4, 0.25)
    >>> T = assemble_T(CoefficientSet.constant(g), closed=False)
    >>> T.matrix.shape
    (256, 256)
    """
    grid = coeffs.grid if grid is None else grid
    _check_grid(grid, coeffs.grid)
    N = grid.N
    D = derivative_operators(grid)
    B = sp.csr_matrix((N, N))
    parts = {"coeffs": coeffs}

    if not closed:
        kind = "none"
    elif grid.boundary_kind == "dirichlet":
        kind = "dirichlet"
        P = sp.diags(grid.interior_mask.astype(float))
        D = [P.dot(Dl).dot(P).tocsr() for Dl in D]
        B = sp.diags(grid.boundary_mask.astype(float), format="csr")
    else:
        kind = "robin"
        parts["closure"] = robin_type_closure(coeffs, grid)

    M = [sp.diags(coeffs.a[ax]).dot(D[ax]).tocsr() for ax in range(3)]
    matrix = _lift(B)
    for ax in range(3):
        matrix = matrix + _lift(M[ax], _LE[ax])
    log.debug("Assembled T on %r, %d nonzeros", grid, matrix.nnz)
    parts.update(D=D, M=M, B=B)
    return AssembledOperator(matrix, grid, kind, label="T", parts=parts)


def assemble_Q(s, T):
    """Pseudo S-resolvent operator Q_s(T) = T² - 2Re(s)T + |s|²I

    Parameters
    ----------
    s : SpectralParam or Quaternion
        Spectral parameter
    T : AssembledOperator
        Closed discrete T (or any operator for matrix instances)

    Returns
    -------
    Q : AssembledOperator
        Exact sparse composition, carries T in its metadata
    """
    if not isinstance(s, SpectralParam):
        s = SpectralParam(s)
    A = T.matrix
    n = A.shape[0]
    matrix = A.dot(A) - 2*s.s0*A + s.modulus2*sp.identity(n, format="csr")
    parts = dict(T.parts)
    parts["T"] = T
    return AssembledOperator(matrix.tocsr(), T.grid, T.boundary_kind, s,
                             label="Q", parts=parts)


def scal_vect_decompose(Q):
    """Scalar and vector parts of Q_s(T)

    Parameters
    ----------
    Q : AssembledOperator
        Output of :func:`assemble_Q` for a T assembled by :func:`assemble_T`

    Returns
    -------
    scal : AssembledOperator
        kron(B² - Σ M_ℓ², I4) + |s|²I, the discrete (-Σ(a_ℓ∂_ℓ)² + |s|²)I
    vect : AssembledOperator
        Σ_{ℓ<m} [M_ℓ, M_m]⊗e_ℓe_m + Σ (M_ℓB + BM_ℓ)⊗e_ℓ - 2Re(s)T

    Raises
    ------
    ValueError
        If Q lacks the blocks of T (dense matrix instances)

    Notes
    -----
    With the Hamilton signs e1e2 = e3, e1e3 = -e2, e2e3 = e1 the sum
    scal + vect reproduces Q up to rounding; the e1 part is e1(M2M3 - M3M2).
    """
    M, B = Q.parts.get("M"), Q.parts.get("B")
    T = Q.parts.get("T")
    if M is None or B is None or T is None or Q.s is None:
        raise ValueError("Scal/Vect decomposition needs the assembly metadata "
                         "of T")
    n = Q.matrix.shape[0]
    scalar = B.dot(B)
    for Ml in M:
        scalar = scalar - Ml.dot(Ml)
    scal = _lift(scalar) + Q.s.modulus2*sp.identity(n, format="csr")

    vect = -2*Q.s.s0*T.matrix
    for l, m, unit in _PAIRS:
        commutator = M[l].dot(M[m]) - M[m].dot(M[l])
        vect = vect + _lift(commutator, sp.csr_matrix(left_matrix(unit)))
    for l in range(3):
        vect = vect + _lift(M[l].dot(B) + B.dot(M[l]), _LE[l])

    kw = dict(grid=Q.grid, boundary_kind=Q.boundary_kind, s=Q.s,
              parts=Q.parts)
    return (AssembledOperator(scal.tocsr(), label="Scal", **kw),
            AssembledOperator(vect.tocsr(), label="Vect", **kw))


class BoundaryRows(object):
    """
    Scalar boundary rows, one per boundary facet

    A facet is the face of a boundary cell, so an edge node carries two rows
    and a corner node three, each with the normal of its own face.

    Attributes
    ----------
    matrix : scipy.sparse.csr_matrix, shape (F, N)
        Rows acting on every component of a field
    nodes : numpy.ndarray
        Node index of each facet
    axes : numpy.ndarray
        Normal axis (0, 1, 2) of each facet
    normals : numpy.ndarray
        Outward normal sign ±1 of each facet
    centres : numpy.ndarray, shape (F, 3)
        Coordinates of the facet centres, where the rows are evaluated
    """

    def __init__(self, matrix, nodes, axes, normals, centres):
        self.matrix = matrix.tocsr()
        self.nodes = nodes
        self.axes = axes
        self.normals = normals
        self.centres = centres

    def apply(self, u):
        """Residuals of the rows on a field, shape (F, 4)"""
        return self.matrix.dot(u.values)


def _facet_rows(grid, weights, zeroth):
    """Rows Σ weight_ℓ·n_ℓ∂_ℓu + zeroth·u at every facet centre"""
    blocks, nodes, axes, normals = [], [], [], []
    for ax in range(3):
        for side in (-1, 1):
            idx, value, deriv = _face_rows(grid, ax, side)
            blocks.append(sp.diags(weights[ax][idx]).dot(deriv) +
                          sp.diags(zeroth[idx]).dot(value))
            nodes.append(idx)
            axes.append(np.full(idx.size, ax))
            normals.append(np.full(idx.size, side))
    nodes, axes, normals = (np.concatenate(x) for x in (nodes, axes, normals))
    centres = np.column_stack(grid.coords())[nodes]
    centres[np.arange(nodes.size), axes] += normals*grid.h/2
    return BoundaryRows(sp.vstack(blocks), nodes, axes, normals, centres)


def _robin_type_rows(coeffs, grid):
    a2 = coeffs.a**2
    scale = max(1.0, float(np.max(a2)))
    for ax in range(3):
        bad = (grid.side(ax) != 0) & (a2[ax] <= 1e-14*scale)
        if np.any(bad):
            raise _singular_facet(grid, int(np.argmax(bad)))
    return _facet_rows(grid, a2, coeffs.a_robin)


def robin_type_closure(coeffs, grid=None):
    """Robin-type boundary rows Σ a_ℓ²n_ℓ∂_ℓ u + a u

    Parameters
    ----------
    coeffs : CoefficientSet
        Coefficients with the boundary function a (a_robin)
    grid : Grid, optional
        Robin-type grid of the coefficients

    Returns
    -------
    rows : BoundaryRows
        One row per facet, evaluated at the facet centre with the quadratic
        through the boundary node and the next two nodes along the normal;
        a_ℓ and a are read on the boundary node

    Raises
    ------
    ValueError
        On a Dirichlet grid, or on a facet where a_ℓ² vanishes (node index
        reported)

    Notes
    -----
    Applied to a constant field c the rows return a·c, and they vanish on
    quadratics satisfying the condition on the faces. With a ≡ 0 and
    a_ℓ ≡ 1 they are the homogeneous Neumann rows.
    """
    grid = coeffs.grid if grid is None else grid
    _check_grid(grid, coeffs.grid)
    if grid.boundary_kind != "robin":
        raise ValueError("Robin-type rows need a Robin-type grid")
    return _robin_type_rows(coeffs, grid)


def physical_robin_rows(coeffs, grid=None):
    """Physical Robin rows Σ a_ℓn_ℓ∂_ℓ v + b v on the same facets

    Raises
    ------
    ValueError
        If the coefficient set has no boundary function b
    """
    grid = coeffs.grid if grid is None else grid
    _check_grid(grid, coeffs.grid)
    if coeffs.b_phys is None:
        raise ValueError("Physical Robin rows need the boundary function b")
    return _facet_rows(grid, coeffs.a, coeffs.b_phys)


def boundary_mass(coeffs, grid=None):
    """Scalar N×N matrix W with ⟨W u, v⟩ = ∫_{∂Ω} a conj(u)v dS

    Midpoint rule on the facets with the facet values of
    :func:`robin_type_closure`.
    """
    grid = coeffs.grid if grid is None else grid
    W = sp.csr_matrix((grid.N, grid.N))
    for ax in range(3):
        for side in (-1, 1):
            idx, value, _ = _face_rows(grid, ax, side)
            W = W + value.T.dot(sp.diags(coeffs.a_robin[idx])).dot(value)
    return (W/grid.h).tocsr()


def assemble_weak_Q(s, T):
    """Operator K of the form b_s, ⟨K u, v⟩ = b_s(u, v) for all u, v

    Parameters
    ----------
    s : SpectralParam or Quaternion
    T : AssembledOperator
        Output of :func:`assemble_T`

    Returns
    -------
    K : AssembledOperator
        Σ M_ℓᵀM_ℓ + Σ a_ℓ(∂_ℓa_ℓ)D_ℓ + Vect + |s|²I, plus the boundary mass
        on Robin-type grids

    Notes
    -----
    K u = F is the discrete weak problem b_s(u, v) = ⟨F, v⟩ for all v. On
    Robin-type grids it carries the condition as a natural boundary
    condition, and for fields satisfying it ⟨K u, v⟩ - ⟨Q_s(T)u, v⟩ = O(h²).
    """
    Q = assemble_Q(s, T)
    _, vect = scal_vect_decompose(Q)
    coeffs, D, M = T.parts["coeffs"], T.parts["D"], T.parts["M"]
    scalar = sp.csr_matrix((T.size, T.size))
    for ax in range(3):
        weight = sp.diags(coeffs.a[ax]*coeffs.grad[ax][ax])
        scalar = scalar + M[ax].T.dot(M[ax]) + weight.dot(D[ax])
    if T.boundary_kind == "robin":
        scalar = scalar + boundary_mass(coeffs, T.grid)
    n = Q.matrix.shape[0]
    matrix = _lift(scalar) + vect.matrix + \
        Q.s.modulus2*sp.identity(n, format="csr")
    return AssembledOperator(matrix.tocsr(), T.grid, T.boundary_kind, Q.s,
                             label="K", parts=Q.parts)


def _scalar_inner(X, u, Y, v):
    """⟨X u, Y v⟩ for scalar N×N matrices acting componentwise"""
    return l2_inner(QField(u.grid, X.dot(u.values)),
                    QField(v.grid, Y.dot(v.values)))


class BilinearForm(object):
    """
    The form b_s(u, v) matching the closure of the assembled T

    Parameters
    ----------
    coeffs : CoefficientSet
        Coefficients and boundary data
    grid : Grid, optional
        Grid of the coefficients
    s : SpectralParam or Quaternion
        Spectral parameter

    Notes
    -----
    b_s(u, v) = Σ⟨a_ℓ∂_ℓu, a_ℓ∂_ℓv⟩ + Σ⟨∂_ℓu, a_ℓ(∂_ℓa_ℓ)v⟩ + ⟨Vect u, v⟩
    + |s|²⟨u, v⟩, plus ∫_{∂Ω} a conj(u)v dS on Robin-type grids (facet
    midpoint rule, see :func:`boundary_mass`). The derivatives are the
    closed differences of T and Vect the vector part of Q_s(T), so for
    smooth u satisfying the boundary condition b_s(u, v) - ⟨Q_s(T)u, v⟩ is
    O(h²). The operator of the form is :func:`assemble_weak_Q`.
    """

    def __init__(self, coeffs, grid=None, s=None):
        if s is None:
            raise ValueError("BilinearForm needs the spectral parameter s")
        self.coeffs = coeffs
        self.grid = coeffs.grid if grid is None else grid
        self.s = s if isinstance(s, SpectralParam) else SpectralParam(s)
        self.T = assemble_T(coeffs, self.grid)
        self.Q = assemble_Q(self.s, self.T)
        self.vect = scal_vect_decompose(self.Q)[1]

    def check_space(self, u, tol=1e-10):
        """Raise ValueError when u is outside the space of the closure"""
        _check_grid(self.grid, u.grid)
        scale = max(1.0, float(np.max(np.abs(u.values))))
        if self.grid.boundary_kind == "dirichlet":
            if np.max(np.abs(u.values[self.grid.boundary_mask])) > tol*scale:
                raise ValueError("Dirichlet form needs fields vanishing on "
                                 "the boundary nodes")
        else:
            mean = np.abs(u.values.mean(axis=0))
            if np.max(mean) > tol*scale:
                raise ValueError("Robin-type form needs mean-zero fields, "
                                 "see mean_zero_project")

    def terms(self, u, v):
        """Every term of b_s(u, v) as a dict of quaternions

        Keys ``gradient``, ``first_order``, ``vector``, ``mass`` and, on
        Robin-type grids, ``boundary``.
        """
        self.check_space(u)
        self.check_space(v)
        D, M = self.T.parts["D"], self.T.parts["M"]
        grad = Quaternion()
        first = Quaternion()
        for ax in range(3):
            grad = grad + _scalar_inner(M[ax], u, M[ax], v)
            weight = sp.diags(self.coeffs.a[ax]*self.coeffs.grad[ax][ax])
            first = first + _scalar_inner(D[ax], u, weight, v)
        terms = {"gradient": grad,
                 "first_order": first,
                 "vector": l2_inner(self.vect.apply(u), v),
                 "mass": self.s.modulus2*l2_inner(u, v)}
        if self.grid.boundary_kind == "robin":
            W = boundary_mass(self.coeffs, self.grid)
            terms["boundary"] = l2_inner(QField(u.grid, W.dot(u.values)), v)
        return terms

    def __call__(self, u, v):
        total = Quaternion()
        for value in self.terms(u, v).values():
            total = total + value
        return total


def eval_bilinear(s, u, v, coeffs, grid=None):
    """b_s(u, v) of the problem, see :class:`BilinearForm`

    Raises
    ------
    ValueError
        If u or v is outside the space of the closure (nonzero boundary
        values for Dirichlet, nonzero mean for Robin-type)
    """
    return BilinearForm(coeffs, grid, s)(u, v)


def seminorm_D(u, T):
    """(Σ_ℓ ‖∂_ℓu‖²)^½ with the closed differences of T"""
    total = sum(_scalar_inner(Dl, u, Dl, u).real for Dl in T.parts["D"])
    return float(np.sqrt(max(total, 0.0)))


def h1_norm(u, T):
    """(‖u‖² + ‖u‖²_D)^½"""
    return float(np.sqrt(u.norm()**2 + seminorm_D(u, T)**2))


def export_operator(path, op):
    """Write a QOP coordinate file

    The header is ``QOP,4N,boundary_kind,s0,s1``, then one ``row,col,value``
    line per stored entry in row-major order.
    """
    coo = op.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    s0 = op.s.s0 if op.s is not None else 0.0
    s1 = op.s.s1 if op.s is not None else 0.0
    with open(path, "w", newline="") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["QOP", op.matrix.shape[0], op.boundary_kind,
                         repr(float(s0)), repr(float(s1))])
        for n in order:
            writer.writerow([int(coo.row[n]), int(coo.col[n]),
                             repr(float(coo.data[n]))])
    log.debug("Exported %s to %s", op, path)
