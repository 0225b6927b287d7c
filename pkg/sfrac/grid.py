#!/usr/bin/python
# -*- coding: utf-8 -*-
# pylint: disable=invalid-name, too-many-arguments
# pylint: disable=too-many-instance-attributes

"""
Cartesian box grids and quaternion-valued fields. The module include:

    * :class:`Grid`: Uniform 3D cell-centred grid over an axis-aligned box
    * :class:`QField`: Quaternion-valued grid function, 4 reals per node
    * :class:`CoefficientSet`: Coefficients a1, a2, a3 of the operator, their
      gradients and the boundary data a, b, μ
    * :func:`l2_inner`: Quaternion-valued L² inner product
    * :func:`mean_zero_project`: Projection on fields with zero volume average
    * :func:`discrete_Lp_norm`: Discrete L², L³ and sup norms
    * :func:`difference_matrix`: 1D first derivative, central inside and
      one-sided second order at the ends
    * :func:`save_field`, :func:`load_field`: QFIELD csv files
    * :func:`save_coefficient`, :func:`load_coefficient`: COEFF csv files
    * :func:`builtin_coefficient`, :func:`parse_coefficient`: Coefficient
      families and their textual specs

Node (i, j, k) sits at origin + h·(i, j, k) and is the centre of a cell of
volume h³, so every integral is a node sum with weight h³ (volume) or h²
(boundary facets). Nodes are ordered x-fastest, n = i + nx·(j + ny·k).
"""

from __future__ import division
import csv
from math import pi, sqrt

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator

from ._utils import check_finite
from .quaternion import Quaternion, _conj, _hamilton, left_matrix, \
    right_matrix


BOUNDARY_KINDS = ("dirichlet", "robin")


class Grid(object):
    """
    Uniform grid over an axis-aligned box

    Parameters
    ----------
    nx, ny, nz : int
        Node counts per axis, at least 3
    h : float
        Spacing, [length]
    origin : tuple of 3 float
        Position of node (0, 0, 0)
    boundary_kind : str
        ``dirichlet`` or ``robin`` (Robin-type)

    Notes
    -----
    The box covered by the cells is [o - h/2, o + (n - 1/2)h] per axis, so
    |Ω| = nx·ny·nz·h³. An unbounded domain is emulated by a large box with
    Dirichlet closure; the truncation is a property of the grid and is
    reported by the callers, never hidden.
    """

    def __init__(self, nx, ny, nz, h, origin=(0.0, 0.0, 0.0),
                 boundary_kind="dirichlet"):
        shape = tuple(int(n) for n in (nx, ny, nz))
        if any(n < 3 for n in shape):
            raise ValueError("Grid needs at least 3 nodes per axis, got %s"
                             % (shape, ))
        h = float(h)
        if not h > 0 or not np.isfinite(h):
            raise ValueError("Grid spacing must be positive, got %r" % h)
        if boundary_kind not in BOUNDARY_KINDS:
            raise ValueError("boundary_kind must be one of %s" %
                             ", ".join(BOUNDARY_KINDS))
        origin = tuple(float(o) for o in origin)
        if len(origin) != 3:
            raise ValueError("origin needs 3 coordinates")

        self.shape = shape
        self.nx, self.ny, self.nz = shape
        self.h = h
        self.origin = origin
        self.boundary_kind = boundary_kind

    @classmethod
    def unit_cube(cls, n, boundary_kind="dirichlet", centered=False):
        """n³ cells of side 1/n filling the unit cube (or [-1/2, 1/2]³)"""
        h = 1./n
        o = -0.5+h/2 if centered else h/2
        return cls(n, n, n, h, (o, o, o), boundary_kind)

    @property
    def N(self):
        """Node count"""
        return self.nx*self.ny*self.nz

    @property
    def volume(self):
        """|Ω|"""
        return self.N*self.h**3

    @property
    def extent(self):
        """Side lengths of the box"""
        return tuple(n*self.h for n in self.shape)

    @property
    def diameter(self):
        return sqrt(sum(L**2 for L in self.extent))

    @property
    def surface_area(self):
        """|∂Ω|"""
        Lx, Ly, Lz = self.extent
        return 2*(Lx*Ly + Ly*Lz + Lx*Lz)

    def axis_coords(self, axis):
        """Node coordinates along one axis (0, 1, 2)"""
        return self.origin[axis] + self.h*np.arange(self.shape[axis])

    def coords(self):
        """Node coordinates x, y, z as flat arrays in node order"""
        z, y, x = np.meshgrid(self.axis_coords(2), self.axis_coords(1),
                              self.axis_coords(0), indexing="ij")
        return x.ravel(), y.ravel(), z.ravel()

    def indices(self):
        """Integer node indices i, j, k as flat arrays in node order"""
        k, j, i = np.meshgrid(np.arange(self.nz), np.arange(self.ny),
                              np.arange(self.nx), indexing="ij")
        return i.ravel(), j.ravel(), k.ravel()

    def side(self, axis):
        """-1 on the low face, +1 on the high face, 0 elsewhere"""
        idx = self.indices()[axis]
        s = np.zeros(self.N, dtype=int)
        s[idx == 0] = -1
        s[idx == self.shape[axis]-1] = 1
        return s

    @property
    def boundary_mask(self):
        """True on nodes of at least one face"""
        mask = np.zeros(self.N, dtype=bool)
        for axis in range(3):
            mask |= self.side(axis) != 0
        return mask

    @property
    def interior_mask(self):
        return ~self.boundary_mask

    def same_as(self, other):
        return (isinstance(other, Grid) and self.shape == other.shape and
                self.h == other.h and self.origin == other.origin)

    def __eq__(self, other):
        return self.same_as(other) and \
            self.boundary_kind == other.boundary_kind

    def __ne__(self, other):
        return not self.__eq__(other)

    def __hash__(self):
        return hash((self.shape, self.h, self.origin, self.boundary_kind))

    def __repr__(self):
        return "Grid(%d, %d, %d, h=%r, origin=%r, %s)" % (
            self.nx, self.ny, self.nz, self.h, self.origin,
            self.boundary_kind)


def _check_grid(a, b):
    if not a.same_as(b):
        raise ValueError("Grid mismatch: %r vs %r" % (a, b))


class QField(object):
    """
    Quaternion-valued grid function

    Parameters
    ----------
    grid : Grid
        Grid of the field
    values : array_like, shape (N, 4)
        Components u0, u1, u2, u3 per node, node order of the grid
    mean_zero : bool
        Flag set by :func:`mean_zero_project`

    Notes
    -----
    Values are read-only; arithmetic returns new fields. Quaternion scalars
    act on the left with :meth:`lmul` and on the right with :meth:`rmul`.
    """

    def __init__(self, grid, values, mean_zero=False):
        values = np.array(values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 4)
        if values.shape != (grid.N, 4):
            raise ValueError("Field needs shape (%d, 4), got %s" %
                             (grid.N, values.shape))
        values.flags.writeable = False
        self.grid = grid
        self.values = values
        self.mean_zero = mean_zero

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((grid.N, 4)))

    @classmethod
    def constant(cls, grid, q):
        q = Quaternion.from_array(q) if not isinstance(q, Quaternion) else q
        return cls(grid, np.tile(q.array, (grid.N, 1)))

    @classmethod
    def from_function(cls, grid, func):
        """Sample func(x, y, z) -> array (N, 4) or (N,) (real field)"""
        x, y, z = grid.coords()
        values = np.asarray(func(x, y, z), dtype=float)
        if values.ndim == 1:
            values = np.column_stack([values, np.zeros((grid.N, 3))])
        return cls(grid, values)

    @classmethod
    def from_flat(cls, grid, vector):
        """Field from its real 4N vector"""
        return cls(grid, np.asarray(vector, dtype=float).reshape(-1, 4))

    @classmethod
    def random(cls, grid, seed=None):
        rng = np.random.default_rng(seed)
        return cls(grid, rng.standard_normal((grid.N, 4)))

    @property
    def flat(self):
        """Real 4N vector, component index fastest"""
        return self.values.reshape(-1)

    def component(self, index):
        return self.values[:, index]

    def lmul(self, q):
        """Left multiplication by a quaternion, q·u"""
        return QField(self.grid, self.values.dot(left_matrix(q).T))

    def rmul(self, q):
        """Right multiplication by a quaternion, u·q"""
        return QField(self.grid, self.values.dot(right_matrix(q).T))

    def restrict(self, mask):
        """Copy with values outside mask set to zero"""
        values = self.values.copy()
        values[~mask] = 0
        return QField(self.grid, values)

    def norm(self):
        """‖u‖ in L²"""
        return sqrt(max(l2_inner(self, self).real, 0.0))

    def __add__(self, other):
        _check_grid(self.grid, other.grid)
        return QField(self.grid, self.values+other.values)

    def __sub__(self, other):
        _check_grid(self.grid, other.grid)
        return QField(self.grid, self.values-other.values)

    def __neg__(self):
        return QField(self.grid, -self.values)

    def __mul__(self, c):
        return QField(self.grid, self.values*float(c))

    __rmul__ = __mul__

    def __truediv__(self, c):
        return QField(self.grid, self.values/float(c))

    __div__ = __truediv__

    def __repr__(self):
        return "QField(%r, |u|=%g)" % (self.grid, self.norm())


def _pairwise_sum(values):
    """Column sums of a (N, k) array with numpy pairwise summation"""
    return np.ascontiguousarray(np.asarray(values).T).sum(axis=1)


def l2_inner(u, v):
    """Quaternion-valued L² inner product ⟨u, v⟩ = ∫ conj(u)·v dx

    Parameters
    ----------
    u, v : QField
        Fields on the same grid

    Returns
    -------
    inner : Quaternion
        Σ_nodes conj(u)·v·h³

    Raises
    ------
    ValueError
        If the grids differ

    Notes
    -----
    Conjugate-linear in u, right-linear in v: ⟨u, v·λ⟩ = ⟨u, v⟩·λ and
    ⟨u, v⟩ = conj(⟨v, u⟩).
    """
    _check_grid(u.grid, v.grid)
    prod = _hamilton(_conj(u.values), v.values)
    return Quaternion(*(_pairwise_sum(prod)*u.grid.h**3))


def mean_zero_project(u):
    """Subtract the volume average

    Parameters
    ----------
    u : QField
        Field on a Robin-type grid

    Returns
    -------
    w : QField
        u - |Ω|⁻¹∫u, flagged mean_zero

    Raises
    ------
    ValueError
        If the grid has Dirichlet closure, whose fields vanish on ∂Ω instead
    """
    if u.grid.boundary_kind != "robin":
        raise ValueError("Mean-zero projection applies to Robin-type grids")
    mean = _pairwise_sum(u.values)/u.grid.N
    return QField(u.grid, u.values-mean, mean_zero=True)


def mean_zero_operator(grid):
    """LinearOperator of :func:`mean_zero_project` on flat 4N vectors"""
    n = 4*grid.N

    def project(x):
        y = np.asarray(x, dtype=float).reshape(grid.N, 4, -1)
        return (y - y.mean(axis=0)).reshape(np.shape(x))

    return LinearOperator((n, n), matvec=project, rmatvec=project,
                          matmat=project, dtype=float)


def discrete_Lp_norm(f, p, grid=None):
    """Discrete Lp norm of a real grid field

    Parameters
    ----------
    f : array_like or QField
        Real values per node; a QField contributes its pointwise modulus
    p : float
        2, 3 or numpy.inf
    grid : Grid, optional
        Needed for the weight h³ when f is an array

    Returns
    -------
    norm : float
        (Σ|f|^p h³)^(1/p), or max|f| for p = ∞

    Examples
    --------
    >>> g = Grid.unit_cube(4)
    >>> round(discrete_Lp_norm(np.ones(g.N), 3, g), 12)
    1.0
    """
    if isinstance(f, QField):
        grid = f.grid
        f = np.sqrt(np.sum(f.values**2, axis=1))
    f = np.abs(np.asarray(f, dtype=float))
    if p == np.inf:
        return float(np.max(f))
    if p not in (2, 3):
        raise ValueError("Supported norms are p = 2, 3, inf")
    if grid is None:
        raise ValueError("grid is needed for the volume weight")
    return float((np.sum(f**p)*grid.h**3)**(1./p))


def difference_matrix(n, h):
    """First derivative on n nodes of spacing h

    Central differences (u[i+1] - u[i-1])/2h inside, one-sided second order
    stencils (-3u0 + 4u1 - u2)/2h and (3u[n-1] - 4u[n-2] + u[n-3])/2h at the
    ends. Exact on quadratics.
    """
    if n < 3:
        raise ValueError("Need at least 3 nodes")
    off = np.full(n-1, 1.)
    D = sp.diags([-off, off], [-1, 1], shape=(n, n), format="lil")
    D[0, :3] = [-3, 4, -1]
    D[n-1, n-3:] = [1, -4, 3]
    return (D/(2*h)).tocsr()


def derivative_operators(grid):
    """Raw N×N matrices of ∂x, ∂y, ∂z in node order"""
    I = [sp.identity(n, format="csr") for n in grid.shape]
    D = [difference_matrix(n, grid.h) for n in grid.shape]
    return (sp.kron(I[2], sp.kron(I[1], D[0]), format="csr"),
            sp.kron(I[2], sp.kron(D[1], I[0]), format="csr"),
            sp.kron(D[2], sp.kron(I[1], I[0]), format="csr"))


class CoefficientSet(object):
    """
    Coefficients of T = Σ e_ℓ a_ℓ(x)∂_ℓ and the boundary data

    Parameters
    ----------
    grid : Grid
        Grid of every field
    a : array_like, shape (3, N)
        Samples of a1, a2, a3
    grad : array_like, shape (3, 3, N), optional
        grad[i][j] = ∂_{x_i} a_j. Computed with :func:`difference_matrix`
        when missing
    a_robin : array_like, shape (N,), optional
        The function a of the Robin-type condition, read on boundary nodes;
        zero by default
    b_phys : array_like, shape (N,), optional
        The function b of the physical Robin condition
    mu : float, optional
        Common boundary value μ of a1, a2, a3 in the compatibility setting
    """

    def __init__(self, grid, a, grad=None, a_robin=None, b_phys=None,
                 mu=None):
        self.grid = grid
        a = check_finite(a, "coefficients a_l")
        if a.shape != (3, grid.N):
            raise ValueError("Coefficients need shape (3, %d), got %s" %
                             (grid.N, a.shape))
        if grad is None:
            D = derivative_operators(grid)
            grad = np.array([[D[i].dot(a[j]) for j in range(3)]
                             for i in range(3)])
        grad = check_finite(grad, "coefficient gradients")
        if grad.shape != (3, 3, grid.N):
            raise ValueError("Gradients need shape (3, 3, %d)" % grid.N)
        if a_robin is None:
            a_robin = np.zeros(grid.N)
        a_robin = check_finite(np.broadcast_to(a_robin, (grid.N, )),
                               "boundary function a")
        if b_phys is not None:
            b_phys = check_finite(np.broadcast_to(b_phys, (grid.N, )),
                                  "boundary function b")
        if mu is not None:
            mu = float(mu)

        self.a = a
        self.grad = grad
        self.a_robin = a_robin
        self.b_phys = b_phys
        self.mu = mu

    @classmethod
    def constant(cls, grid, value=1.0, **kwargs):
        """a1 = a2 = a3 = value"""
        a = np.full((3, grid.N), float(value))
        return cls(grid, a, np.zeros((3, 3, grid.N)), **kwargs)

    @classmethod
    def from_specs(cls, grid, specs, **kwargs):
        """Build from three textual specs, see :func:`parse_coefficient`"""
        if len(specs) != 3:
            raise ValueError("Three coefficient specs are needed")
        values, grads = zip(*[parse_coefficient(s, grid) for s in specs])
        # grads[j][i] = ∂_i a_j
        grad = np.transpose(np.array(grads), (1, 0, 2))
        return cls(grid, np.array(values), grad, **kwargs)

    def scaled(self, factor):
        """Copy with a1, a2, a3 multiplied by factor"""
        return CoefficientSet(self.grid, self.a*factor, self.grad*factor,
                              self.a_robin, self.b_phys, self.mu)

    def products(self):
        """Fields a_i·∂_i a_j, shape (3, 3, N), indexed [i][j]"""
        return self.a[:, None, :]*self.grad


def builtin_coefficient(name, grid, params=()):
    """Values and gradient of a builtin coefficient family

    Parameters
    ----------
    name : str
        One of:

            * ``constant``: params (c, ), a = c
            * ``affine``: params (c0, c1, c2, c3), a = c0 + c1x + c2y + c3z
            * ``sinusoidal``: params (base, amp, axis, freq),
              a = base + amp·sin(freq·x_axis), axis in 1, 2, 3
            * ``gaussian-decay``: params (base, eps, width),
              a = base + eps·exp(-|x|²/width²)

    grid : Grid
        Grid where the coefficient is sampled
    params : sequence of float
        Family parameters, missing trailing values take the defaults
        constant (1), affine (1, 0, 0, 0), sinusoidal (2, 1, 1, 1),
        gaussian-decay (1, 0.1, 1)

    Returns
    -------
    values : numpy.ndarray, shape (N,)
    grad : numpy.ndarray, shape (3, N)
        Exact partial derivatives along x, y, z
    """
    x = np.array(grid.coords())
    params = [float(p) for p in params]
    zero = np.zeros(grid.N)

    def fill(defaults):
        if len(params) > len(defaults):
            raise ValueError("Too many parameters for %s" % name)
        return params + defaults[len(params):]

    if name == "constant":
        c, = fill([1.0])
        return np.full(grid.N, c), np.array([zero, zero, zero])
    if name == "affine":
        c0, c1, c2, c3 = fill([1.0, 0.0, 0.0, 0.0])
        values = c0 + c1*x[0] + c2*x[1] + c3*x[2]
        return values, np.array([zero+c1, zero+c2, zero+c3])
    if name == "sinusoidal":
        base, amp, axis, freq = fill([2.0, 1.0, 1.0, 1.0])
        axis = int(axis)
        if axis not in (1, 2, 3):
            raise ValueError("sinusoidal axis must be 1, 2 or 3")
        xi = x[axis-1]
        grad = [zero, zero, zero]
        grad[axis-1] = amp*freq*np.cos(freq*xi)
        return base + amp*np.sin(freq*xi), np.array(grad)
    if name == "gaussian-decay":
        base, eps, width = fill([1.0, 0.1, 1.0])
        g = eps*np.exp(-np.sum(x**2, axis=0)/width**2)
        return base + g, -2*x*g/width**2
    raise ValueError("Unknown coefficient family %r, expected one of "
                     "constant, affine, sinusoidal, gaussian-decay" % name)


def parse_coefficient(spec, grid):
    """Values and gradient from a textual coefficient spec

    Parameters
    ----------
    spec : str or float
        ``constant:<v>``, ``expr:<name>[:p1,p2,...]`` (see
        :func:`builtin_coefficient`) or ``file:<path>`` (COEFF file on the
        same grid). A bare number means a constant.
    grid : Grid

    Returns
    -------
    values : numpy.ndarray, shape (N,)
    grad : numpy.ndarray, shape (3, N)
    """
    if not isinstance(spec, str):
        return builtin_coefficient("constant", grid, [float(spec)])
    kind, _, rest = spec.partition(":")
    if kind == "constant":
        return builtin_coefficient("constant", grid, [float(rest)])
    if kind == "expr":
        name, _, params = rest.partition(":")
        params = [p for p in params.split(",") if p.strip()]
        return builtin_coefficient(name, grid, params)
    if kind == "file":
        fgrid, values = load_coefficient(rest)
        _check_grid(grid, fgrid)
        D = derivative_operators(grid)
        return values, np.array([Di.dot(values) for Di in D])
    raise ValueError("Coefficient spec %r must start with constant:, expr: "
                     "or file:" % spec)


def _write_table(path, header, grid, columns):
    i, j, k = grid.indices()
    with open(path, "w", newline="") as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow([header, grid.nx, grid.ny, grid.nz, repr(grid.h)] +
                        [repr(o) for o in grid.origin])
        for n in range(grid.N):
            writer.writerow([i[n], j[n], k[n]] +
                            [repr(float(c[n])) for c in columns])


def _read_table(path, header, ncols, boundary_kind):
    with open(path, newline="") as stream:
        rows = list(csv.reader(stream))
    if not rows or rows[0][0] != header or len(rows[0]) != 8:
        raise ValueError("Malformed header in %s, expected %s,nx,ny,nz,h,ox,"
                         "oy,oz" % (path, header))
    try:
        nx, ny, nz = (int(n) for n in rows[0][1:4])
        h, ox, oy, oz = (float(x) for x in rows[0][4:8])
    except ValueError:
        raise ValueError("Malformed header in %s" % path)
    grid = Grid(nx, ny, nz, h, (ox, oy, oz), boundary_kind)

    body = rows[1:]
    if len(body) != grid.N:
        raise ValueError("Dimension mismatch in %s: %d rows for %d nodes" %
                         (path, len(body), grid.N))
    i, j, k = grid.indices()
    values = np.empty((grid.N, ncols))
    for n, row in enumerate(body):
        if len(row) != 3+ncols:
            raise ValueError("Row %d of %s has %d columns, expected %d" %
                             (n+2, path, len(row), 3+ncols))
        if (int(row[0]), int(row[1]), int(row[2])) != (i[n], j[n], k[n]):
            raise ValueError("Node order broken at row %d of %s" %
                             (n+2, path))
        values[n] = [float(x) for x in row[3:]]
        if not np.all(np.isfinite(values[n])):
            raise ValueError("Non-finite value at node (%s, %s, %s) of %s" %
                             (row[0], row[1], row[2], path))
    return grid, values


def save_field(path, field):
    """Write a QFIELD csv file with round-trip precision"""
    check_finite(field.values, "field")
    _write_table(path, "QFIELD", field.grid, field.values.T)


def load_field(path, boundary_kind="dirichlet"):
    """Read a QFIELD csv file

    Raises
    ------
    ValueError
        Malformed header, dimension mismatch or non-finite values (the node
        index is reported)
    """
    grid, values = _read_table(path, "QFIELD", 4, boundary_kind)
    return QField(grid, values)


def save_coefficient(path, grid, values):
    """Write a COEFF csv file, one value per node"""
    values = check_finite(values, "coefficient")
    _write_table(path, "COEFF", grid, [values])


def load_coefficient(path, boundary_kind="dirichlet"):
    """Read a COEFF csv file, returns (grid, values)"""
    grid, values = _read_table(path, "COEFF", 1, boundary_kind)
    return grid, values[:, 0]


def poincare_constant(grid):
    """Poincaré-Wirtinger constant diam(Ω)/π of the convex box"""
    return grid.diameter/pi
