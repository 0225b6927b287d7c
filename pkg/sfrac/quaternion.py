#!/usr/bin/python
# -*- coding: utf-8 -*-
# pylint: disable=invalid-name, too-many-arguments

"""
Quaternion arithmetic used across the package. The module include:

    * :class:`Quaternion`: Immutable real quaternion q0 + q1e1 + q2e2 + q3e3
    * :class:`SlicePolar`: Slice-polar decomposition (modulus, angle, axis)
    * :class:`SpectralParam`: Spectral parameter s with cached s0, |s| and
      slice axis
    * :func:`quat_mul`: Hamilton product
    * :func:`slice_polar`: Decomposition q = |q|(cos θ + j sin θ)
    * :func:`quat_pow`: Principal slice power q^α
    * :func:`complex_adjoint`: Complex 2n×2n embedding of quaternion matrices
    * :func:`adjoint_to_quaternion`: Inverse of the complex embedding
    * :func:`left_matrix`, :func:`right_matrix`: 4×4 real matrices of the
      left and right multiplication by a quaternion
    * :func:`real_matrix`: 4n×4n real matrix of a quaternion matrix acting by
      left multiplication on quaternion vectors

Arrays of quaternions are stored with the four real components in the last
axis, ``(..., 4)``.
"""

from __future__ import division
from collections import namedtuple
from math import atan2, cos, pi, sin

import numpy as np


TOL = 1e-12


def _hamilton(a, b):
    """Hamilton product of broadcastable arrays of shape (..., 4)"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a0, a1, a2, a3 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    b0, b1, b2, b3 = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack([a0*b0 - a1*b1 - a2*b2 - a3*b3,
                     a0*b1 + a1*b0 + a2*b3 - a3*b2,
                     a0*b2 - a1*b3 + a2*b0 + a3*b1,
                     a0*b3 + a1*b2 - a2*b1 + a3*b0], axis=-1)


def _conj(a):
    a = np.array(a, dtype=float)
    a[..., 1:] *= -1
    return a


class Quaternion(object):
    """
    Immutable real quaternion

    Parameters
    ----------
    q0 : float
        Real (scalar) part
    q1, q2, q3 : float
        Components along the imaginary units e1, e2, e3

    Notes
    -----
    The imaginary units satisfy e1e2 = e3, e2e3 = e1, e3e1 = e2 and
    e1² = e2² = e3² = -1. Products with a :class:`Quaternion` are Hamilton
    products, products with a real number scale every component.

    Examples
    --------
    >>> e1, e2 = Quaternion(0, 1), Quaternion(0, 0, 1)
    >>> e1*e2
    Quaternion(0.0, 0.0, 0.0, 1.0)
    """

    __slots__ = ("_q", )

    def __init__(self, q0=0.0, q1=0.0, q2=0.0, q3=0.0):
        q = np.array([q0, q1, q2, q3], dtype=float)
        q.flags.writeable = False
        object.__setattr__(self, "_q", q)

    def __setattr__(self, name, value):
        raise AttributeError("Quaternion is immutable")

    @classmethod
    def from_array(cls, q):
        """Build from any sequence of four reals"""
        q = np.asarray(q, dtype=float).ravel()
        if q.size != 4:
            raise ValueError("A quaternion needs exactly 4 components")
        return cls(*q)

    @classmethod
    def unit(cls, index):
        """Imaginary unit e_index, index in 1, 2, 3"""
        if index not in (1, 2, 3):
            raise ValueError("Imaginary unit index must be one of 1, 2, 3")
        q = [0.0]*4
        q[index] = 1.0
        return cls(*q)

    @property
    def array(self):
        """Components as a read-only array [q0, q1, q2, q3]"""
        return self._q

    q0 = property(lambda self: float(self._q[0]))
    q1 = property(lambda self: float(self._q[1]))
    q2 = property(lambda self: float(self._q[2]))
    q3 = property(lambda self: float(self._q[3]))

    @property
    def real(self):
        """Scalar part Re(q)"""
        return self.q0

    @property
    def vector(self):
        """Vector part as a quaternion with zero scalar part"""
        return Quaternion(0.0, *self._q[1:])

    def conj(self):
        """Quaternionic conjugate q0 - q1e1 - q2e2 - q3e3"""
        return Quaternion(*_conj(self._q))

    def norm(self):
        """Euclidean modulus |q|"""
        return float(np.sqrt(np.dot(self._q, self._q)))

    __abs__ = norm

    def inverse(self):
        """Multiplicative inverse conj(q)/|q|²"""
        n2 = float(np.dot(self._q, self._q))
        if n2 == 0:
            raise ValueError("Zero quaternion has no inverse")
        return Quaternion(*(_conj(self._q)/n2))

    def is_real(self):
        """True when the vector part is exactly zero"""
        return not np.any(self._q[1:])

    def isclose(self, other, tol=TOL):
        """Componentwise comparison with absolute tolerance"""
        other = _as_quaternion(other)
        return bool(np.max(np.abs(self._q-other.array)) <= tol)

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion(*_hamilton(self._q, other.array))
        return Quaternion(*(self._q*float(other)))

    def __rmul__(self, other):
        return Quaternion(*(self._q*float(other)))

    def __truediv__(self, other):
        if isinstance(other, Quaternion):
            return self*other.inverse()
        return Quaternion(*(self._q/float(other)))

    __div__ = __truediv__

    def __add__(self, other):
        return Quaternion(*(self._q+_as_quaternion(other).array))

    __radd__ = __add__

    def __sub__(self, other):
        return Quaternion(*(self._q-_as_quaternion(other).array))

    def __rsub__(self, other):
        return Quaternion(*(_as_quaternion(other).array-self._q))

    def __neg__(self):
        return Quaternion(*(-self._q))

    def __eq__(self, other):
        if not isinstance(other, (Quaternion, int, float)):
            return NotImplemented
        return bool(np.all(self._q == _as_quaternion(other).array))

    def __ne__(self, other):
        result = self.__eq__(other)
        if result is NotImplemented:
            return result
        return not result

    def __hash__(self):
        return hash(tuple(self._q))

    def __iter__(self):
        return iter(float(x) for x in self._q)

    def __repr__(self):
        return "Quaternion(%r, %r, %r, %r)" % tuple(float(x) for x in self._q)


def _as_quaternion(q):
    """Coerce a real number, a 4-sequence or a Quaternion"""
    if isinstance(q, Quaternion):
        return q
    if np.isscalar(q):
        return Quaternion(float(q))
    return Quaternion.from_array(q)


E1 = Quaternion(0, 1, 0, 0)
E2 = Quaternion(0, 0, 1, 0)
E3 = Quaternion(0, 0, 0, 1)
UNITS = (E1, E2, E3)


def quat_mul(a, b):
    """Hamilton product a·b

    Parameters
    ----------
    a, b : Quaternion
        Factors, real numbers are accepted

    Returns
    -------
    ab : Quaternion
        Product, noncommutative

    Examples
    --------
    >>> quat_mul(Quaternion(1, 1), Quaternion(1, -1))
    Quaternion(2.0, 0.0, 0.0, 0.0)
    """
    return _as_quaternion(a)*_as_quaternion(b)


class SlicePolar(namedtuple("SlicePolar", ["modulus", "angle", "axis"])):
    """
    Slice-polar form q = modulus·(cos angle + axis·sin angle)

    The angle lies in [0, π] and the axis is a unit imaginary quaternion
    (axis² = -1). Real quaternions use the conventional axis e1.
    """

    __slots__ = ()

    def reconstruct(self):
        """Quaternion built back from the decomposition"""
        return self.modulus*(cos(self.angle) + self.axis*sin(self.angle))


def slice_polar(q):
    """Slice-polar decomposition of a nonzero quaternion

    Parameters
    ----------
    q : Quaternion
        Nonzero quaternion

    Returns
    -------
    polar : SlicePolar
        (|q|, θ, j_q) with θ in [0, π] and j_q = Vec(q)/|Vec(q)|, or e1 when
        the vector part vanishes

    Raises
    ------
    ValueError
        If q is zero

    Examples
    --------
    >>> slice_polar(Quaternion(1, 1)).angle == pi/4
    True
    """
    q = _as_quaternion(q)
    modulus = q.norm()
    if modulus == 0:
        raise ValueError("Slice-polar decomposition undefined for q = 0")

    vec = q.array[1:]
    v = float(np.sqrt(np.dot(vec, vec)))
    if v == 0:
        angle = 0.0 if q.q0 > 0 else pi
        return SlicePolar(modulus, angle, E1)
    return SlicePolar(modulus, atan2(v, q.q0), Quaternion(0.0, *(vec/v)))


def quat_pow(q, alpha):
    """Principal slice power q^α

    Parameters
    ----------
    q : Quaternion
        Base, outside the closed negative real half-line (-∞, 0]
    alpha : float
        Exponent. The fractional calculus uses α in (0, 1); the quadrature
        also evaluates α - 1 and α - 2

    Returns
    -------
    power : Quaternion
        |q|^α (cos αθ + j_q sin αθ)

    Raises
    ------
    ValueError
        If q lies on (-∞, 0], where the principal branch is not defined

    Examples
    --------
    >>> quat_pow(Quaternion(4), 0.5)
    Quaternion(2.0, 0.0, 0.0, 0.0)
    """
    q = _as_quaternion(q)
    if q.is_real() and q.q0 <= 0:
        raise ValueError("Fractional power not defined on the branch cut "
                         "(-inf, 0], got q = %r" % q.q0)
    polar = slice_polar(q)
    r = polar.modulus**alpha
    return r*cos(alpha*polar.angle) + polar.axis*(r*sin(alpha*polar.angle))


def _axis_power(axis, magnitude, beta):
    """(magnitude·axis)^β for a unit imaginary axis and magnitude > 0"""
    r = magnitude**beta
    return r*cos(beta*pi/2) + axis*(r*sin(beta*pi/2))


def random_axis(seed):
    """Unit imaginary quaternion drawn uniformly on the sphere of 𝕊

    Parameters
    ----------
    seed : int
        Seed of the numpy generator

    Returns
    -------
    axis : Quaternion
        Purely imaginary quaternion of modulus 1
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(3)
    return Quaternion(0.0, *(v/np.linalg.norm(v)))


def check_axis(axis, tol=TOL):
    """Validate that axis belongs to 𝕊 (axis² = -1)"""
    axis = _as_quaternion(axis)
    sq = axis*axis
    if not sq.isclose(-1, tol=1e3*tol):
        raise ValueError("Axis must be a unit imaginary quaternion, got %r"
                         % axis)
    return axis


class SpectralParam(object):
    """
    Spectral parameter s with cached real part, modulus and slice axis

    Parameters
    ----------
    s : Quaternion
        Parameter value

    Notes
    -----
    For purely imaginary s = j·s1 use :meth:`imaginary`; s1 may be negative,
    in which case s = -j|s1| lies on the same slice.
    """

    def __init__(self, s):
        self.s = _as_quaternion(s)
        self.s0 = self.s.real
        self.modulus = self.s.norm()
        vec = self.s.vector
        vnorm = vec.norm()
        self.axis = vec/vnorm if vnorm else E1
        self.s1 = vnorm

    @classmethod
    def imaginary(cls, t, axis=E1):
        """Purely imaginary parameter s = axis·t"""
        axis = check_axis(axis)
        obj = cls(axis*float(t))
        obj.axis = axis
        obj.s1 = float(t)
        return obj

    @property
    def conj(self):
        """s̄"""
        return self.s.conj()

    @property
    def modulus2(self):
        """|s|²"""
        return float(np.dot(self.s.array, self.s.array))

    def is_imaginary(self):
        return self.s0 == 0

    def __repr__(self):
        return "SpectralParam(%r)" % (self.s, )


def left_matrix(q):
    """Real 4×4 matrix L(q) with L(q)·p = q·p

    Parameters
    ----------
    q : Quaternion or array_like, shape (..., 4)
        Quaternion(s)

    Returns
    -------
    L : numpy.ndarray, shape (..., 4, 4)
    """
    if isinstance(q, Quaternion):
        q = q.array
    q = np.asarray(q, dtype=float)
    q0, q1, q2, q3 = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    rows = [[q0, -q1, -q2, -q3],
            [q1, q0, -q3, q2],
            [q2, q3, q0, -q1],
            [q3, -q2, q1, q0]]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def right_matrix(q):
    """Real 4×4 matrix R(q) with R(q)·p = p·q"""
    if isinstance(q, Quaternion):
        q = q.array
    q = np.asarray(q, dtype=float)
    q0, q1, q2, q3 = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    rows = [[q0, -q1, -q2, -q3],
            [q1, q0, q3, -q2],
            [q2, -q3, q0, q1],
            [q3, q2, -q1, q0]]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def qmatmul(A, B):
    """Product of quaternion matrices of shapes (n, m, 4) and (m, p, 4)"""
    return np.einsum("ijab,jkb->ika", left_matrix(A), np.asarray(B, float))


def real_matrix(M):
    """Real 4n×4n representation of a quaternion matrix

    Parameters
    ----------
    M : array_like, shape (n, n, 4)
        Quaternion matrix acting on quaternion vectors by left
        multiplication, (Mv)_i = Σ_k M_ik·v_k

    Returns
    -------
    R : numpy.ndarray, shape (4n, 4n)
        Matrix acting on the flattened real vector v.reshape(-1) whose
        (i, k) 4×4 block is L(M_ik)
    """
    M = np.asarray(M, dtype=float)
    n, m = M.shape[:2]
    return left_matrix(M).transpose(0, 2, 1, 3).reshape(4*n, 4*m)


def complex_adjoint(M):
    """Complex adjoint of a quaternion matrix

    Parameters
    ----------
    M : Quaternion or array_like, shape (n, n, 4)
        Quaternion matrix; each entry q = α + β e2 with α = q0 + q1 i and
        β = q2 + q3 i in the complex plane spanned by {1, e1}

    Returns
    -------
    C : numpy.ndarray, complex, shape (2n, 2n)
        Block matrix [[A, B], [-conj(B), conj(A)]]

    Notes
    -----
    The map is a multiplicative homomorphism, adjoint(AB) =
    adjoint(A)·adjoint(B). For a single quaternion det(adjoint(q)) = |q|².

    Examples
    --------
    >>> complex_adjoint(E2).real
    array([[ 0.,  1.],
           [-1.,  0.]])
    """
    if isinstance(M, Quaternion):
        M = M.array.reshape(1, 1, 4)
    M = np.asarray(M, dtype=float)
    if M.ndim != 3 or M.shape[0] != M.shape[1] or M.shape[2] != 4:
        raise ValueError("Quaternion matrix must have shape (n, n, 4)")
    A = M[..., 0] + 1j*M[..., 1]
    B = M[..., 2] + 1j*M[..., 3]
    return np.block([[A, B], [-B.conj(), A.conj()]])


def adjoint_to_quaternion(C, tol=1e-10):
    """Quaternion matrix of a complex adjoint

    Parameters
    ----------
    C : array_like, complex, shape (2n, 2n)
        Matrix with the block symmetry [[A, B], [-conj(B), conj(A)]]
    tol : float
        Tolerance of the symmetry check, relative to max(1, max|C|)

    Returns
    -------
    M : numpy.ndarray, shape (n, n, 4)

    Raises
    ------
    ValueError
        If C lacks the symplectic block symmetry
    """
    C = np.asarray(C, dtype=complex)
    if C.ndim != 2 or C.shape[0] != C.shape[1] or C.shape[0] % 2:
        raise ValueError("Complex adjoint must be a square matrix of even "
                         "dimension")
    n = C.shape[0]//2
    A, B = C[:n, :n], C[:n, n:]
    scale = max(1.0, float(np.max(np.abs(C))))
    err = max(np.max(np.abs(C[n:, :n] + B.conj())),
              np.max(np.abs(C[n:, n:] - A.conj())))
    if err > tol*scale:
        raise ValueError("Matrix lacks the complex adjoint block symmetry, "
                         "deviation %g" % err)
    return np.stack([A.real, A.imag, B.real, B.imag], axis=-1)

