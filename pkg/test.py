#!/usr/bin/python
# -*- coding: utf-8 -*-
"""Test sfrac module."""

from contextlib import redirect_stdout
import io
import json
from math import log, pi, sqrt
import os
import shutil
import tempfile
from types import SimpleNamespace
import unittest
from unittest import mock

import numpy as np

from sfrac._utils import (Verdict, check_finite, config_hash, loglog_slope,
                          ordered_map, thread_count)
from sfrac.quaternion import (Quaternion, SpectralParam, E1, E2, E3,
                              quat_mul, slice_polar, quat_pow, random_axis,
                              check_axis, left_matrix, right_matrix, qmatmul,
                              real_matrix, complex_adjoint,
                              adjoint_to_quaternion)
from sfrac.grid import (Grid, QField, CoefficientSet, l2_inner,
                        mean_zero_project, mean_zero_operator,
                        discrete_Lp_norm, difference_matrix,
                        builtin_coefficient, parse_coefficient, save_field,
                        load_field, save_coefficient, poincare_constant)
from sfrac.assembly import (AssembledOperator, assemble_T, assemble_Q,
                            scal_vect_decompose, robin_type_closure,
                            physical_robin_rows, BilinearForm, eval_bilinear,
                            seminorm_D, h1_norm, export_operator,
                            boundary_mass, assemble_weak_Q)
from sfrac.conditions import (compute_constants, check_unbounded,
                              check_compatibility, theta_formula,
                              continuity_constant, coercivity_constant,
                              gagliardo_nirenberg_constant)
from sfrac.resolvent import (SolveOptions, SolverError, Resolvent, solve_Q,
                             apply_SR, apply_SL, op_norm_estimate,
                             resolvent_scan, resolvent_equation_error,
                             coercivity_sample, dense_scalar_resolvent)
from sfrac.fracpower import (QuadratureSpec, frac_power_apply,
                             convergence_report, gauss_legendre_panels,
                             orientation, random_test_matrix, adjoint_power,
                             matrix_oracle)
from sfrac.cli import ConfigError, ProblemConfig, parse_axis, main


def interior_field(grid, seed):
    """Random field vanishing on the boundary nodes"""
    return QField.random(grid, seed).restrict(grid.interior_mask)


def sinusoidal_coefficients(grid):
    return CoefficientSet.from_specs(
        grid, ["expr:sinusoidal:2,0.5,2", "constant:2", "constant:2"])


# Test
class Test(unittest.TestCase):
    """
    Global unittest for module
    """

    def test_quaternion(self):
        """Hamilton product, inverse and 4×4 representations"""
        self.assertEqual(E1*E2, E3)
        self.assertEqual(E2*E3, E1)
        self.assertEqual(E3*E1, E2)
        self.assertEqual(E1*E1, -1)
        self.assertEqual(E2*E1, -E3)
        self.assertEqual(quat_mul(Quaternion(1, 1), Quaternion(1, -1)), 2)

        q = Quaternion(1, 2, 3, 4)
        p = Quaternion(-0.5, 0.25, 2, -1)
        self.assertEqual(round(q.norm()**2, 12), 30.0)
        self.assertTrue((q*q.inverse()).isclose(1))
        self.assertTrue((q.conj()*q).isclose(30))
        self.assertTrue(np.allclose(left_matrix(q).dot(p.array),
                                    (q*p).array))
        self.assertTrue(np.allclose(right_matrix(q).dot(p.array),
                                    (p*q).array))
        self.assertRaises(ValueError, Quaternion(0).inverse)
        self.assertRaises(ValueError, Quaternion.from_array, [1, 2, 3])
        self.assertRaises(AttributeError, setattr, q, "_q", None)

    def test_slicePolar(self):
        """Slice-polar form and principal powers"""
        q = Quaternion(1, 1, -2, 0.5)
        polar = slice_polar(q)
        self.assertTrue(polar.reconstruct().isclose(q))
        self.assertTrue((polar.axis*polar.axis).isclose(-1))

        polar = slice_polar(Quaternion(-2))
        self.assertEqual(polar.angle, pi)
        self.assertEqual(polar.axis, E1)
        self.assertRaises(ValueError, slice_polar, 0)

        self.assertEqual(quat_pow(Quaternion(4), 0.5), 2)
        self.assertRaises(ValueError, quat_pow, Quaternion(-1), 0.5)
        self.assertRaises(ValueError, quat_pow, 0, 0.5)
        q = Quaternion(1, 0, 1, 0)
        root = quat_pow(q, 0.5)
        self.assertTrue((root*root).isclose(q))
        self.assertTrue((quat_pow(q, 0.3)*quat_pow(q, 0.7)).isclose(q))

    def test_spectralParam(self):
        """Imaginary spectral parameters and unit axes"""
        s = SpectralParam.imaginary(2.0, E2)
        self.assertEqual(s.s0, 0)
        self.assertEqual(s.modulus2, 4)
        self.assertEqual(s.conj, -2*E2)
        self.assertTrue(s.is_imaginary())

        s = SpectralParam.imaginary(-3.0, E1)
        self.assertEqual(s.s1, -3.0)
        self.assertEqual(s.modulus, 3.0)

        s = SpectralParam(Quaternion(1, 0, 3, 4))
        self.assertEqual(s.s1, 5.0)
        self.assertTrue(s.axis.isclose(Quaternion(0, 0, 0.6, 0.8)))

        j = random_axis(3)
        self.assertTrue((j*j).isclose(-1))
        self.assertEqual(j, random_axis(3))
        self.assertRaises(ValueError, check_axis, Quaternion(0, 1, 1, 0))
        self.assertRaises(ValueError, check_axis, Quaternion(1, 0, 0, 0))

    def test_complexAdjoint(self):
        """Complex adjoint is a multiplicative homomorphism"""
        rng = np.random.default_rng(11)
        A = rng.standard_normal((3, 3, 4))
        B = rng.standard_normal((3, 3, 4))
        CA, CB = complex_adjoint(A), complex_adjoint(B)
        self.assertTrue(np.allclose(complex_adjoint(qmatmul(A, B)),
                                    CA.dot(CB)))
        self.assertTrue(np.allclose(adjoint_to_quaternion(complex_adjoint(A)),
                                    A))
        self.assertEqual(round(abs(np.linalg.det(complex_adjoint(
            Quaternion(1, 2, 3, 4)))), 10), 30.0)

        C = complex_adjoint(A)
        C[4, 0] += 0.1
        self.assertRaises(ValueError, adjoint_to_quaternion, C)
        self.assertRaises(ValueError, complex_adjoint, np.zeros((2, 3, 4)))

        v = rng.standard_normal((3, 4))
        self.assertTrue(np.allclose(real_matrix(A).dot(v.reshape(-1)),
                                    qmatmul(A, v[:, None, :])[:, 0, :]
                                    .reshape(-1)))

    def test_grid(self):
        """Node layout, masks and the facet quadrature"""
        g = Grid(4, 5, 6, 0.1, (1, 2, 3))
        self.assertEqual(g.N, 120)
        self.assertEqual(round(g.volume, 12), 0.12)
        self.assertEqual(np.count_nonzero(g.boundary_mask), 96)
        self.assertEqual(np.count_nonzero(g.interior_mask), 24)

        n = 1 + 4*(2 + 5*3)
        x, y, z = g.coords()
        self.assertEqual(round(x[n], 12), 1.1)
        self.assertEqual(round(y[n], 12), 2.2)
        self.assertEqual(round(z[n], 12), 3.3)
        i, j, k = g.indices()
        self.assertEqual((i[n], j[n], k[n]), (1, 2, 3))
        self.assertEqual(g.side(0)[0], -1)
        self.assertEqual(g.side(0)[3], 1)
        self.assertEqual(g.side(0)[n], 0)

        g = Grid(4, 5, 6, 0.5, boundary_kind="robin")
        self.assertEqual(round(g.surface_area, 12), 37.0)
        W = boundary_mass(CoefficientSet.constant(g, 1.0, a_robin=1.0))
        one = QField.constant(g, Quaternion(1))
        area = l2_inner(QField(g, W.dot(one.values)), one)
        self.assertEqual(round(area.real, 10), 37.0)

        self.assertEqual(round(Grid.unit_cube(4).volume, 12), 1.0)
        c = Grid.unit_cube(4, centered=True)
        self.assertEqual(round(np.mean(c.coords()[0]), 12), 0.0)
        self.assertEqual(round(poincare_constant(Grid.unit_cube(4)), 12),
                         round(sqrt(3)/pi, 12))

        self.assertRaises(ValueError, Grid, 2, 4, 4, 0.1)
        self.assertRaises(ValueError, Grid, 4, 4, 4, 0)
        self.assertRaises(ValueError, Grid, 4, 4, 4, 0.1, (0, 0, 0), "free")
        self.assertEqual(Grid(4, 4, 4, 0.1), Grid(4, 4, 4, 0.1))
        self.assertNotEqual(Grid(4, 4, 4, 0.1),
                            Grid(4, 4, 4, 0.1, boundary_kind="robin"))
        self.assertTrue(Grid(4, 4, 4, 0.1).same_as(
            Grid(4, 4, 4, 0.1, boundary_kind="robin")))

    def test_field(self):
        """L² inner product, mean-zero projection and norms"""
        g = Grid.unit_cube(3)
        u = QField.random(g, 1)
        v = QField.random(g, 2)
        lam = Quaternion(0.3, -1, 2, 0.5)
        self.assertTrue(l2_inner(u, v).isclose(l2_inner(v, u).conj(), 1e-12))
        self.assertTrue(l2_inner(u, v.rmul(lam)).isclose(
            l2_inner(u, v)*lam, 1e-10))
        self.assertTrue(l2_inner(u.rmul(lam), v).isclose(
            lam.conj()*l2_inner(u, v), 1e-10))
        self.assertEqual(round(u.norm()**2, 10),
                         round(np.sum(u.values**2)*g.h**3, 10))
        self.assertRaises(ValueError, l2_inner, u, QField.random(
            Grid.unit_cube(4), 1))
        self.assertRaises(ValueError, QField, g, np.zeros((5, 4)))

        w = u + v*2 - v
        self.assertTrue(np.allclose(w.values, u.values+v.values))
        self.assertTrue(np.allclose((u/2).values, 0.5*u.values))
        self.assertTrue(np.allclose(u.lmul(E1).values,
                                    (-u.lmul(E1).lmul(E1).lmul(E1)).values))

        r = Grid.unit_cube(3, "robin")
        u = QField.random(r, 4)
        p = mean_zero_project(u)
        self.assertTrue(p.mean_zero)
        self.assertTrue(np.max(np.abs(p.values.mean(axis=0))) < 1e-14)
        P = mean_zero_operator(r)
        self.assertTrue(np.allclose(P.matvec(u.flat), p.flat))
        self.assertTrue(np.allclose(P.matvec(P.matvec(u.flat)), p.flat))
        self.assertRaises(ValueError, mean_zero_project, QField.random(g, 1))

        g = Grid.unit_cube(4)
        self.assertEqual(round(discrete_Lp_norm(np.ones(g.N), 3, g), 12), 1.0)
        self.assertEqual(round(discrete_Lp_norm(np.ones(g.N), 2, g), 12), 1.0)
        self.assertEqual(discrete_Lp_norm(np.arange(g.N), np.inf), g.N-1)
        q = QField.constant(g, Quaternion(0, 3, 4, 0))
        self.assertEqual(round(discrete_Lp_norm(q, np.inf), 12), 5.0)
        self.assertEqual(round(discrete_Lp_norm(q, 3), 12), 5.0)
        self.assertRaises(ValueError, discrete_Lp_norm, np.ones(g.N), 1, g)
        self.assertRaises(ValueError, discrete_Lp_norm, np.ones(g.N), 2)

    def test_coefficients(self):
        """Difference matrix, builtin families and textual specs"""
        x = 0.5*np.arange(5)
        D = difference_matrix(5, 0.5)
        self.assertTrue(np.allclose(D.dot(x**2), 2*x))
        self.assertTrue(np.allclose(D.dot(np.ones(5)), 0))
        self.assertRaises(ValueError, difference_matrix, 2, 0.5)

        g = Grid.unit_cube(5)
        x, y, z = g.coords()
        values, grad = builtin_coefficient("sinusoidal", g, [2, 0.5, 2, 3])
        self.assertTrue(np.allclose(values, 2+0.5*np.sin(3*y)))
        self.assertTrue(np.allclose(grad[1], 1.5*np.cos(3*y)))
        self.assertTrue(np.allclose(grad[0], 0))
        values, grad = builtin_coefficient("gaussian-decay", g, [1, 0.2, 2])
        gauss = 0.2*np.exp(-(x**2+y**2+z**2)/4)
        self.assertTrue(np.allclose(values, 1+gauss))
        self.assertTrue(np.allclose(grad[2], -z*gauss/2))
        self.assertRaises(ValueError, builtin_coefficient, "cubic", g)
        self.assertRaises(ValueError, builtin_coefficient, "sinusoidal", g,
                          [2, 1, 4])
        self.assertRaises(ValueError, builtin_coefficient, "constant", g,
                          [1, 2])

        values, _ = parse_coefficient("constant:2.5", g)
        self.assertTrue(np.all(values == 2.5))
        values, grad = parse_coefficient("expr:affine:1,2", g)
        self.assertTrue(np.allclose(values, 1+2*x))
        self.assertTrue(np.allclose(grad[0], 2))
        values, _ = parse_coefficient(3, g)
        self.assertTrue(np.all(values == 3))
        self.assertRaises(ValueError, parse_coefficient, "poly:1", g)

        a = np.array([1+2*x, np.ones(g.N), np.ones(g.N)])
        coeffs = CoefficientSet(g, a)
        self.assertTrue(np.allclose(coeffs.grad[0][0], 2))
        self.assertTrue(np.allclose(coeffs.grad[1][0], 0))
        self.assertTrue(np.allclose(coeffs.products()[0][0], 2*(1+2*x)))
        self.assertTrue(np.allclose(coeffs.scaled(3).a, 3*a))
        self.assertRaises(ValueError, CoefficientSet, g, a[:2])
        a[0, 7] = np.nan
        self.assertRaises(ValueError, CoefficientSet, g, a)

        coeffs = CoefficientSet.constant(g, 2.0)
        self.assertTrue(np.all(coeffs.products() == 0))
        self.assertTrue(np.all(coeffs.a_robin == 0))

    def test_files(self):
        """QFIELD and COEFF csv files"""
        folder = tempfile.mkdtemp()
        try:
            g = Grid(3, 4, 5, 0.3, (0.1, -0.2, 1/3.))
            u = QField.random(g, 8)
            path = os.path.join(folder, "u.csv")
            save_field(path, u)
            w = load_field(path)
            self.assertTrue(w.grid.same_as(g))
            self.assertTrue(np.array_equal(w.values, u.values))
            with open(path) as stream:
                self.assertTrue(stream.readline().startswith("QFIELD,3,4,5,"))

            with open(path) as stream:
                lines = stream.read().splitlines()
            broken = os.path.join(folder, "broken.csv")
            with open(broken, "w") as stream:
                stream.write("\n".join(lines[:-1]) + "\n")
            self.assertRaises(ValueError, load_field, broken)
            with open(broken, "w") as stream:
                stream.write("\n".join(["FIELD"+lines[0][6:]]+lines[1:]))
            self.assertRaises(ValueError, load_field, broken)
            with open(broken, "w") as stream:
                stream.write("\n".join([lines[0], "0,0,0,nan,0,0,0"] +
                                       lines[2:]))
            with self.assertRaises(ValueError) as error:
                load_field(broken)
            self.assertIn("(0, 0, 0)", str(error.exception))
            self.assertRaises(ValueError, save_field, path,
                              QField(g, np.full((g.N, 4), np.inf)))

            x = g.coords()[0]
            path = os.path.join(folder, "a1.csv")
            save_coefficient(path, g, 1+0.5*x)
            values, grad = parse_coefficient("file:"+path, g)
            self.assertTrue(np.allclose(values, 1+0.5*x))
            self.assertTrue(np.allclose(grad[0], 0.5))
            self.assertRaises(ValueError, parse_coefficient, "file:"+path,
                              Grid.unit_cube(4))
        finally:
            shutil.rmtree(folder)

    def test_assembleT(self):
        """Raw stencils and Dirichlet closure of T"""
        g = Grid(5, 5, 5, 0.25)
        coeffs = CoefficientSet.constant(g, 3.0)
        raw = assemble_T(coeffs, closed=False)
        self.assertEqual(raw.boundary_kind, "none")
        u = QField.from_function(g, lambda x, y, z: x)
        Tu = raw.apply(u).values
        self.assertTrue(np.allclose(Tu, [0, 3, 0, 0]))
        x, y, z = g.coords()
        u = QField(g, np.column_stack([0*y, 0*y, y**2, 0*y]))
        Tu = raw.apply(u).values
        self.assertTrue(np.allclose(Tu[:, 0], -6*y))
        self.assertTrue(np.allclose(Tu[:, 1:], 0))

        T = assemble_T(coeffs)
        self.assertEqual(T.boundary_kind, "dirichlet")
        u = QField.random(g, 5)
        Tu = T.apply(u).values
        boundary = g.boundary_mask
        self.assertTrue(np.allclose(Tu[boundary], u.values[boundary]))
        self.assertTrue(np.allclose(T.apply(u.values), Tu))
        self.assertEqual(T.mask.shape, (4*g.N, ))

        Z = AssembledOperator.zero(g)
        self.assertEqual(Z.matrix.nnz, 0)
        self.assertEqual(Z.size, g.N)
        self.assertRaises(ValueError, assemble_T, coeffs, Grid.unit_cube(4))

    def test_robinClosure(self):
        """Robin-type rows and closed T on Robin-type grids"""
        g = Grid.unit_cube(4, "robin")
        coeffs = CoefficientSet.constant(g, 1.0)
        T = assemble_T(coeffs)
        self.assertEqual(T.boundary_kind, "robin")
        one = QField.constant(g, Quaternion(1))
        self.assertTrue(np.allclose(T.apply(one).values, 0))

        coeffs = CoefficientSet.constant(g, 1.0, a_robin=0.5)
        rows = robin_type_closure(coeffs)
        self.assertEqual(rows.matrix.shape, (6*16, g.N))
        self.assertTrue(np.allclose(rows.apply(one)[:, 0], 0.5))
        self.assertTrue(np.allclose(rows.apply(one)[:, 1:], 0))
        self.assertEqual(set(rows.normals), {-1, 1})

        u = QField.from_function(g, lambda x, y, z: x**2)
        res = rows.apply(u)[:, 0]
        xf = rows.centres[:, 0]
        expected = rows.normals*np.where(rows.axes == 0, 2*xf, 0) \
            + 0.5*xf**2
        self.assertTrue(np.allclose(res, expected))
        faces = np.round(xf[rows.axes == 0], 12)
        self.assertEqual(set(faces), {0.0, 1.0})
        corner = np.flatnonzero(rows.nodes == 0)
        self.assertEqual(sorted(rows.axes[corner]), [0, 1, 2])

        self.assertRaises(ValueError, robin_type_closure,
                          CoefficientSet.constant(Grid.unit_cube(4)))
        self.assertRaises(ValueError, physical_robin_rows, coeffs)
        phys = physical_robin_rows(CoefficientSet.constant(
            g, 2.0, b_phys=0.25))
        self.assertTrue(np.allclose(phys.apply(one)[:, 0], 0.25))

        a = np.ones((3, g.N))
        a[0] = 0
        singular = CoefficientSet(g, a, np.zeros((3, 3, g.N)))
        with self.assertRaises(ValueError) as error:
            assemble_T(singular)
        self.assertIn("node", str(error.exception))
        self.assertRaises(ValueError, robin_type_closure, singular)

    def test_assembleQ(self):
        """Q_s(T) = T² - 2Re(s)T + |s|²I and its Scal/Vect split"""
        g = Grid.unit_cube(6)
        coeffs = sinusoidal_coefficients(g)
        T = assemble_T(coeffs)
        s = SpectralParam(Quaternion(0.5, 1, 0, -1))
        Q = assemble_Q(s, T)
        x = QField.random(g, 3).flat
        Tx = T.dot(x)
        self.assertTrue(np.allclose(Q.dot(x), T.dot(Tx) - Tx + 2.25*x))

        for grid in (g, Grid.unit_cube(6, "robin")):
            coeffs = sinusoidal_coefficients(grid)
            Q = assemble_Q(s, assemble_T(coeffs))
            scal, vect = scal_vect_decompose(Q)
            diff = abs(scal.matrix + vect.matrix - Q.matrix).max()
            self.assertTrue(diff < 1e-10*abs(Q.matrix).max())
            self.assertEqual((scal.label, vect.label), ("Scal", "Vect"))

        dense = AssembledOperator.from_quaternion_matrix(np.ones((2, 2, 4)))
        self.assertRaises(ValueError, scal_vect_decompose,
                          assemble_Q(s, dense))

    def test_commutator(self):
        """a1(x2): the vector part reduces to e3[a1∂1, a2∂2]"""
        g = Grid.unit_cube(6)
        T = assemble_T(sinusoidal_coefficients(g))
        Q = assemble_Q(SpectralParam.imaginary(1.0), T)
        _, vect = scal_vect_decompose(Q)
        r = np.random.default_rng(4).standard_normal(g.N)
        u = QField(g, np.column_stack([r, 0*r, 0*r, 0*r]))
        w = vect.apply(u).values
        self.assertTrue(np.max(np.abs(w[:, :3])) < 1e-12)
        self.assertTrue(np.max(np.abs(w[:, 3])) > 1e-3)

        v = u.restrict(g.interior_mask)
        grad = sum(np.sum(Ml.dot(v.values[:, 0])**2) for Ml in T.parts["M"])
        self.assertEqual(round(T.apply(v).norm()**2 - grad*g.h**3, 8), 0)

    def test_green(self):
        """b_s(u, v) - ⟨Q_s(T)u, v⟩ = O(h²) on both closures"""
        s = SpectralParam.imaginary(1.5, E2)

        def dirichlet_gap(n):
            g = Grid(n, n, n, 1./(n-1))
            coeffs = CoefficientSet.from_specs(
                g, ["expr:sinusoidal:2,0.5,1", "expr:sinusoidal:2,0.5,2",
                    "constant:2"])
            f = lambda x, y, z: np.sin(pi*x)*np.sin(pi*y)*np.sin(pi*z)
            w = lambda x, y, z: np.sin(2*pi*x)*np.sin(pi*y)*np.sin(pi*z)
            u = QField.from_function(g, lambda x, y, z: np.outer(
                f(x, y, z), [1, 0.5, -0.3, 0.2])).restrict(g.interior_mask)
            v = QField.from_function(g, lambda x, y, z: np.outer(
                w(x, y, z), [0.3, 1, 0.2, -0.5])).restrict(g.interior_mask)
            form = BilinearForm(coeffs, g, s)
            return g.h, (form(u, v) - l2_inner(form.Q.apply(u), v)).norm()

        def robin_gap(n):
            g = Grid.unit_cube(n, "robin")
            coeffs = CoefficientSet.constant(g, 1.0, a_robin=0.0)
            f = lambda x, y, z: np.cos(pi*x)*np.cos(pi*y)
            u = mean_zero_project(QField.from_function(
                g, lambda x, y, z: np.outer(f(x, y, z), [1, 0.5, -0.3, 0.2])))
            v = mean_zero_project(QField.from_function(
                g, lambda x, y, z: np.outer(f(x, y, z) + np.cos(pi*z),
                                            [0.3, 1, 0.2, -0.5])))
            form = BilinearForm(coeffs, g, s)
            K = assemble_weak_Q(s, form.T)
            self.assertEqual(K.label, "K")
            diff = (form(u, v) - l2_inner(K.apply(u), v)).norm()
            self.assertTrue(diff < 1e-10*form(u, v).norm())
            return g.h, (form(u, v) - l2_inner(form.Q.apply(u), v)).norm()

        for gap in (dirichlet_gap, robin_gap):
            h, gaps = zip(*[gap(n) for n in (8, 16, 32)])
            self.assertTrue(min(gaps) > 0)
            self.assertTrue(loglog_slope(h, gaps) >= 1.8)
            self.assertTrue(log(gaps[1]/gaps[2])/log(h[1]/h[2]) >= 1.8)

    def test_bilinearForm(self):
        """Terms, admissible spaces and Sobolev norms"""
        g = Grid.unit_cube(5)
        coeffs = CoefficientSet.constant(g, 1.0)
        s = SpectralParam.imaginary(2.0)
        u = interior_field(g, 1)
        b = eval_bilinear(s, u, u, coeffs)
        self.assertTrue(b.real >= 4*u.norm()**2)
        self.assertEqual(round(b.q1, 10), 0)
        form = BilinearForm(coeffs, g, s)
        terms = form.terms(u, u)
        self.assertEqual(sorted(terms), ["first_order", "gradient", "mass",
                                         "vector"])
        self.assertEqual(round(terms["mass"].real - 4*u.norm()**2, 10), 0)
        self.assertRaises(ValueError, form, QField.random(g, 1), u)
        self.assertRaises(ValueError, BilinearForm, coeffs, g)

        T = form.T
        self.assertEqual(round(h1_norm(u, T)**2, 10),
                         round(u.norm()**2 + seminorm_D(u, T)**2, 10))
        self.assertEqual(round(terms["gradient"].real, 10),
                         round(seminorm_D(u, T)**2, 10))
        self.assertEqual(round(T.apply(u).norm()**2 -
                               terms["gradient"].real, 8), 0)

        r = Grid.unit_cube(5, "robin")
        coeffs = CoefficientSet.constant(r, 1.0, a_robin=0.5)
        form = BilinearForm(coeffs, r, s)
        u = mean_zero_project(QField.random(r, 2))
        terms = form.terms(u, u)
        self.assertIn("boundary", terms)
        self.assertTrue(terms["boundary"].real > 0)
        self.assertRaises(ValueError, form, QField.random(r, 2), u)

    def test_export(self):
        """QOP coordinate file of T"""
        folder = tempfile.mkdtemp()
        try:
            g = Grid.unit_cube(3)
            T = assemble_T(CoefficientSet.constant(g, 1.0))
            path = os.path.join(folder, "T.qop")
            export_operator(path, T)
            with open(path) as stream:
                lines = stream.read().splitlines()
            self.assertEqual(lines[0], "QOP,108,dirichlet,0.0,0.0")
            self.assertEqual(len(lines), T.matrix.nnz+1)
            rows = [tuple(int(c) for c in line.split(",")[:2])
                    for line in lines[1:]]
            self.assertEqual(rows, sorted(rows))
        finally:
            shutil.rmtree(folder)

    def test_constants(self):
        """C_T, C_T', M, K and the bounded/unbounded verdicts"""
        g = Grid.unit_cube(6)
        report = compute_constants(CoefficientSet.constant(g, 2.0))
        self.assertEqual(report.C_T, 4.0)
        self.assertEqual(report.C_T_prime, 0.0)
        self.assertEqual(report.M, 0.0)
        self.assertEqual(report.K3, 4.0)
        self.assertEqual(report.verdict_unbounded.status, "pass")
        self.assertEqual(report.verdict_unbounded.constant, 1.0)
        self.assertEqual(report.verdict_bounded.status, "pass")
        self.assertEqual(report.C_coercivity, 1.0)
        self.assertEqual(report.verdict_compat, None)
        self.assertEqual(report.C_dOmega_provenance, "heuristic")
        self.assertEqual(json.loads(json.dumps(report.as_dict()))["C_T"], 4.0)

        g = Grid.unit_cube(4)
        coeffs = CoefficientSet.from_specs(
            g, ["expr:affine:1,0.5", "constant:1", "constant:1"])
        report = compute_constants(coeffs)
        self.assertEqual(report.C_T, 1.0)
        self.assertEqual(round(report.C_T_prime, 12), 0.71875)
        self.assertTrue(report.M > 0)

        r = Grid.unit_cube(6, "robin")
        coeffs = CoefficientSet.constant(r, 2.0, a_robin=0.1)
        report = compute_constants(coeffs, c_trace=1.0)
        self.assertEqual(report.C_dOmega_provenance, "user")
        self.assertEqual(round(report.K_aOmega, 12), 0.1)
        self.assertEqual(round(report.kappa_Omega, 10),
                         round(4-0.1*(1+3/pi**2), 10))
        self.assertEqual(round(report.C_bounded, 10),
                         round((4-0.1*(1+3/pi**2))/4, 10))
        self.assertEqual(report.verdict().status, "pass")
        with self.assertWarns(UserWarning):
            compute_constants(coeffs)

        report = compute_constants(CoefficientSet.constant(r, 1.0,
                                                           a_robin=1.0),
                                   c_trace=1.0)
        self.assertEqual(report.verdict_bounded.status, "fail")
        self.assertEqual(report.kappa_Omega, None)
        self.assertEqual(report.C_coercivity, None)

        g = Grid.unit_cube(6)
        coeffs = CoefficientSet.from_specs(
            g, ["expr:sinusoidal:2,1,2", "constant:2", "constant:2"])
        report = compute_constants(coeffs)
        y = g.coords()[1]
        scan = 0.0
        for node in range(g.N):
            # only a2·∂2a1 = 2cos(x2) survives
            terms = [2*np.cos(y[node]) if (i, l) == (1, 0) else 0.0
                     for i in range(3) for l in range(3)]
            scan = max(scan, sum(abs(t) for t in terms))
        self.assertEqual(round(report.C_T_prime, 12), round(scan, 12))
        self.assertEqual(round(scan, 12), round(2*np.cos(1/12.), 12))

        scaled = compute_constants(coeffs.scaled(2))
        self.assertEqual(round(scaled.C_T/report.C_T, 12), 4.0)
        self.assertEqual(round(scaled.C_T_prime/report.C_T_prime, 12), 4.0)
        self.assertEqual(round(scaled.M/report.M, 12), 4.0)

        fake = SimpleNamespace(M=float("inf"), C_T=1.0, K3=4.0)
        self.assertEqual(check_unbounded(fake).status, "inconclusive")

    def test_unboundedSweep(self):
        """Gaussian perturbations flip the unbounded verdict near 0.03"""
        g = Grid(25, 25, 25, 0.25, (-3, -3, -3))
        status = []
        for eps in (0.001, 0.01, 0.1, 1):
            coeffs = CoefficientSet.from_specs(
                g, ["expr:gaussian-decay:1,%g" % eps]*3)
            status.append(compute_constants(coeffs).verdict_unbounded.status)
        self.assertEqual(status, ["pass", "pass", "fail", "fail"])

        def M(n):
            o = -(n-1)/2.*0.5
            g = Grid(n, n, n, 0.5, (o, o, o))
            coeffs = CoefficientSet.from_specs(
                g, ["expr:gaussian-decay:1,0.1,1"]*3)
            return compute_constants(coeffs).M
        self.assertTrue(abs(M(16)/M(24)-1) < 0.01)

    def test_compatibility(self):
        """Robin-type rows equal μ times the physical rows"""
        r = Grid.unit_cube(4, "robin")
        coeffs = CoefficientSet.constant(r, 3.0, a_robin=0.9, b_phys=0.3,
                                         mu=3.0)
        verdict = check_compatibility(coeffs)
        self.assertEqual(verdict.status, "pass")
        self.assertEqual(verdict.constant, 3.0)
        self.assertTrue(compute_constants(coeffs).verdict_compat.passed)

        # boundary data on a Dirichlet grid
        g = Grid.unit_cube(4)
        coeffs = CoefficientSet.constant(g, 3.0, a_robin=0.9, b_phys=0.3,
                                         mu=3.0)
        report = compute_constants(coeffs, c_trace=1.0)
        self.assertEqual(report.compat_mu, 3.0)
        self.assertEqual(report.verdict_compat.status, "pass")
        self.assertEqual(report.verdict_unbounded.status, "pass")

        coeffs = CoefficientSet.constant(r, 3.0, a_robin=0.7, b_phys=0.3,
                                         mu=3.0)
        verdict = check_compatibility(coeffs)
        self.assertEqual(verdict.status, "fail")
        self.assertIn("node", verdict.detail)

        a = np.full((3, r.N), 3.0)
        a[1, 0] = 2.5
        coeffs = CoefficientSet(r, a, a_robin=0.9, b_phys=0.3, mu=3.0)
        verdict = check_compatibility(coeffs)
        self.assertEqual(verdict.status, "fail")
        self.assertIn("node 0 (0, 0, 0)", verdict.detail)

        coeffs = CoefficientSet.constant(r, 2.0)
        self.assertEqual(check_compatibility(coeffs).status, "inconclusive")

    def test_coercivity(self):
        """Continuity and coercivity constants of b_s"""
        self.assertEqual(gagliardo_nirenberg_constant(3), 4.0)
        self.assertEqual(gagliardo_nirenberg_constant(4), 3.0)
        self.assertRaises(ValueError, gagliardo_nirenberg_constant, 2)
        self.assertEqual(theta_formula(0.25), 4.0)
        self.assertEqual(theta_formula(4), 2.0)
        self.assertEqual(theta_formula(None), None)

        g = Grid.unit_cube(6)
        report = compute_constants(CoefficientSet.constant(g, 2.0))
        s = SpectralParam.imaginary(3.0)
        self.assertEqual(continuity_constant(report, s), 13.0)
        self.assertEqual(coercivity_constant(report, 0.5), 0.25)
        self.assertEqual(coercivity_constant(report, 5), 4.0)

        g = Grid.unit_cube(12)
        coeffs = CoefficientSet.from_specs(
            g, ["expr:sinusoidal:2,0.1,2", "constant:2", "constant:2"])
        report = compute_constants(coeffs)
        kappa = report.verdict_unbounded.margin
        self.assertTrue(kappa > 0)
        sample = coercivity_sample(coeffs, 1.0, kappa, n_samples=10, seed=1)
        self.assertTrue(sample["mass"] >= -1e-10)
        self.assertTrue(sample["seminorm"] >= -1e-10)

        r = Grid.unit_cube(6, "robin")
        coeffs = CoefficientSet.from_specs(
            r, ["expr:sinusoidal:2,0.1,2", "constant:2", "constant:2"],
            a_robin=0.1)
        report = compute_constants(coeffs, c_trace=1.0)
        self.assertEqual(report.verdict_bounded.status, "pass")
        sample = coercivity_sample(coeffs, 1.0, report.kappa_Omega,
                                   n_samples=100, seed=2)
        self.assertTrue(sample["mass"] >= 0)
        self.assertTrue(sample["seminorm"] >= 0)

    def test_solveQ(self):
        """Q_s(T)u = F on Dirichlet, zero and mean-zero problems"""
        g = Grid.unit_cube(6)
        T = assemble_T(sinusoidal_coefficients(g))
        s = SpectralParam.imaginary(2.0, E3)
        F = interior_field(g, 1)
        u = solve_Q(s, F, T)
        Q = assemble_Q(s, T)
        self.assertTrue((Q.apply(u) - F).norm() < 1e-9*F.norm())
        u2 = solve_Q(s, F, T, SolveOptions(method="iterative", rel_tol=1e-8))
        self.assertTrue((u2 - u).norm() < 1e-6*u.norm())
        self.assertRaises(ValueError, solve_Q, Quaternion(0), F, T)
        self.assertRaises(ValueError, SolveOptions, method="cholesky")
        starved = SolveOptions(method="iterative", rel_tol=1e-12, max_iter=1,
                               restart=2)
        self.assertRaises(SolverError, solve_Q, s, F, T, starved)
        iterative = SolveOptions(method="iterative", rel_tol=1e-8)
        with mock.patch("sfrac.resolvent.gmres",
                        return_value=(np.zeros(4*g.N), 0)):
            for apply in (apply_SR, apply_SL, solve_Q):
                with self.assertRaises(SolverError) as error:
                    apply(s, F, T, iterative)
                self.assertIn("Residual", str(error.exception))

        Z = AssembledOperator.zero(g)
        u = solve_Q(SpectralParam.imaginary(2.0), F, Z)
        self.assertTrue(np.allclose(u.values, F.values/4))

        r = Grid.unit_cube(5, "robin")
        T = assemble_T(CoefficientSet.constant(r, 1.0))
        opts = SolveOptions(mean_zero_enforce=True, rel_tol=1e-8)
        F = mean_zero_project(QField.random(r, 2))
        u = solve_Q(SpectralParam.imaginary(3.0), F, T, opts)
        self.assertTrue(u.mean_zero)
        self.assertTrue(np.max(np.abs(u.values.mean(axis=0))) < 1e-12)
        self.assertRaises(ValueError, Resolvent, assemble_T(
            CoefficientSet.constant(g, 1.0)), opts)

    def test_resolventEquations(self):
        """Right and left S-resolvent equations and the scalar oracle"""
        g = Grid.unit_cube(5)
        T = assemble_T(sinusoidal_coefficients(g))
        v = QField.random(g, 6)
        for s in (Quaternion(0.5, 0, 2, 0), SpectralParam.imaginary(-1.5)):
            right, left = resolvent_equation_error(s, v, T)
            self.assertTrue(right < 1e-8)
            self.assertTrue(left < 1e-8)

        g = Grid.unit_cube(12)
        T = assemble_T(CoefficientSet.constant(g, 1.0))
        v = QField.random(g, 7)
        for t in np.logspace(-2, 2, 20):
            errors = resolvent_equation_error(
                SpectralParam.imaginary(t, E2), v, T)
            self.assertTrue(max(errors) <= 1e-8)

        q = Quaternion(1, 0, 1, 0)
        M = AssembledOperator.from_quaternion_matrix(q.array.reshape(1, 1, 4))
        s = SpectralParam(Quaternion(0.2, 1.5, 0, 0.5))
        w = apply_SR(s, [[1., 0, 0, 0]], M)
        self.assertTrue(np.allclose(w[0], dense_scalar_resolvent(q, s).array))

    def test_normEstimate(self):
        """Power iteration on AᵀA"""
        rng = np.random.default_rng(0)
        U, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        V, _ = np.linalg.qr(rng.standard_normal((6, 6)))
        A = U.dot(np.diag([5, 2, 1, 1, 0.5, 0.1])).dot(V.T)
        estimate = op_norm_estimate(A)
        self.assertTrue(estimate.converged)
        self.assertAlmostEqual(estimate.value, 5.0, places=5)
        self.assertEqual(round(float(op_norm_estimate(3*np.eye(5))), 12), 3.0)
        mask = np.array([True, True, False, False, True])
        self.assertEqual(round(op_norm_estimate(np.diag([1., 2, 7, 9, 3]),
                                                mask).value, 5), 3.0)

    def test_resolventScan(self):
        """t²‖Q⁻¹‖ ≤ 1 and t‖S⁻¹‖ ≤ Θ for constant coefficients"""
        g = Grid.unit_cube(6)
        T = assemble_T(CoefficientSet.constant(g, 1.0))
        scan = resolvent_scan(T, 0.1, 10, 3, C=1.0)
        self.assertEqual(len(scan.t), 3)
        self.assertEqual(scan.errors, {})
        self.assertTrue(scan.sup_t2normQinv <= 1+1e-6)
        self.assertTrue(scan.theta_hat <= 1.5+1e-6)
        self.assertTrue(scan.verdict_ei2().passed)
        self.assertTrue(scan.verdict_theta().passed)
        self.assertTrue(scan.verdict_TQinv().passed)
        self.assertEqual(scan.theta_formula, 2.0)
        self.assertRaises(ValueError, resolvent_scan, T, 1, 0.1, 3)

        g = Grid.unit_cube(12)
        fine = resolvent_scan(assemble_T(CoefficientSet.constant(g, 1.0)),
                              0.1, 10, 5, tol=1e-4, max_iter=100)
        self.assertEqual(fine.errors, {})
        self.assertTrue(fine.sup_t2normQinv <= 1.05)
        g = Grid.unit_cube(24)
        fine = assemble_T(CoefficientSet.constant(g, 1.0))
        resolvent = Resolvent(fine)
        for t in (0.1, 1.0, 10.0):
            ops = resolvent.linear_operators(SpectralParam.imaginary(t))
            norm = op_norm_estimate(ops["Qinv"], fine.mask, 1e-4, 100)
            self.assertTrue(t**2*norm.value <= 1.01)

        folder = tempfile.mkdtemp()
        try:
            path = os.path.join(folder, "scan.csv")
            scan.to_csv(path)
            with open(path) as stream:
                lines = stream.read().splitlines()
            self.assertEqual(lines[0], "t,normQinv,normSL,normSR,t2normQinv,"
                             "tnormSL,tnormSR,normTQinv,tnormTQinv")
            self.assertEqual(len(lines), 4)
            path = os.path.join(folder, "scan.json")
            scan.to_json(path)
            with open(path) as stream:
                doc = json.load(stream)
            self.assertEqual(doc["verdict_ei2"]["status"], "pass")
        finally:
            shutil.rmtree(folder)

    def test_quadrature(self):
        """Gauss-Legendre panels and quadrature settings"""
        u, w = gauss_legendre_panels(10, 1.0)
        self.assertEqual(len(u), 16)
        self.assertEqual(round(np.sum(w), 12), 2.0)
        self.assertEqual(round(np.sum(w*u**2), 12), round(2/3., 12))
        self.assertTrue(np.all(np.abs(u) < 1))

        self.assertRaises(ValueError, QuadratureSpec, alpha=1.2)
        self.assertRaises(ValueError, QuadratureSpec, alpha=0)
        self.assertRaises(ValueError, QuadratureSpec, alpha=0.5, side="up")
        self.assertRaises(ValueError, QuadratureSpec, alpha=0.5, n_nodes=4)
        self.assertRaises(ValueError, QuadratureSpec, alpha=0.5, axis=E1+E2)
        spec = QuadratureSpec(alpha=0.5)
        self.assertEqual(spec.copy(n_nodes=64).n_nodes, 64)
        self.assertEqual(spec.n_nodes, 400)
        self.assertEqual(orientation(), -1.0)

    def test_fracPowerScalar(self):
        """P_α of a 1×1 quaternion matrix is the slice power"""
        T = AssembledOperator.from_quaternion_matrix([[[4., 0, 0, 0]]])
        report = frac_power_apply(QuadratureSpec(alpha=0.5), [[1., 0, 0, 0]],
                                  T)
        self.assertEqual(round(report.result[0, 0], 8), 2.0)
        self.assertTrue(report.error_estimate < 1e-8)

        q = Quaternion(1, 0, 1, 0)
        T = AssembledOperator.from_quaternion_matrix(q.array.reshape(1, 1, 4))
        for alpha, side, axis in ((0.5, "right", E1), (0.3, "left", E1),
                                  (0.7, "right", E3)):
            spec = QuadratureSpec(alpha=alpha, n_nodes=800, side=side,
                                  axis=axis)
            report = frac_power_apply(spec, [[1., 0, 0, 0]], T,
                                      estimate_error=False)
            self.assertTrue(np.allclose(report.result[0],
                                        quat_pow(q, alpha).array, atol=1e-7))
            self.assertEqual(report.error_estimate, None)

        table = convergence_report(QuadratureSpec(alpha=0.5), [[1., 0, 0, 0]],
                                   AssembledOperator.from_quaternion_matrix(
                                       [[[4., 0, 0, 0]]]))
        self.assertTrue(table["tail_ok"])
        self.assertTrue(table["near_zero_ok"])
        self.assertEqual(round(table["tail_slope"], 3), -1.5)
        self.assertEqual(round(table["near_zero_slope"], 3), -0.5)
        self.assertTrue(table["delta_doubling"] < 1e-8)
        self.assertTrue(table["delta_trunc"] <= 1e-8)

        # v in the kernel of T
        M = np.zeros((2, 2, 4))
        M[1, 1] = [2, 1, 0, 0]
        T = AssembledOperator.from_quaternion_matrix(M)
        v = np.array([[1, 0.5, -0.3, 0.2], [0, 0, 0, 0]])
        self.assertTrue(np.allclose(T.apply(v), 0))
        for side in ("right", "left"):
            report = frac_power_apply(QuadratureSpec(alpha=0.5, side=side),
                                      v, T, estimate_error=False)
            self.assertTrue(np.linalg.norm(report.result) < 1e-12)
        Z = AssembledOperator.zero(Grid.unit_cube(3))
        report = frac_power_apply(QuadratureSpec(alpha=0.5, n_nodes=64),
                                  QField.random(Z.grid, 1), Z,
                                  estimate_error=False)
        self.assertTrue(report.result.norm() < 1e-12)

    def test_matrixOracle(self):
        """Quadrature against the complex adjoint eigendecomposition"""
        M, v = random_test_matrix(4, 7)
        self.assertEqual(M.shape, (4, 4, 4))
        self.assertEqual(v.shape, (4, 4))
        P, cond = adjoint_power(M, 0.5)
        self.assertTrue(np.allclose(qmatmul(P, P), M))
        self.assertTrue(cond >= 1)
        self.assertRaises(ValueError, adjoint_power, [[[-1., 0, 0, 0]]], 0.5)

        report = matrix_oracle(4, 7, 0.5)
        self.assertTrue(report.rel_diff < 1e-6)
        self.assertTrue(report.composition_error < 1e-6)
        report = matrix_oracle(4, 7, 0.3, side="left", composition=False)
        self.assertTrue(report.rel_diff < 1e-6)
        self.assertEqual(report.as_dict()["composition_error"], None)
        report = matrix_oracle(3, 2, 0.6, axis=E2, composition=False)
        self.assertTrue(report.rel_diff < 1e-6)

        for seed in range(5):
            for alpha in (0.25, 0.5, 0.75):
                right = matrix_oracle(8, seed, alpha, composition=False)
                left = matrix_oracle(8, seed, alpha, side="left",
                                     composition=False)
                self.assertTrue(right.rel_diff <= 1e-8)
                self.assertTrue(left.rel_diff <= 1e-8)
                diff = np.linalg.norm(left.quadrature-right.quadrature)
                self.assertTrue(diff <= 1e-8*np.linalg.norm(right.oracle))

        # P_α(T)v approaches Tv as α grows to 1
        M, v = random_test_matrix(8, 3)
        Tv = AssembledOperator.from_quaternion_matrix(M).apply(v)
        gaps = []
        for alpha in (0.9, 0.95, 0.99):
            report = matrix_oracle(8, 3, alpha, composition=False)
            self.assertTrue(report.rel_diff <= 1e-6)
            gaps.append(np.linalg.norm(report.quadrature-Tv))
        self.assertTrue(gaps[0] > gaps[1] > gaps[2])

    def test_fracPowerGrid(self):
        """P_α(T)v on a grid, independent of the worker count"""
        g = Grid.unit_cube(6)
        T = assemble_T(CoefficientSet.constant(g, 1.0))
        v = interior_field(g, 3)
        spec = QuadratureSpec(alpha=0.5, n_nodes=16, trunc=10)
        serial = frac_power_apply(spec, v, T, threads=1,
                                  estimate_error=False)
        parallel = frac_power_apply(spec, v, T, threads=3,
                                    estimate_error=False)
        self.assertTrue(np.array_equal(serial.result.values,
                                       parallel.result.values))
        self.assertTrue(np.all(np.isfinite(serial.result.values)))
        self.assertEqual(sorted(serial.segments),
                         ["near_zero", "tail_negative", "tail_positive"])
        self.assertEqual(len(serial.integrand_norms), 16)

    def test_utils(self):
        """Verdicts, hashing, slopes and worker settings"""
        self.assertRaises(ValueError, Verdict, "maybe")
        verdict = Verdict("pass", 0.5, float("inf"))
        self.assertTrue(verdict)
        self.assertEqual(verdict.as_dict()["constant"], None)
        self.assertFalse(Verdict("inconclusive"))

        self.assertEqual(config_hash({"a": 1, "b": [1, 2]}),
                         config_hash({"b": [1, 2], "a": 1}))
        self.assertNotEqual(config_hash({"a": 1}), config_hash({"a": 2}))
        self.assertEqual(round(loglog_slope([1, 2, 4], [1, 4, 16]), 12), 2.0)
        self.assertTrue(np.isnan(loglog_slope([1], [1])))
        with self.assertRaises(ValueError) as error:
            check_finite([[1, 2], [3, np.nan]], "table")
        self.assertIn("(1, 1)", str(error.exception))

        self.assertEqual(thread_count(2), 2)
        with mock.patch.dict(os.environ, {"SFRAC_THREADS": "3"}):
            self.assertEqual(thread_count(), 3)
        with mock.patch.dict(os.environ, {"SFRAC_THREADS": ""}):
            self.assertEqual(thread_count(), 1)
        self.assertRaises(ValueError, thread_count, 0)
        self.assertEqual(ordered_map(lambda x: x*x, range(10), 3),
                         [x*x for x in range(10)])
        self.assertRaises(ValueError, SolveOptions, tolerance=1)

    def test_config(self):
        """Problem configuration and its validation paths"""
        config = ProblemConfig(document={})
        self.assertEqual(config.grid.N, 512)
        self.assertEqual(config.operator, "T")
        self.assertEqual(config.solve_options.rel_tol, 1e-10)
        self.assertEqual(config.quadrature["axis"], E1)
        self.assertEqual(len(config.sha256), 64)
        self.assertEqual(config.sha256, ProblemConfig(document={}).sha256)

        for document, path in (({"grid": {"nx": 2}}, "grid.nx"),
                               ({"grid": {"h": -1}}, "grid.h"),
                               ({"grid": {"depth": 3}}, "grid.depth"),
                               ({"foo": 1}, "foo"),
                               ({"boundary": {"kind": "free"}},
                                "boundary.kind"),
                               ({"coefficients": {"a1": "bogus"}},
                                "coefficients.a1"),
                               ({"coefficients": {"a2": "file:none.csv"}},
                                "coefficients.a2"),
                               ({"solver": {"method": "magic"}}, "solver"),
                               ({"operator": "T2"}, "operator"),
                               ({"trace_constant": -1}, "trace_constant"),
                               ({"quadrature": {"axis": "e4"}},
                                "quadrature.axis")):
            with self.assertRaises(ConfigError) as error:
                ProblemConfig(document=document)
            self.assertEqual(error.exception.path, path)

        self.assertEqual(parse_axis("e2"), E2)
        self.assertEqual(parse_axis("random:5"), random_axis(5))
        self.assertRaises(ConfigError, parse_axis, "random:x")

        folder = tempfile.mkdtemp()
        try:
            g = Grid(4, 4, 4, 0.25, (0.125, 0.125, 0.125))
            save_coefficient(os.path.join(folder, "a1.csv"), g,
                             1+0.5*g.coords()[0])
            path = os.path.join(folder, "problem.json")
            with open(path, "w") as stream:
                json.dump({"grid": {"nx": 4, "ny": 4, "nz": 4, "h": 0.25,
                                    "origin": [0.125, 0.125, 0.125]},
                           "coefficients": {"a1": "file:a1.csv"}}, stream)
            config = ProblemConfig.from_file(path)
            self.assertTrue(np.allclose(config.coeffs.grad[0][0], 0.5))
            with open(path, "w") as stream:
                stream.write("{not json")
            self.assertRaises(ConfigError, ProblemConfig.from_file, path)
        finally:
            shutil.rmtree(folder)

    def test_cli(self):
        """Commands, artifacts and exit codes"""
        folder = tempfile.mkdtemp()

        def run(*argv):
            with redirect_stdout(io.StringIO()):
                return main(list(argv) + ["--output-dir", folder, "--quiet"])

        def read(name):
            with open(os.path.join(folder, name)) as stream:
                return json.load(stream)

        def config(name, document):
            path = os.path.join(folder, name)
            with open(path, "w") as stream:
                json.dump(document, stream)
            return path

        grid = {"nx": 4, "ny": 4, "nz": 4, "h": 0.25,
                "origin": [0.125, 0.125, 0.125]}
        try:
            self.assertEqual(run("check"), 0)
            doc = read("conditions.json")
            self.assertEqual(doc["verdict_bounded"]["status"], "pass")
            self.assertEqual(doc["verdict_unbounded"]["status"], "pass")
            manifest = read("manifest.json")
            self.assertEqual(manifest["command"], "check")
            self.assertEqual(manifest["status"], 0)
            self.assertEqual(len(manifest["config_sha256"]), 64)
            self.assertIn("numpy", manifest["versions"])

            bad = config("bad.json", {"coefficients": {
                "a1": "expr:affine:1,5,0,0"}})
            self.assertEqual(run("check", "--config", bad), 0)
            self.assertEqual(run("check", "--config", bad, "--strict"), 3)
            self.assertEqual(run("check", "--config", config(
                "broken.json", {"grid": {"nx": 2}})), 2)
            self.assertEqual(run("check", "--config",
                                 os.path.join(folder, "missing.json")), 2)
            self.assertEqual(run("check", "--threads", "0"), 2)

            compat = config("compat.json", {
                "boundary": {"kind": "robin", "a_robin": "constant:0.6",
                             "b_phys": "constant:0.3", "mu": 2},
                "coefficients": {"a1": "constant:2", "a2": "constant:2",
                                 "a3": "constant:2"}})
            self.assertEqual(run("compat-check", "--config", compat,
                                 "--strict"), 0)
            self.assertEqual(read("compat.json")["status"], "pass")

            zero = config("zero.json", {"grid": grid, "operator": "zero"})
            g = Grid(4, 4, 4, 0.25, (0.125, 0.125, 0.125))
            F = QField.random(g, 5)
            rhs = os.path.join(folder, "F.csv")
            out = os.path.join(folder, "u.csv")
            save_field(rhs, F)
            self.assertEqual(run("solve", "--config", zero, "--s1", "2",
                                 "--rhs", rhs, "--out", out), 0)
            self.assertTrue(np.allclose(load_field(out).values, F.values/4))
            self.assertEqual(read("manifest.json")["command"], "solve")
            self.assertEqual(run("solve", "--s1", "2", "--rhs", rhs, "--out",
                                 out), 2)

            small = config("small.json", {"grid": grid})
            v = os.path.join(folder, "v.csv")
            save_field(v, interior_field(g, 2))
            p = os.path.join(folder, "p.csv")
            self.assertEqual(run("frac-power", "--config", small, "--alpha",
                                 "0.5", "--nodes", "16", "--trunc", "10",
                                 "--input", v, "--output", p), 0)
            self.assertTrue(np.all(np.isfinite(load_field(p).values)))
            self.assertEqual(read("fracpower.json")["spec"]["n_nodes"], 16)
            self.assertEqual(run("frac-power", "--config", small, "--alpha",
                                 "1.5", "--input", v, "--output", p), 2)

            self.assertEqual(run("scan-resolvent", "--config", small,
                                 "--t-min", "0.5", "--t-max", "5",
                                 "--points", "2"), 0)
            with open(os.path.join(folder, "scan.csv")) as stream:
                self.assertEqual(len(stream.read().splitlines()), 3)
            self.assertEqual(read("scan.json")["verdict_ei2"]["status"],
                             "pass")

            self.assertEqual(run("oracle-matrix", "--size", "3", "--alpha",
                                 "0.5", "--seed", "1", "--nodes", "400"), 0)
            self.assertTrue(read("oracle.json")["rel_diff"] < 1e-4)
        finally:
            shutil.rmtree(folder)


if __name__ == "__main__":
    unittest.main(verbosity=2)
