import os
import sys
import argparse
import unittest
import numpy as np
from numpy.testing import assert_allclose
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from ncrat.errors import (
    NotSymmetricFunction, OutsideFormalDomain, PencilSingular, ShapeMismatch, ValueAtZeroSingular,
)
from ncrat.ncalg import MatrixTuple, SamplingBox, Word, eval_expr, series_coefficients
from ncrat.parser import parse_expression
from ncrat.realization import (
    DescriptorRealization, Variant, direct_sum_realization, eval_realization, invert_realization,
    minimality_check, minimize, product_realization, realize, realize_symmetric, symmetrize,
)

CORPUS = [
    ("1 + 4*inv(4 + x1*x1)", 1),
    ("inv(1 - x1)", 1),
    ("x1*inv(1 - x2*x1)", 2),
    ("inv(2 - inv(3 - inv(4 - x1)))", 1),
    ("[1, x1; x2, 2]", 2),
    ("inv([2, x1; x1, 2])", 1),
    ("[1, x1] * [x2; 1]", 2),
    ("T(x1*x2) + x1", 2),
    ("-x1 + 2*x2*x2 - 0.5", 2),
    ("inv(1 + x1*x1 + x2*x2)", 2),
    ("inv(1 - [0, x1; x2, 0])", 2),
    ("3*inv(1 - 0.25*x1*x2*x1) - x2", 2),
    ("(1 + x1)*inv(1 - x1)", 1),
    ("[1, x1]", 2),
]


def closed_form():
    """Symmetric realization of 1 + 4(4 + x²)⁻¹."""
    return DescriptorRealization(np.diag([1.0, -1.0]), [[[0, 0.5], [0.5, 0]]], [[1.0], [0.0]], [[1.0]],
                                 Variant.SYMMETRIC)


def hidden_constant():
    """Non-minimal symmetric realization of the constant 1."""
    return DescriptorRealization(np.eye(2), [np.diag([0.0, 1.0])], [[1.0], [0.0]], [[0.0]], Variant.SYMMETRIC)


def relative_gap(v1, v2):
    return float(np.linalg.norm(v1 - v2)) / (1.0 + float(np.linalg.norm(v1)))


class testingDescriptorRealization(unittest.TestCase):
    def test_ClosedFormValues(self):
        R = closed_form()
        assert_allclose(R.evaluate(MatrixTuple.scalars([2.0])), [[1.5]])
        assert_allclose(R.value_at_zero(), [[2.0]])
        X = MatrixTuple([[[0.3, 0.1], [0.1, -0.2]]])
        expected = np.eye(2) + 4 * np.linalg.inv(4 * np.eye(2) + X[0] @ X[0])
        assert_allclose(R.evaluate(X), expected, rtol=1e-12)
        assert_allclose(eval_realization(R, X), R.evaluate(X))

    def test_Series(self):
        coeffs = closed_form().series_coefficients(4)
        assert_allclose(coeffs[Word()], [[2.0]])
        assert_allclose(coeffs[Word((1,))], [[0.0]], atol=1e-15)
        assert_allclose(coeffs[Word((1, 1))], [[-0.25]])

    def test_SymmetricChecks(self):
        with self.assertRaises(ShapeMismatch):
            DescriptorRealization(np.diag([2.0, 1.0]), [np.eye(2)], np.eye(2), np.eye(2), Variant.SYMMETRIC)
        with self.assertRaises(ShapeMismatch):
            DescriptorRealization(np.eye(2), [[[0, 1], [0, 0]]], np.eye(2), np.eye(2), Variant.SYMMETRIC)

    def test_RectangularNeedsB(self):
        with self.assertRaises(ShapeMismatch):
            DescriptorRealization(np.eye(1), [np.eye(1)], [[1.0, 0.0]], [[1.0, 2.0]])

    def test_PencilSingular(self):
        R = realize(parse_expression("inv(1 - x1)", 1))
        with self.assertRaises(PencilSingular):
            R.evaluate(MatrixTuple.scalars([1.0]))

    def test_NearSingularAgainstPencilScale(self):
        R = realize(parse_expression("inv(1 - x1)", 1))
        for x in (1.0 + 4.4e-16, 1.0 - 1e-10, 1.0 + 1e-12):
            with self.assertRaises(PencilSingular, msg=f"x={x!r}"):
                R.evaluate(MatrixTuple.scalars([x]))
        assert_allclose(R.evaluate(MatrixTuple.scalars([1.0 - 1e-6])), [[1e6]], rtol=1e-6)
        with self.assertRaises(OutsideFormalDomain):
            eval_expr(parse_expression("inv(1 - x1)", 1), MatrixTuple.scalars([1.0]))

    def test_SymmetricKeepsNonsymmetricFeedthrough(self):
        S = DescriptorRealization(np.eye(2), [np.diag([0.5, 0.2])], np.eye(2), [[1.0, 2.0], [0.0, 1.0]],
                                  Variant.SYMMETRIC)
        assert_allclose(S.value_at_zero(), [[2.0, 2.0], [0.0, 2.0]])
        assert_allclose(S.evaluate(MatrixTuple.zeros(1, 1)), S.value_at_zero(), atol=1e-15)
        x = 0.5
        expected = np.array([[1.0, 2.0], [0.0, 1.0]]) + np.diag([1 / (1 - 0.5 * x), 1 / (1 - 0.2 * x)])
        assert_allclose(S.evaluate(MatrixTuple.scalars([x])), expected, rtol=1e-12)

    def test_SerializeRoundTrip(self):
        R = realize(parse_expression("x1*inv(1 - x2*x1)", 2))
        again = DescriptorRealization.deserialize(R.serialize())
        self.assertEqual(again.variant, R.variant)
        self.assertEqual(again.explicit_b, R.explicit_b)
        X = SamplingBox(count=1, sizes=(3,), seed=4).samples(2)[0]
        assert_allclose(again.evaluate(X), R.evaluate(X))

    def test_ConstantRealization(self):
        R = DescriptorRealization.constant([[1.0, 2.0], [3.0, 4.0]], 2)
        self.assertEqual(R.d, 0)
        X = MatrixTuple.scalars([5.0, 6.0])
        assert_allclose(R.evaluate(X), [[1.0, 2.0], [3.0, 4.0]])

    def test_Transposed(self):
        R = realize(parse_expression("[1, x1] * [x2; 1] + x1*x2", 2))
        X = SamplingBox(count=1, sizes=(2,), seed=5).samples(2)[0]
        assert_allclose(R.transposed().evaluate(X), R.evaluate(X).T, rtol=1e-12, atol=1e-14)
        S = DescriptorRealization(np.eye(2), [np.diag([0.5, 0.2])], np.eye(2), [[1.0, 2.0], [0.0, 1.0]],
                                  Variant.SYMMETRIC)
        X = MatrixTuple.scalars([0.5])
        assert_allclose(S.transposed().evaluate(X), S.evaluate(X).T, rtol=1e-12)
        self.assertTrue(S.transposed().is_symmetric, msg="transpose keeps the Symmetric variant")


class testingRealize(unittest.TestCase):
    def test_CorpusAgreesWithExpressions(self):
        for text, g in CORPUS:
            e = parse_expression(text, g)
            R = realize(e)
            self.assertEqual(R.shape, e.shape, msg=text)
            for X in SamplingBox(count=40, seed=11).samples(g):
                gap = relative_gap(eval_expr(e, X), R.evaluate(X))
                self.assertLessEqual(gap, 1e-9, msg=f"{text} at n={X.n}")

    def test_CorpusIsMinimal(self):
        for text, g in CORPUS:
            R = realize(parse_expression(text, g))
            self.assertTrue(minimality_check(R)[0], msg=f"{text} realized with d={R.d}")

    def test_GeometricIsOneDimensional(self):
        R = realize(parse_expression("inv(1 - x1)", 1))
        self.assertEqual(R.d, 1, msg="the smaller inverse candidate should be kept")
        assert_allclose(R.evaluate(MatrixTuple.scalars([0.5])), [[2.0]])

    def test_SeriesMatchesExpression(self):
        for text, g in CORPUS[:6]:
            e = parse_expression(text, g)
            expected = series_coefficients(e, 4)
            actual = realize(e).series_coefficients(4)
            for w, c in expected.items():
                assert_allclose(actual[w], c, atol=1e-10, err_msg=f"{text}, word {w}")


class testingMinimize(unittest.TestCase):
    def test_MinimalityOfClosedForm(self):
        self.assertEqual(minimality_check(closed_form()), (True, 2, 2))

    def test_HiddenConstant(self):
        R = hidden_constant()
        self.assertEqual(minimality_check(R), (False, 1, 1))
        M = minimize(R)
        self.assertEqual(M.d, 1)
        self.assertTrue(M.is_symmetric, msg="minimizing a symmetric realization should keep it symmetric")
        X = MatrixTuple.scalars([0.7])
        assert_allclose(M.evaluate(X), R.evaluate(X), atol=1e-12)

    def test_MinimalIsUnchanged(self):
        R = closed_form()
        self.assertIs(minimize(R), R)

    def test_Idempotent(self):
        R = minimize(direct_sum_realization(closed_form().as_general(), closed_form().as_general()))
        self.assertEqual(R.d, 2, msg="r + r has the same pole structure as r")
        self.assertIs(minimize(R), R)

    def test_ProductShapes(self):
        left = realize(parse_expression("[1, x1]", 1))
        right = realize(parse_expression("[x1; 1]", 1))
        P = product_realization(left, right)
        self.assertEqual(P.shape, (1, 1))
        assert_allclose(P.evaluate(MatrixTuple.scalars([3.0])), [[6.0]])
        with self.assertRaises(ShapeMismatch):
            product_realization(left, left)


class testingInvert(unittest.TestCase):
    def test_InverseTimesOriginal(self):
        for text, g in [("1 + 4*inv(4 + x1*x1)", 1), ("1 - x1", 1), ("[2, x1; x2, 2]", 2),
                        ("inv(1 + x1*x1 + x2*x2)", 2), ("3*inv(1 - 0.25*x1*x2*x1) - x2", 2)]:
            R = realize(parse_expression(text, g))
            Rinv = invert_realization(R)
            for X in SamplingBox(count=20, seed=2).samples(g):
                product = R.evaluate(X) @ Rinv.evaluate(X)
                assert_allclose(product, np.eye(product.shape[0]), atol=1e-8, err_msg=text)

    def test_DoubleInverse(self):
        R = realize(parse_expression("1 + x1*x2 + x2*x1", 2))
        back = invert_realization(invert_realization(R))
        for X in SamplingBox(count=10, seed=9).samples(2):
            self.assertLessEqual(relative_gap(R.evaluate(X), back.evaluate(X)), 1e-9)

    def test_SymmetricStaysSymmetric(self):
        Rinv = invert_realization(closed_form())
        self.assertTrue(Rinv.is_symmetric)
        assert_allclose(Rinv.evaluate(MatrixTuple.scalars([2.0])), [[1 / 1.5]])

    def test_SingularAtZero(self):
        with self.assertRaises(ValueAtZeroSingular):
            invert_realization(realize(parse_expression("x1", 1)))


class testingSymmetrize(unittest.TestCase):
    def test_ClosedForm(self):
        e = parse_expression("1 + 4*inv(4 + x1*x1)", 1)
        S = realize_symmetric(e)
        self.assertTrue(S.is_symmetric)
        assert_allclose(S.J @ S.J, np.eye(S.d), atol=1e-12)
        for X in SamplingBox(count=20, seed=6).samples(1):
            self.assertLessEqual(relative_gap(eval_expr(e, X), S.evaluate(X)), 1e-8)

    def test_TwoVariables(self):
        e = parse_expression("inv(1 + x1*x1 + x2*x2)", 2)
        S = realize_symmetric(e)
        self.assertTrue(S.is_symmetric)
        for X in SamplingBox(count=20, seed=6).samples(2):
            self.assertLessEqual(relative_gap(eval_expr(e, X), S.evaluate(X)), 1e-8)

    def test_Antisymmetric(self):
        with self.assertRaises(NotSymmetricFunction):
            realize_symmetric(parse_expression("x1*x2 - x2*x1", 2))

    def test_AlreadySymmetric(self):
        R = closed_form()
        self.assertIs(symmetrize(R), R)


def realization_Suite():
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()
    for case in (testingDescriptorRealization, testingRealize, testingMinimize, testingInvert, testingSymmetrize):
        suite.addTests(loader.loadTestsFromTestCase(case))
    return suite


if __name__ == '__main__':
    parser = argparse.ArgumentParser(description='Run realization unit tests')
    parser.add_argument('-v', '--verbose', action='store_true', help='Run tests in verbose mode')
    args = parser.parse_args()
    runner = unittest.TextTestRunner(verbosity=2 if args.verbose else 1)
    runner.run(realization_Suite())
