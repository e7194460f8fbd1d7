import os
import sys
import argparse
import unittest
import numpy as np
from numpy.testing import assert_allclose, assert_array_equal
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from ncrat.errors import NotAnalyticAtZero, OutsideFormalDomain, ShapeMismatch
from ncrat.ncalg import (
    FreePolynomial, MatrixTuple, SamplingBox, Verdict, Word, all_words,
    equivalence_test, eval_expr, inv, series_coefficients, transpose_expr, variable,
)
from ncrat.parser import parse_expression


class testingWords(unittest.TestCase):
    def test_WordText(self):
        self.assertEqual(repr(Word()), "∅")
        self.assertEqual(repr(Word((1, 2))), "x1*x2")
        self.assertEqual(Word.parse("x1*x2"), Word((1, 2)), msg="parse and repr disagree")
        self.assertEqual(Word.parse("∅"), Word())
        self.assertEqual(Word((1, 2, 2)).transpose(), Word((2, 2, 1)))

    def test_AllWordsOrder(self):
        words = list(all_words(2, 2))
        self.assertEqual(len(words), 7)
        self.assertEqual(words, [Word(), Word((1,)), Word((2,)), Word((1, 1)), Word((1, 2)),
                                 Word((2, 1)), Word((2, 2))], msg="words not in (length, lex) order")

    def test_WordEvaluate(self):
        X = MatrixTuple([[[1, 2], [2, 0]], [[0, 1], [1, 1]]])
        assert_allclose(Word((1, 2)).evaluate(X), X[0] @ X[1])
        assert_allclose(Word().evaluate(X), np.eye(2))

    def test_LetterOutOfRange(self):
        with self.assertRaises(ValueError):
            Word((3,)).check(2)


class testingFreePolynomial(unittest.TestCase):
    def test_ProductAndSum(self):
        one_plus = FreePolynomial({(): 1, (1,): 1}, num_vars=1)
        one_minus = FreePolynomial({(): 1, (1,): -1}, num_vars=1)
        product = one_plus @ one_minus
        assert_allclose(product.coefficient(()), [[1.0]])
        assert_allclose(product.coefficient((1, 1)), [[-1.0]])
        self.assertNotIn(Word((1,)), product.coeffs, msg="cancelled coefficient should be dropped")
        self.assertEqual(product.degree, 2)

    def test_NoncommutingProduct(self):
        x1 = FreePolynomial.variable(1, 2)
        x2 = FreePolynomial.variable(2, 2)
        commutator = x1 @ x2 - x2 @ x1
        self.assertEqual(set(commutator.coeffs), {Word((1, 2)), Word((2, 1))})
        self.assertNotEqual(x1 @ x2, x2 @ x1)

    def test_TransposeReversesWords(self):
        p = FreePolynomial({(1, 2): [[1, 2]]}, num_vars=2)
        t = p.transpose()
        self.assertEqual(t.shape, (2, 1))
        assert_allclose(t.coefficient((2, 1)), [[1], [2]])

    def test_KroneckerEvaluation(self):
        p = FreePolynomial({(): [[1, 0], [0, 2]], (1,): [[0, 1], [1, 0]]}, num_vars=1)
        X = MatrixTuple([[[1, 3], [3, 1]]])
        expected = np.kron([[1, 0], [0, 2]], np.eye(2)) + np.kron([[0, 1], [1, 0]], X[0])
        assert_allclose(p.evaluate(X), expected)

    def test_ShapeMismatch(self):
        with self.assertRaises(ShapeMismatch):
            FreePolynomial.constant([[1, 2]]) + FreePolynomial.constant(1)

    def test_Text(self):
        p = FreePolynomial({(): 1, (1, 2): -0.5}, num_vars=2)
        self.assertEqual(p.to_text(), "1 - 0.5*x1*x2")


class testingExpressions(unittest.TestCase):
    def setUp(self):
        self.X = MatrixTuple.scalars([2.0])

    def test_ClosedForm(self):
        e = parse_expression("1 + 4*inv(4 + x1*x1)", 1)
        assert_allclose(eval_expr(e, self.X), [[1.5]])
        assert_allclose(e.value_at_zero(), [[2.0]])

    def test_OperatorSugar(self):
        x = variable(1, 1)
        e = 1 + 4 * inv(4 + x * x)
        self.assertEqual(e, parse_expression("1 + 4*inv(4 + x1*x1)", 1), msg="sugar and parser build different trees")

    def test_OutsideFormalDomain(self):
        e = parse_expression("2 + inv(1 - x1)", 1)
        with self.assertRaises(OutsideFormalDomain) as ctx:
            eval_expr(e, MatrixTuple.scalars([1.0]))
        self.assertEqual(ctx.exception.node_id, "0.1", msg="node id should point at the inverse")

    def test_NotAnalyticAtZero(self):
        with self.assertRaises(NotAnalyticAtZero):
            inv(variable(1, 1))

    def test_BlockMatrixLayout(self):
        e = parse_expression("[1, x1; x2, 2]", 2)
        X = MatrixTuple([[[1, 0], [0, -1]], [[0, 1], [1, 0]]])
        expected = np.block([[np.eye(2), X[0]], [X[1], 2 * np.eye(2)]])
        assert_allclose(eval_expr(e, X), expected)

    def test_TransposeNode(self):
        e = parse_expression("T(x1*x2) + x1", 2)
        X = MatrixTuple([[[1, 2], [2, 0]], [[0, 1], [1, 3]]])
        assert_allclose(eval_expr(e, X), X[1] @ X[0] + X[0])
        t = transpose_expr(parse_expression("x1*inv(1 - x2*x1)", 2))
        assert_allclose(eval_expr(t, X), eval_expr(parse_expression("inv(1 - x1*x2)*x1", 2), X).T)

    def test_TransposeTwiceIsIdentity(self):
        X = MatrixTuple([[[1, 2], [2, 0]], [[0, 1], [1, 3]]])
        for text in ["T(inv(1 - x1*x2))", "x1*inv(1 - x2*x1)", "inv([2, x1; x2, 2])",
                     "3*inv(1 - 0.25*x1*x2*x1) - x2", "T(x1*inv(2 + x2*x1))*x2 + [1, x1]*[x2; 1]"]:
            e = parse_expression(text, 2)
            t = transpose_expr(e)
            self.assertEqual(t.shape, (e.shape[1], e.shape[0]), msg=text)
            self.assertEqual(transpose_expr(t), e, msg=text)
            assert_allclose(eval_expr(t, X), eval_expr(e, X).T, rtol=1e-12, atol=1e-14, err_msg=text)

    def test_TooFewVariables(self):
        e = parse_expression("x1*x2", 2)
        with self.assertRaises(ShapeMismatch):
            eval_expr(e, MatrixTuple.scalars([1.0]))

    def test_SeriesOfGeometric(self):
        coeffs = series_coefficients(parse_expression("inv(1 - x1)", 1), 5)
        for w, c in coeffs.items():
            assert_allclose(c, [[1.0]], err_msg=f"coefficient of {w}")

    def test_SeriesOfClosedForm(self):
        coeffs = series_coefficients(parse_expression("1 + 4*inv(4 + x1*x1)", 1), 4)
        assert_allclose(coeffs[Word()], [[2.0]])
        assert_allclose(coeffs[Word((1,))], [[0.0]])
        assert_allclose(coeffs[Word((1, 1))], [[-0.25]])
        assert_allclose(coeffs[Word((1, 1, 1, 1))], [[1 / 16]])


class testingMatrixTuple(unittest.TestCase):
    def test_Symmetrized(self):
        X = MatrixTuple([[[1, 2], [0, 1]]])
        assert_array_equal(X[0], X[0].T)
        assert_allclose(X[0], [[1, 1], [1, 1]])

    def test_RadiusAndDict(self):
        X = MatrixTuple([[[1, 0], [0, 2]], [[0, 0], [0, 1]]])
        self.assertAlmostEqual(X.radius(), 5.0)
        Y = MatrixTuple.from_dict(X.to_dict())
        assert_array_equal(Y[1], X[1])
        self.assertEqual((Y.g, Y.n), (2, 2))

    def test_DirectSum(self):
        X = MatrixTuple.scalars([1.0, 2.0]).direct_sum(MatrixTuple.scalars([3.0, 4.0]))
        assert_allclose(X[1], np.diag([2.0, 4.0]))

    def test_SamplingBoxRadius(self):
        box = SamplingBox(epsilon=0.1, sizes=(1, 2, 3), count=30, seed=5)
        samples = box.samples(2)
        self.assertEqual([X.n for X in samples[:4]], [1, 2, 3, 1], msg="sizes should be used round-robin")
        for X in samples:
            self.assertLess(X.radius(), 0.1)
        again = box.samples(2)
        assert_array_equal(samples[7][0], again[7][0], err_msg="sampling is not deterministic")


class testingEquivalence(unittest.TestCase):
    def test_PushThrough(self):
        e1 = parse_expression("x1*inv(1 - x2*x1)", 2)
        e2 = parse_expression("inv(1 - x1*x2)*x1", 2)
        verdict = equivalence_test(e1, e2, SamplingBox(seed=7))
        self.assertEqual(verdict.kind, Verdict.EQUIVALENT, msg=verdict.reason)
        self.assertEqual(verdict.compared, 100)

    def test_Commutator(self):
        e1 = parse_expression("x1*x2", 2)
        e2 = parse_expression("x2*x1", 2)
        verdict = equivalence_test(e1, e2)
        self.assertEqual(verdict.kind, Verdict.DISTINGUISHED)
        self.assertGreater(verdict.witness.n, 1, msg="scalars commute, so the witness must be a matrix tuple")

    def test_NoSamples(self):
        e = parse_expression("x1", 1)
        verdict = equivalence_test(e, e, SamplingBox(count=0))
        self.assertEqual(verdict.kind, Verdict.INCONCLUSIVE)

    def test_ShapesMustMatch(self):
        with self.assertRaises(ShapeMismatch):
            equivalence_test(parse_expression("[1, x1]", 1), parse_expression("x1", 1))

    def test_ConstantIdentity(self):
        e1 = parse_expression("inv(2 - inv(3 - inv(4 - x1)))", 1)
        e2 = parse_expression("(11 - 3*x1)*inv(18 - 5*x1)", 1)
        verdict = equivalence_test(e1, e2)
        self.assertEqual(verdict.kind, Verdict.EQUIVALENT, msg=verdict.reason)


def ncalg_Suite():
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()
    for case in (testingWords, testingFreePolynomial, testingExpressions, testingMatrixTuple, testingEquivalence):
        suite.addTests(loader.loadTestsFromTestCase(case))
    return suite


if __name__ == '__main__':
    parser = argparse.ArgumentParser(description='Run ncalg unit tests')
    parser.add_argument('-v', '--verbose', action='store_true', help='Run tests in verbose mode')
    args = parser.parse_args()
    runner = unittest.TextTestRunner(verbosity=2 if args.verbose else 1)
    runner.run(ncalg_Suite())
