import os
import sys
import argparse
import unittest
import numpy as np
from numpy.testing import assert_allclose
sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
from ncrat.errors import NotASingularity, NotMinimal, NotSingular
from ncrat.fock import fock_direct_sum
from ncrat.ncalg import MatrixTuple, random_direction
from ncrat.parser import parse_expression
from ncrat.realization import DescriptorRealization, Pencil, Variant, realize_symmetric
from ncrat.singular import (
    Certificate, PathStatus, core_obstruction, default_directions, eta_limit, fock_separation_identity,
    invertibility_margin, is_hidden, is_singular, kernel_split, limit_probe, line_segment_certificate,
    order_and_residue, padded_limit_check, perturbation_frame, ray_singular_points, ray_singularities,
    segment_certificate, singularity_report, well_hidden_refute,
)


def geometric():
    """(1 − x)⁻¹ with d = 1."""
    return DescriptorRealization([[1.0]], [[[1.0]]], [[1.0]], [[0.0]], Variant.SYMMETRIC)


def hidden_constant():
    """The constant 1 with a hidden singular point at x = 1."""
    return DescriptorRealization(np.eye(2), [np.diag([0.0, 1.0])], [[1.0], [0.0]], [[0.0]], Variant.SYMMETRIC)


def second_order(b=1.0):
    """Pencil singular at x = 1 with α = 0, so the residue appears at p = 2."""
    A = [[1.0 - b, b], [b, -1.0 - b]]
    return DescriptorRealization(np.diag([1.0, -1.0]), [A], [[1.0], [0.0]], [[1.0]], Variant.SYMMETRIC)


def random_symmetric(seed, d=3, g=2):
    """J = I, A1 with eigenvalues (2, 0.5, −1), so χ = (0.5, 0, ...) is singular with a 1-dim kernel."""
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    A = [Q @ np.diag([2.0, 0.5, -1.0]) @ Q.T]
    for _ in range(g - 1):
        a = 0.3 * rng.standard_normal((d, d))
        A.append((a + a.T) / 2)
    R = DescriptorRealization(np.eye(d), A, rng.standard_normal((d, 1)), [[0.0]], Variant.SYMMETRIC)
    chi = MatrixTuple.scalars([0.5] + [0.0] * (g - 1))
    return R, chi


SYMMETRIC_CORPUS = [
    ("inv(1 - x1)", 1),
    ("inv(2 - inv(3 - inv(4 - x1)))", 1),
    ("inv([2, x1; x1, 2])", 1),
    ("(1 + x1)*inv(1 - x1)", 1),
    ("inv(1 + x1)*inv(1 - x1)", 1),
    ("inv(1 - x1 - x2 - x3)", 3),
    ("inv(1 - x1*x1 - x2*x2)", 2),
]


def singular_grid(R, seed, per_ray=2):
    """Singular points on the rays through each axis, the diagonal and one random 2×2 direction."""
    rng = np.random.default_rng(seed)
    directions = [MatrixTuple.scalars(row) for row in np.eye(R.g)]
    directions.append(MatrixTuple.scalars(np.ones(R.g)))
    directions.append(random_direction(rng, R.g, 2))
    points = []
    for E in directions:
        points.extend(ray_singular_points(R, E)[:per_ray])
    return points


class testingMargins(unittest.TestCase):
    def setUp(self):
        self.P = Pencil([[1.0]], [np.array([[0.5]])])

    def test_Margin(self):
        self.assertAlmostEqual(invertibility_margin(self.P, MatrixTuple.scalars([1.0])), 0.5)
        self.assertTrue(is_singular(self.P, MatrixTuple.scalars([2.0])))
        self.assertFalse(is_singular(self.P, MatrixTuple.scalars([1.9])))

    def test_LineCertificate(self):
        ok = line_segment_certificate(self.P, MatrixTuple.scalars([1.0]))
        self.assertEqual(ok.status, PathStatus.IN_COMPONENT)
        blocked = line_segment_certificate(self.P, MatrixTuple.scalars([3.0]))
        self.assertEqual(blocked.status, PathStatus.BLOCKED)
        self.assertAlmostEqual(blocked.t_star, 2 / 3, places=9)

    def test_EvenMultiplicityCrossing(self):
        P = Pencil([[1.0]], [np.array([[1.0]])])
        t_cross = 0.5078125
        X = MatrixTuple([np.eye(2) / t_cross])
        blocked = line_segment_certificate(P, X)
        self.assertEqual(blocked.status, PathStatus.BLOCKED, msg=repr(blocked))
        self.assertAlmostEqual(blocked.t_star, t_cross, places=12)
        start = MatrixTuple([-np.eye(2)])
        crossing = segment_certificate(P, start, X)
        self.assertEqual(crossing.status, PathStatus.BLOCKED)
        expected = 2.0 / (1.0 / t_cross + 1.0)
        self.assertAlmostEqual(crossing.t_star, expected, places=12)
        short = segment_certificate(P, start, MatrixTuple([0.9 * np.eye(2)]))
        self.assertEqual(short.status, PathStatus.IN_COMPONENT)
        self.assertGreater(short.min_margin, 0.0)

    def test_ZeroTuple(self):
        cert = line_segment_certificate(self.P, MatrixTuple.zeros(1, 3))
        self.assertEqual(cert.status, PathStatus.IN_COMPONENT)

    def test_RaySingularities(self):
        self.assertEqual(len(ray_singularities(self.P, MatrixTuple.scalars([1.0]))), 1)
        self.assertAlmostEqual(ray_singularities(self.P, MatrixTuple.scalars([1.0]))[0], 2.0)
        self.assertEqual(ray_singularities(self.P, MatrixTuple.scalars([-1.0])), [])


class testingLimitProbe(unittest.TestCase):
    def test_HiddenConstant(self):
        reports = limit_probe(hidden_constant(), MatrixTuple.scalars([1.0]))
        self.assertEqual(reports[0].direction_tag, "chi")
        for report in reports:
            self.assertTrue(report.converged, msg=report.direction_tag)
            assert_allclose(report.limit_value, [[1.0]], atol=1e-8)
        self.assertTrue(is_hidden(reports))

    def test_PoleDiverges(self):
        reports = limit_probe(geometric(), MatrixTuple.scalars([1.0]))
        self.assertFalse(any(r.converged for r in reports))
        self.assertFalse(is_hidden(reports))
        self.assertAlmostEqual(reports[0].growth_exponent_estimate, -1.0, delta=0.05)

    def test_NotASingularity(self):
        with self.assertRaises(NotASingularity):
            limit_probe(geometric(), MatrixTuple.scalars([0.0]))

    def test_DirectionsAtZero(self):
        directions = default_directions(MatrixTuple.zeros(2, 2), seed=1)
        self.assertEqual([tag for tag, _ in directions], ["random-0", "random-1"])
        for _, E in directions:
            self.assertAlmostEqual(E.radius(), 1.0)


class testingKernelSplit(unittest.TestCase):
    def test_DiagonalExample(self):
        R = DescriptorRealization(np.eye(2), [np.diag([1.0, 0.5])], [[1.0], [1.0]], [[0.0]], Variant.SYMMETRIC)
        split = kernel_split(R, MatrixTuple.scalars([1.0]))
        self.assertEqual((split.k, split.m), (1, 1))
        assert_allclose(np.abs(split.V[:, 0]), [1.0, 0.0], atol=1e-14)
        assert_allclose(split.alpha, [[-1.0]])
        assert_allclose(split.beta, [[0.0]], atol=1e-14)
        assert_allclose(split.Rblock, [[0.5]])
        self.assertLess(split.reconstruction_error, 1e-14)

    def test_NotSingular(self):
        with self.assertRaises(NotSingular):
            kernel_split(geometric(), MatrixTuple.scalars([0.5]))


class testingResidue(unittest.TestCase):
    def test_SimplePole(self):
        residue = order_and_residue(geometric(), MatrixTuple.scalars([1.0]))
        self.assertEqual(residue.p, 0)
        self.assertEqual(residue.q, 1)
        assert_allclose(residue.M, [[-1.0]], atol=1e-8)
        self.assertEqual(residue.vanishing_order, 1)

    def test_SecondOrder(self):
        for b in (1.0, 0.5):
            residue = order_and_residue(second_order(b), MatrixTuple.scalars([1.0]))
            self.assertEqual(residue.p, 2, msg=f"b={b}")
            self.assertEqual(residue.q, 2)
            self.assertEqual(residue.vanishing_order, 2)
            assert_allclose(residue.M, [[-2.0 * b]], rtol=1e-6)

    def test_EvenOrder(self):
        for seed in range(5):
            R, chi = random_symmetric(seed)
            residue = order_and_residue(R, chi)
            self.assertEqual(residue.p % 2, 0)
            split = kernel_split(R, chi)
            assert_allclose(residue.M, np.linalg.inv(split.alpha), rtol=1e-6,
                            err_msg="with invertible alpha the residue is alpha inverse")

    def test_EtaLimit(self):
        R, chi = random_symmetric(2)
        residue = order_and_residue(R, chi)
        G0 = np.array([[0.2]])
        assert_allclose(eta_limit(residue, G0), residue.M, rtol=1e-6)


class testingPerturbationFrame(unittest.TestCase):
    def test_BlockLayout(self):
        R, chi = random_symmetric(4)
        frame = perturbation_frame(R, chi, fock_direct_sum(2, 1, 1), rho=0.1, seed=4)
        for t in (0.5, 0.1):
            for q in (1, 2):
                assert_allclose(frame.permuted_pencil(t, q), frame.expected_blocks(t, q), atol=1e-12)

    def test_NeedsSymmetricPencil(self):
        R = DescriptorRealization(np.eye(2), [[[0.0, 1.0], [0.0, 0.0]]], [[1.0], [0.0]], [[0.0]])
        with self.assertRaises(ValueError):
            perturbation_frame(R, MatrixTuple.scalars([1.0]), fock_direct_sum(1, 1, 1))

    def test_LimitFormulaOneDimensional(self):
        R, chi = geometric(), MatrixTuple.scalars([1.0])
        frame = perturbation_frame(R, chi, fock_direct_sum(1, 1, 1), s=0.1, seed=1)
        lhs, rhs, gap = padded_limit_check(R, chi, frame)
        self.assertEqual(lhs.shape, (4, 4))
        self.assertLess(gap, 1e-9)

    def test_LimitFormulaZeroCoupling(self):
        R, chi = geometric(), MatrixTuple.scalars([1.0])
        K = fock_direct_sum(1, 1, 0)
        frame = perturbation_frame(R, chi, K, H=[np.zeros((K.n, 1))], seed=1)
        lhs, rhs, gap = padded_limit_check(R, chi, frame)
        self.assertEqual(gap, 0.0)
        assert_allclose(lhs, np.zeros_like(lhs), atol=1e-12)

    def test_LimitFormulaRandom(self):
        for seed in range(6):
            R, chi = random_symmetric(seed)
            for rho in (0.0, 0.1):
                frame = perturbation_frame(R, chi, fock_direct_sum(2, 1, 1), s=0.1, rho=rho, seed=seed)
                _, _, gap = padded_limit_check(R, chi, frame)
                self.assertLess(gap, 1e-6, msg=f"seed={seed} rho={rho}")

    def test_LimitFormulaFockFrames(self):
        layouts = [(2, 0, 1), (2, 1, 1), (1, 0, 2), (1, 1, 2), (1, 2, 2)]   # (g, ν₁, ν₂), M ≤ 6
        frames = 0
        for seed in range(10):
            for g, nu1, nu2 in layouts:
                R, chi = random_symmetric(seed, g=g)
                rho = 0.1 if frames % 2 else 0.0
                K = fock_direct_sum(g, nu1, nu2)
                self.assertLessEqual(K.n, 6)
                frame = perturbation_frame(R, chi, K, s=0.1, rho=rho, seed=frames)
                _, _, gap = padded_limit_check(R, chi, frame)
                self.assertLess(gap, 1e-6, msg=f"seed={seed} g={g} nu=({nu1}, {nu2}) rho={rho}")
                frames += 1
        self.assertEqual(frames, 50)

    def test_CoreObstructionHidden(self):
        R, chi = hidden_constant(), MatrixTuple.scalars([1.0])
        residue = order_and_residue(R, chi)
        for seed in range(4):
            frame = perturbation_frame(R, chi, fock_direct_sum(1, 1, 2), rho=0.1, seed=seed)
            value, _ = core_obstruction(frame, residue)
            self.assertLess(abs(value), 1e-7, msg=f"seed={seed}")

    def test_CoreObstructionVisible(self):
        R, chi = random_symmetric(1)
        residue = order_and_residue(R, chi)
        frame = perturbation_frame(R, chi, fock_direct_sum(2, 0, 0), seed=1)
        value, bound = core_obstruction(frame, residue)
        self.assertGreater(bound, 0.0)
        self.assertLessEqual(abs(value), bound * (1 + 1e-12))


class testingFockSeparation(unittest.TestCase):
    def test_Identity(self):
        rng = np.random.default_rng(21)
        R = DescriptorRealization(np.diag([1.0, -1.0, 1.0]),
                                  [(a + a.T) / 2 for a in rng.standard_normal((2, 3, 3))],
                                  rng.standard_normal((3, 1)), [[0.0]], Variant.SYMMETRIC)
        N = 2
        middle = rng.standard_normal((3 * N, 3 * N))
        for omega1, omega2 in [((1, 2), (2,)), ((1,), (1, 1)), ((), (2, 1))]:
            lhs, rhs = fock_separation_identity(R, middle, omega1, omega2, rng.standard_normal(N),
                                                rng.standard_normal(N), np.ones(1), np.ones(1))
            self.assertAlmostEqual(lhs, rhs, delta=1e-9 * (1.0 + abs(rhs)), msg=f"{omega1} / {omega2}")


class testingRefutation(unittest.TestCase):
    def test_PoleRefutedByProbe(self):
        report = well_hidden_refute(geometric(), MatrixTuple.scalars([1.0]))
        self.assertTrue(report.found)
        self.assertEqual(report.certificate.kind, Certificate.PROBE)
        self.assertEqual(report.certificate.rho, 0.0)
        self.assertIsNone(report.certificate.K)

    def test_HiddenConstantNotRefuted(self):
        report = well_hidden_refute(hidden_constant(), MatrixTuple.scalars([1.0]), require_minimal=False)
        self.assertFalse(report.found, msg=repr(report))
        self.assertGreater(report.branches_tried, 0)

    def test_RequiresMinimal(self):
        with self.assertRaises(NotMinimal):
            well_hidden_refute(hidden_constant(), MatrixTuple.scalars([1.0]))

    def test_Report(self):
        report = singularity_report(geometric(), MatrixTuple.scalars([1.0]), refute=False)
        self.assertEqual(report["p"], 0)
        self.assertEqual(report["kernel_dim"], 1)
        assert_allclose(report["M"], [[-1.0]], atol=1e-8)
        self.assertIsNone(report["certificate"])
        self.assertEqual(len(report["probes"]), 3)


class testingReflection(unittest.TestCase):
    def test_MinimalSingularitiesAreRefuted(self):
        searched = 0
        for text, g in SYMMETRIC_CORPUS:
            R = realize_symmetric(parse_expression(text, g))
            for chi in singular_grid(R, seed=3):
                searched += 1
                report = well_hidden_refute(R, chi, seed=3)
                self.assertTrue(report.found, msg=f"{text} at n={chi.n}: {report!r}")
        self.assertGreater(searched, 5)


def singular_Suite():
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()
    for case in (testingMargins, testingLimitProbe, testingKernelSplit, testingResidue,
                 testingPerturbationFrame, testingFockSeparation, testingRefutation, testingReflection):
        suite.addTests(loader.loadTestsFromTestCase(case))
    return suite


if __name__ == '__main__':
    parser = argparse.ArgumentParser(description='Run singularity unit tests')
    parser.add_argument('-v', '--verbose', action='store_true', help='Run tests in verbose mode')
    args = parser.parse_args()
    runner = unittest.TextTestRunner(verbosity=2 if args.verbose else 1)
    runner.run(singular_Suite())
