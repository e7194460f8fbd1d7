from ncrat.blockschur import BlockMatrix, Pivot, block_inverse
from ncrat.fock import build_fock, fock_direct_sum, k_word_vector
from ncrat.errors import DomainError
from ncrat.lmirep import Agree, PositivitySampler, boundary_audit, locate_boundary, pr_equals_component_check
from ncrat.ncalg import MatrixTuple, SamplingBox, all_words, random_direction
from ncrat.parser import parse_expression
from ncrat.realization import (
    DescriptorRealization, Variant, invert_realization, max_sample_gap, minimize, realize, realize_symmetric,
)
from ncrat.singular import (
    invertibility_margin, is_hidden, limit_probe, order_and_residue, padded_limit_check, perturbation_frame,
    ray_singular_points, well_hidden_refute,
)

from time import process_time
import numpy as np

corpus = [
    ("1 + 4*inv(4 + x1*x1)", 1),
    ("inv(1 - x1)", 1),
    ("x1*inv(1 - x2*x1)", 2),
    ("inv(1 - x1*x2)*x1", 2),
    ("inv(2 - inv(3 - inv(4 - x1)))", 1),
    ("inv(3 - inv(2 - inv(5 - x1*x2)))", 2),
    ("[1, x1; x2, 2]", 2),
    ("inv([2, x1; x1, 2])", 1),
    ("[1, x1] * [x2; 1]", 2),
    ("T(x1*x2) + x1", 2),
    ("-x1 + 2*x2*x2 - 0.5", 2),
    ("inv(1 + x1*x1 + x2*x2)", 2),
    ("inv(1 - [0, x1; x2, 0])", 2),
    ("3*inv(1 - 0.25*x1*x2*x1) - x2", 2),
    ("(1 + x1)*inv(1 - x1)", 1),
    ("inv(1 + 1e-2*x1*x2 - x2*x1)", 2),
    ("x1*x2*x3 - x3*x2*x1", 3),
    ("inv(1 - x1 - x2 - x3)", 3),
    ("2 - x1*inv(1 + x2*x2)*x1", 2),
    ("inv(1 + x1)*inv(1 - x1)", 1),
    ("[x1, 1; 1, inv(1 - x2)]", 2),
]

failures = 0
box = SamplingBox(epsilon=0.1, sizes=(1, 2, 3, 4), count=100, seed=0)

# Realization agrees with the expression
t0 = process_time()
realized = []
for text, g in corpus:
    e = parse_expression(text, g)
    R = realize(e)
    realized.append((text, e, R))
    gap, witness, compared = max_sample_gap(e, R, box.samples(g))
    if gap > 1e-9 or compared == 0:
        failures += 1
        print("realization error on", text, "gap", gap, "at", witness)
t1 = process_time()
print("Realizing and checking", len(corpus), "expressions took:\t", t1 - t0)

# Minimization keeps the series and is stable
t0 = process_time()
for text, e, R in realized:
    M = minimize(R)
    again = minimize(M)
    if M.d > R.d or again.d != M.d:
        failures += 1
        print("minimize error on", text, "dimensions", R.d, M.d, again.d)
    c1, c2 = R.series_coefficients(6), M.series_coefficients(6)
    worst = max(float(np.max(np.abs(c1[w] - c2[w]))) for w in c1)
    if worst > 1e-10:
        failures += 1
        print("series changed by minimize on", text, worst)
t1 = process_time()
print("Minimizing", len(corpus), "realizations took:\t\t", t1 - t0)

# Inversion
t0 = process_time()
for text, e, R in realized:
    if R.shape[0] != R.shape[1] or abs(np.linalg.det(R.D)) < 1e-8:
        continue
    Rt = invert_realization(R)
    for X in box.samples(R.num_vars):
        try:
            product = Rt.evaluate(X) @ R.evaluate(X)
        except DomainError:
            continue
        if not np.allclose(product, np.eye(product.shape[0]), atol=1e-8):
            failures += 1
            print("inverse error on", text, "n =", X.n)
            break
t1 = process_time()
print("Inverting the corpus took:\t\t\t", t1 - t0)

# Block inverses
rng = np.random.default_rng(165)
for i in range(500):
    p, q = int(rng.integers(1, 4)), int(rng.integers(1, 4))
    M = rng.standard_normal((p + q, p + q)) + (p + q) * np.eye(p + q)
    B = BlockMatrix.split(M, p)
    Minv_psi, Minv_phi = block_inverse(B, Pivot.PSI), block_inverse(B, Pivot.PHI)
    cond = np.linalg.cond(M)
    if np.max(np.abs(M @ Minv_psi - np.eye(p + q))) > 1e-10 * cond or np.max(np.abs(Minv_psi - Minv_phi)) > 1e-9 * cond:
        failures += 1
        print("block inverse error at trial", i)
print("Block inverse trials finished")

# Fock exactness
for g in range(1, 4):
    for nu in range(0, 5):
        if g == 3 and nu == 4:
            continue
        basis, T = build_fock(g, nu)
        top = [w for w in basis.words if len(w) == nu]
        for w in all_words(g, nu):
            v = k_word_vector(T, w)
            for omega in top:
                if int(v[basis.index[omega]]) != (1 if w == omega else 0):
                    failures += 1
                    print("fock error g", g, "nu", nu, w, omega)
print("Fock checks finished")

# Hidden singularity of non-minimal data
hidden = DescriptorRealization(np.eye(2), [np.diag([0.0, 1.0])], [[1.0], [0.0]], [[0.0]], Variant.SYMMETRIC)
geometric = DescriptorRealization([[1.0]], [[[1.0]]], [[1.0]], [[0.0]], Variant.SYMMETRIC)
chi = MatrixTuple.scalars([1.0])
reports = limit_probe(hidden, chi)
if invertibility_margin(hidden, chi) > 1e-12 or not is_hidden(reports):
    failures += 1
    print("hidden constant not detected:", reports)
if minimize(hidden).pencil().margin(chi) < 0.5:
    failures += 1
    print("minimized hidden constant still singular")
if is_hidden(limit_probe(geometric, chi)):
    failures += 1
    print("pole reported as hidden")

# Order and residue
for R in (geometric, DescriptorRealization(np.eye(2), [np.diag([1.0, 0.5])], [[1.0], [0.0]], [[0.0]],
                                           Variant.SYMMETRIC)):
    residue = order_and_residue(R, chi)
    if residue.p != 0 or abs(float(residue.M[0, 0]) + 1.0) > 1e-8:
        failures += 1
        print("residue error:", residue)
print("Singularity checks finished")

# Positivity set against the direct sum pencil
t0 = process_time()
positivity_corpus = [
    ("1 - 0.5*x1", 1),
    ("1 - x1*x1", 1),
    ("inv(1 + x1*x1)*(1 - x1*x1)", 1),
    ("1 - x1*x1 - x2*x2", 2),
    ("inv(1 + x1*x1 + x2*x2)*(1 - x1*x1 - x2*x2)", 2),
]
for text, g in positivity_corpus:
    R = realize_symmetric(parse_expression(text, g))
    Rt = invert_realization(R)
    verdict = pr_equals_component_check(R, Rt, PositivitySampler(R, sizes=(1, 2, 3), count=1000, seed=1))
    if not isinstance(verdict, Agree):
        failures += 1
        print("component check failed on", text, verdict)
    points = []
    for E in PositivitySampler(R, sizes=(1, 2, 3), count=200, seed=2).directions():
        X = locate_boundary(R, E)
        if X is not None:
            points.append(X)
        if len(points) == 50:
            break
    if len(points) < 50 or not all(check.passed for check in boundary_audit(R, Rt, points)):
        failures += 1
        print("boundary audit failed on", text, "with", len(points), "points")
t1 = process_time()
print("Positivity audits took:\t\t\t\t", t1 - t0)

# Padded limits against their closed form on Fock-generated frames
t0 = process_time()
frames = 0
for seed in range(10):
    for g, nu1, nu2 in [(2, 0, 1), (2, 1, 1), (1, 0, 2), (1, 1, 2), (1, 2, 2)]:
        rng = np.random.default_rng(seed)
        Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        A = [Q @ np.diag([2.0, 0.5, -1.0]) @ Q.T] + [(a + a.T) / 2 for a in 0.3 * rng.standard_normal((g - 1, 3, 3))]
        R = DescriptorRealization(np.eye(3), A, rng.standard_normal((3, 1)), [[0.0]], Variant.SYMMETRIC)
        chi = MatrixTuple.scalars([0.5] + [0.0] * (g - 1))
        frame = perturbation_frame(R, chi, fock_direct_sum(g, nu1, nu2), s=0.1, rho=0.1 * (frames % 2), seed=frames)
        _, _, gap = padded_limit_check(R, chi, frame)
        if gap > 1e-6:
            failures += 1
            print("padded limit gap", gap, "at seed", seed, "nu", (nu1, nu2))
        frames += 1
t1 = process_time()
print("Checking", frames, "padded limit frames took:\t\t", t1 - t0)

# Singular points of minimal symmetric realizations are never well hidden
t0 = process_time()
rng = np.random.default_rng(3)
for text, g in [("inv(1 - x1)", 1), ("inv([2, x1; x1, 2])", 1), ("(1 + x1)*inv(1 - x1)", 1),
                ("inv(1 - x1 - x2 - x3)", 3), ("inv(1 - x1*x1 - x2*x2)", 2)]:
    R = realize_symmetric(parse_expression(text, g))
    directions = [MatrixTuple.scalars(row) for row in np.eye(g)] + [random_direction(rng, g, 2)]
    for E in directions:
        for chi in ray_singular_points(R, E)[:2]:
            if not well_hidden_refute(R, chi, seed=3).found:
                failures += 1
                print("no certificate for", text, "at n =", chi.n)
t1 = process_time()
print("Refuting singular points took:\t\t\t", t1 - t0)

if failures:
    print(failures, "checks failed")
else:
    print("All acceptance checks passed")
