"""
Descriptor realizations r(x) = D + Bᵀ(J − L_A(x))⁻¹C with L_A(x) = Σ A_j x_j.

General realizations may carry a left map B different from C; symmetric
realizations always have B = C, J a symmetry (J = Jᵀ, J² = I) and symmetric
A_j. Evaluating at an n×n tuple lifts every coefficient as M ⊗ I_n.
"""
import logging

import msgpack
import numpy as np
from scipy.linalg import block_diag, lstsq

from ncrat.config import RANK_RTOL, DEFAULT_TOL, DEFAULT_SEED, SINGULARITY_RTOL
from ncrat.errors import (
    PencilSingular, ShapeMismatch, SymmetrizationFailed, NotSymmetricFunction,
    ValueAtZeroSingular, DomainError,
)
from ncrat.ncalg import (
    Inverse, MatrixTuple, Poly, Product, SamplingBox, ScalarMul, Sum, Transpose,
    Word, all_words, as_matrix, is_invertible, singular_value_extremes, evaluate,
)

logger = logging.getLogger(__name__)

SYMMETRY_ATOL = 1e-12 # J = Jᵀ, J² = I and A_j = A_jᵀ checks
SYMMETRY_SAMPLES = 24 # samples used to confirm r(X) = r(X)ᵀ


class Variant:
    """
    - GENERAL: any invertible J, optional left map B
    - SYMMETRIC: J a symmetry, symmetric A_j, B = C
    """
    GENERAL, SYMMETRIC = "general", "symmetric"

    @staticmethod
    def to_string(variant):
        return "SYMMETRIC" if variant == Variant.SYMMETRIC else "GENERAL"


def _readonly(m):
    m = np.array(m, dtype=float)
    m.setflags(write=False)
    return m


class Pencil:
    """The affine pencil J0 − L_A(x)."""

    def __init__(self, J0, A):
        self.J0 = _readonly(J0)
        self.A = tuple(_readonly(a) for a in A)
        d = self.J0.shape[0]
        for a in self.A:
            if a.shape != (d, d):
                raise ShapeMismatch(f"pencil coefficient has shape {a.shape}, expected {(d, d)}")

    def __repr__(self):
        return f"Pencil(d={self.dimension}, g={self.g})"

    @property
    def dimension(self):
        return self.J0.shape[0]

    @property
    def g(self):
        return len(self.A)

    def linear_part(self, X):
        """L_A(X) = Σ A_j ⊗ X_j."""
        d = self.dimension
        result = np.zeros((d * X.n, d * X.n))
        for a, x in zip(self.A, X):
            result += np.kron(a, x)
        return result

    def evaluate(self, X):
        """J0 ⊗ I_n − Σ A_j ⊗ X_j."""
        if X.g < self.g:
            raise ShapeMismatch(f"pencil has {self.g} variables, tuple has {X.g}")
        return np.kron(self.J0, np.eye(X.n)) - self.linear_part(X)

    def scale(self, X):
        """‖J0 ⊗ I‖₂ + ‖L_A(X)‖₂, the size singularity is measured against."""
        return float(np.linalg.norm(self.J0, 2)) + float(np.linalg.norm(self.linear_part(X), 2))

    def margin(self, X):
        """Smallest singular value of the evaluated pencil."""
        m = self.evaluate(X)
        if m.size == 0:
            return np.inf
        return singular_value_extremes(m)[0]

    def direct_sum(self, other):
        return Pencil(block_diag(self.J0, other.J0),
                      [block_diag(a, b) for a, b in zip(self.A, other.A)])


class DescriptorRealization:
    def __init__(self, J, A, C, D, variant=Variant.GENERAL, B=None):
        """
        Args:
            J: d×d invertible matrix
            A: sequence of g d×d matrices
            C: d×l_in right map
            D: l_out×l_in feedthrough
            variant: Variant.GENERAL or Variant.SYMMETRIC
            B: d×l_out left map (General only; defaults to C)
        """
        D = as_matrix(D)
        A = [np.array(a, dtype=float) for a in A]
        if not A:
            raise ShapeMismatch("a realization needs at least one variable")
        d = A[0].shape[0] if A[0].ndim == 2 else 0
        J = np.array(J, dtype=float).reshape(d, d)
        A = [a.reshape(d, d) for a in A]
        C = np.array(C, dtype=float).reshape(d, D.shape[1])
        explicit_b = B is not None
        B = C if B is None else np.array(B, dtype=float).reshape(d, D.shape[0])
        if not explicit_b and D.shape[0] != D.shape[1]:
            raise ShapeMismatch(f"rectangular D {D.shape} needs an explicit left map B")

        if variant == Variant.SYMMETRIC:
            if explicit_b and not np.allclose(B, C, rtol=0, atol=SYMMETRY_ATOL):
                raise ShapeMismatch("symmetric realizations use B = C")
            if d and (np.max(np.abs(J - J.T)) > SYMMETRY_ATOL
                      or np.max(np.abs(J @ J - np.eye(d))) > SYMMETRY_ATOL):
                raise ShapeMismatch("symmetric realization needs J = Jᵀ with J² = I")
            for a in A:
                if d and np.max(np.abs(a - a.T)) > SYMMETRY_ATOL * max(1.0, np.max(np.abs(a))):
                    raise ShapeMismatch("symmetric realization needs symmetric A_j")
            J = (J + J.T) / 2
            A = [(a + a.T) / 2 for a in A]
            B = C
            explicit_b = False
        elif variant != Variant.GENERAL:
            raise ValueError(f"unknown variant {variant!r}")

        if d and not is_invertible(J):
            raise PencilSingular(singular_value_extremes(J)[0])

        self.J = _readonly(J)
        self.A = tuple(_readonly(a) for a in A)
        self.C = _readonly(C)
        self.D = _readonly(D)
        self.B = self.C if not explicit_b else _readonly(B)
        self.variant = variant
        self.explicit_b = explicit_b

    def __repr__(self):
        return f"DescriptorRealization({Variant.to_string(self.variant)}, d={self.d}, g={self.g}, shape={self.shape})"

    @classmethod
    def constant(cls, D, g, variant=Variant.GENERAL):
        D = as_matrix(D)
        B = None if D.shape[0] == D.shape[1] else np.zeros((0, D.shape[0]))
        return cls(np.zeros((0, 0)), [np.zeros((0, 0))] * g, np.zeros((0, D.shape[1])), D, variant, B)

    @property
    def d(self):
        return self.J.shape[0]

    @property
    def g(self):
        return len(self.A)

    @property
    def num_vars(self):
        return self.g

    @property
    def shape(self):
        return self.D.shape

    @property
    def l(self):
        return self.D.shape[0]

    @property
    def is_symmetric(self):
        return self.variant == Variant.SYMMETRIC

    def pencil(self):
        return Pencil(self.J, self.A)

    def value_at_zero(self):
        """D + BᵀJ⁻¹C (= D + CᵀJC for symmetric realizations)."""
        if self.d == 0:
            return np.array(self.D)
        return self.D + self.B.T @ np.linalg.solve(self.J, self.C)

    def evaluate(self, X):
        """
        r(X) = D ⊗ I + (Bᵀ ⊗ I)(J ⊗ I − L_A(X))⁻¹(C ⊗ I)

        Raises:
            PencilSingular: X outside the invertibility set of the pencil
        """
        n = X.n
        eye = np.eye(n)
        value = np.kron(self.D, eye)
        if self.d:
            pencil = self.pencil()
            P = pencil.evaluate(X)
            if not is_invertible(P, rtol=SINGULARITY_RTOL, scale=pencil.scale(X)):
                raise PencilSingular(singular_value_extremes(P)[0])
            term = np.kron(self.B.T, eye) @ np.linalg.solve(P, np.kron(self.C, eye))
            if self.is_symmetric and X.symmetric:
                term = (term + term.T) / 2
            value = value + term
        return value

    def identity_form(self):
        """(Â, Ĉ, B) with r = D + Bᵀ(I − L_Â)⁻¹Ĉ, Â_j = J⁻¹A_j, Ĉ = J⁻¹C."""
        if self.d == 0:
            return list(self.A), np.array(self.C), np.array(self.B)
        A_hat = [np.linalg.solve(self.J, a) for a in self.A]
        return A_hat, np.linalg.solve(self.J, self.C), np.array(self.B)

    def series_coefficients(self, max_degree):
        """
        Coefficient of a word w is Bᵀ(J⁻¹A)^w J⁻¹C, and D + BᵀJ⁻¹C for ∅.

        Returns:
            dict: Word -> matrix for every word of length <= max_degree
        """
        A_hat, C_hat, B = self.identity_form()
        chains = {}
        coeffs = {}
        for w in all_words(self.g, max_degree):
            if not w:
                chains[w] = C_hat
                coeffs[w] = self.value_at_zero()
                continue
            chains[w] = A_hat[w[0] - 1] @ chains[Word(w[1:])]
            coeffs[w] = B.T @ chains[w]
        return coeffs

    def transposed(self):
        """Realization of X ↦ r(X)ᵀ (for symmetric X)."""
        if self.is_symmetric:
            # only the pencil term is symmetric
            if np.array_equal(self.D, self.D.T):
                return self
            return DescriptorRealization(self.J, self.A, self.C, self.D.T, Variant.SYMMETRIC)
        return DescriptorRealization(self.J.T, [a.T for a in self.A], self.B, self.D.T, Variant.GENERAL, B=self.C)

    def as_general(self):
        if not self.is_symmetric:
            return self
        return DescriptorRealization(self.J, self.A, self.C, self.D, Variant.GENERAL)

    def to_dict(self):
        data = {
            "variant": self.variant,
            "g": self.g,
            "d": self.d,
            "l": self.l,
            "J": self.J.tolist(),
            "A": [a.tolist() for a in self.A],
            "C": self.C.tolist(),
            "D": self.D.tolist(),
        }
        if self.explicit_b:
            data["B"] = self.B.tolist()
        return data

    @classmethod
    def from_dict(cls, data):
        g, d = int(data["g"]), int(data["d"])
        D = as_matrix(data["D"])
        A = data["A"]
        if len(A) != g:
            raise ShapeMismatch(f"realization declares g={g} but has {len(A)} coefficients")
        A = [np.array(a, dtype=float).reshape(d, d) for a in A]
        B = data.get("B")
        if B is not None:
            B = np.array(B, dtype=float).reshape(d, D.shape[0])
        return cls(np.array(data["J"], dtype=float).reshape(d, d), A,
                   np.array(data["C"], dtype=float).reshape(d, D.shape[1]), D,
                   data.get("variant", Variant.GENERAL), B)

    def serialize(self):
        """
        Returns:
            bytes: msgpack encoding of to_dict()
        """
        return msgpack.packb(self.to_dict())

    @classmethod
    def deserialize(cls, data):
        return cls.from_dict(msgpack.unpackb(data))


def eval_realization(R, X):
    return R.evaluate(X)


# ---- realization algebra ----

def direct_sum_realization(R1, R2):
    """Realization of r1 + r2: block-diagonal pencil, stacked maps."""
    if R1.shape != R2.shape:
        raise ShapeMismatch(f"cannot add shapes {R1.shape} and {R2.shape}")
    g = max(R1.g, R2.g)
    A = [block_diag(_coef(R1, j), _coef(R2, j)) for j in range(g)]
    return DescriptorRealization(block_diag(R1.J, R2.J), A,
                                 np.vstack([R1.C, R2.C]), R1.D + R2.D,
                                 Variant.GENERAL, B=np.vstack([R1.B, R2.B]))


def _coef(R, j):
    return R.A[j] if j < R.g else np.zeros((R.d, R.d))


def product_realization(R1, R2):
    """
    Realization of r1·r2. The pencil is block upper triangular,
    [[J1, −C1B2ᵀ], [0, J2]] − L_{A1⊕A2}, with B = [B1; B2D1ᵀ], C = [C1D2; C2].
    """
    if R1.shape[1] != R2.shape[0]:
        raise ShapeMismatch(f"cannot multiply shapes {R1.shape} and {R2.shape}")
    g = max(R1.g, R2.g)
    d1, d2 = R1.d, R2.d
    J = np.block([[R1.J, -R1.C @ R2.B.T], [np.zeros((d2, d1)), R2.J]])
    A = [block_diag(_coef(R1, j), _coef(R2, j)) for j in range(g)]
    B = np.vstack([R1.B, R2.B @ R1.D.T])
    C = np.vstack([R1.C @ R2.D, R2.C])
    return DescriptorRealization(J, A, C, R1.D @ R2.D, Variant.GENERAL, B=B)


def scaled_realization(c, R):
    return DescriptorRealization(R.J, R.A, c * R.C, c * R.D, Variant.GENERAL, B=R.B)


def word_realization(word, coeff, g):
    """
    Realization of the monomial P·w: a chain of |w|+1 state blocks with
    A_j shifting block m to block m+1 whenever the (m+1)-th letter is x_j.
    """
    k1, k2 = coeff.shape
    length = len(word)
    blocks = length + 1
    d = blocks * k2
    A = [np.zeros((d, d)) for _ in range(g)]
    for m, letter in enumerate(word):
        shift = np.zeros((blocks, blocks))
        shift[m, m + 1] = 1.0
        A[letter - 1] += np.kron(shift, np.eye(k2))
    B = np.zeros((d, k1))
    B[:k2, :] = coeff.T
    C = np.zeros((d, k2))
    C[-k2:, :] = np.eye(k2)
    return DescriptorRealization(np.eye(d), A, C, np.zeros((k1, k2)), Variant.GENERAL, B=B)


def polynomial_realization(poly, g):
    R = DescriptorRealization.constant(poly.value_at_zero(), g)
    for word, coeff in poly.coeffs.items():
        if word:
            R = direct_sum_realization(R, word_realization(word, coeff, g))
    return R


def realize(e):
    """
    Builds a minimal General realization of an expression.

    The construction is compositional: polynomials by word chains, sums by
    block-diagonal pencils, products by block upper-triangular coupling, and
    inverses through invert_realization. Every intermediate result is minimized.
    """
    return minimize(_realize(e, e.num_vars))


def _realize(e, g):
    if isinstance(e, Poly):
        return polynomial_realization(e.poly, g)
    if isinstance(e, Sum):
        R = _realize(e.terms[0], g)
        for t in e.terms[1:]:
            R = minimize(direct_sum_realization(R, _realize(t, g)))
        return R
    if isinstance(e, Product):
        R = _realize(e.factors[0], g)
        for f in e.factors[1:]:
            R = minimize(product_realization(R, _realize(f, g)))
        return R
    if isinstance(e, Inverse):
        return invert_realization(minimize(_realize(e.child, g)))
    if isinstance(e, Transpose):
        return _realize(e.child, g).transposed()
    if isinstance(e, ScalarMul):
        return scaled_realization(e.scalar, _realize(e.child, g))
    raise TypeError(f"not an expression node: {e!r}")


# ---- minimality ----

def _range_basis(M):
    """Orthonormal basis of range(M), rank cut at RANK_RTOL * ||M||."""
    if M.size == 0:
        return np.zeros((M.shape[0], 0))
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    if s[0] == 0:
        return np.zeros((M.shape[0], 0))
    rank = int(np.sum(s > RANK_RTOL * s[0]))
    return U[:, :rank]


def orbit_basis(maps, start):
    """
    Orthonormal basis of the smallest subspace containing range(start) and
    invariant under every map. Terminates after at most d enlargements.
    """
    Q = _range_basis(start)
    while True:
        grown = _range_basis(np.hstack([Q] + [M @ Q for M in maps]))
        if grown.shape[1] == Q.shape[1]:
            return Q
        Q = grown


def reachable_basis(R):
    A_hat, C_hat, _ = R.identity_form()
    return orbit_basis(A_hat, C_hat)


def observable_basis(R):
    A_hat, _, B = R.identity_form()
    return orbit_basis([a.T for a in A_hat], B)


def minimality_check(R):
    """
    Returns:
        (is_minimal, reach_rank, obs_rank); for symmetric realizations the
        reachable span is that of {(JA)^w JC} and the observable span is its
        image under J
    """
    if R.d == 0:
        return True, 0, 0
    reach = reachable_basis(R).shape[1]
    if R.is_symmetric:
        obs = reach
    else:
        obs = observable_basis(R).shape[1]
    return reach == R.d and obs == R.d, reach, obs


def normalize_symmetric(J0, A, C, D):
    """
    Rewrites D + Cᵀ(J0 − L_A)⁻¹C with symmetric invertible J0 as a symmetric
    realization: J0 = U Λ Uᵀ, J = sign(Λ), Â_j = |Λ|^-½ UᵀA_jU |Λ|^-½, Ĉ = |Λ|^-½ UᵀC.
    """
    J0 = np.array(J0, dtype=float)
    J0 = (J0 + J0.T) / 2
    if J0.shape[0] == 0:
        return DescriptorRealization(J0, A, C, D, Variant.SYMMETRIC)
    lam, U = np.linalg.eigh(J0)
    if np.min(np.abs(lam)) <= 1e-12 * np.max(np.abs(lam)):
        raise SymmetrizationFailed("J0 is singular", float(np.min(np.abs(lam))))
    s = 1.0 / np.sqrt(np.abs(lam))
    A_new = []
    for a in A:
        m = (s[:, None] * (U.T @ a @ U)) * s[None, :]
        A_new.append((m + m.T) / 2)
    C_new = s[:, None] * (U.T @ C)
    return DescriptorRealization(np.diag(np.sign(lam)), A_new, C_new, D, Variant.SYMMETRIC)


def _minimize_general(R):
    A_hat, C_hat, B = R.identity_form()
    Q = orbit_basis(A_hat, C_hat)
    A1 = [Q.T @ a @ Q for a in A_hat]
    C1, B1 = Q.T @ C_hat, Q.T @ B
    P = orbit_basis([a.T for a in A1], B1)
    A2 = [P.T @ a @ P for a in A1]
    C2, B2 = P.T @ C1, P.T @ B1
    r = P.shape[1]
    if r == 0:
        return DescriptorRealization.constant(R.D, R.g)
    return DescriptorRealization(np.eye(r), A2, C2, R.D, Variant.GENERAL, B=B2)


def _minimize_symmetric(R):
    Q = reachable_basis(R)
    if Q.shape[1] == 0:
        return DescriptorRealization.constant(R.D, R.g, Variant.SYMMETRIC)
    J1 = Q.T @ R.J @ Q
    if not is_invertible(J1):
        logger.info("congruence compression hit a singular J; minimizing as general")
        return symmetrize(_minimize_general(R))
    return normalize_symmetric(J1, [Q.T @ a @ Q for a in R.A], Q.T @ R.C, R.D)


def minimize(R):
    """
    Compresses R to a minimal realization of the same function. Already
    minimal input (including d = 0) is returned unchanged; symmetric input
    stays symmetric.
    """
    is_min, reach, obs = minimality_check(R)
    if is_min:
        return R
    logger.debug("minimizing d=%d (reach %d, obs %d)", R.d, reach, obs)
    if R.is_symmetric:
        return _minimize_symmetric(R)
    return _minimize_general(R)


# ---- inversion ----

def _woodbury_inverse(R, D_inv):
    J = R.J + R.C @ D_inv @ R.B.T
    return DescriptorRealization(J, R.A, R.C @ D_inv, D_inv, Variant.GENERAL, B=-R.B @ D_inv.T)


def _linearized_inverse(R):
    """r⁻¹ as the (2,2) block of [[J − L_A, −C], [Bᵀ, D]]⁻¹."""
    d, l = R.d, R.l
    J = np.block([[R.J, -R.C], [R.B.T, R.D]])
    A = [block_diag(a, np.zeros((l, l))) for a in R.A]
    E = np.vstack([np.zeros((d, l)), np.eye(l)])
    return DescriptorRealization(J, A, E, np.zeros((l, l)), Variant.GENERAL, B=E)


def invert_realization(R):
    """
    Realization of X ↦ r(X)⁻¹, minimized. Symmetric input gives symmetric output.

    Raises:
        ValueAtZeroSingular: r(0) is not invertible
    """
    r0 = R.value_at_zero()
    if r0.shape[0] != r0.shape[1] or not is_invertible(r0):
        raise ValueAtZeroSingular(f"r(0) is not invertible (shape {r0.shape})")
    if R.d == 0:
        return DescriptorRealization.constant(np.linalg.inv(R.D), R.g, R.variant)

    if R.is_symmetric:
        d, l = R.d, R.l
        J = -np.block([[R.J, R.C], [R.C.T, -R.D]])
        A = [-block_diag(a, np.zeros((l, l))) for a in R.A]
        E = np.vstack([np.zeros((d, l)), np.eye(l)])
        return minimize(normalize_symmetric(J, A, E, np.zeros((l, l))))

    candidates = []
    if is_invertible(R.D):
        candidates.append(minimize(_woodbury_inverse(R, np.linalg.inv(R.D))))
    candidates.append(minimize(_linearized_inverse(R)))
    best = min(candidates, key=lambda c: c.d)
    logger.debug("inverse realization: candidate dims %s, kept d=%d", [c.d for c in candidates], best.d)
    return best


# ---- symmetrization ----

def max_sample_gap(f1, f2, samples):
    """
    Largest mixed-relative gap ||f1(X) − f2(X)|| / (1 + ||f1(X)||) over samples
    inside both domains; returns (gap, worst sample, compared count).
    """
    worst, witness, compared = 0.0, None, 0
    for X in samples:
        try:
            v1, v2 = evaluate(f1, X), evaluate(f2, X)
        except DomainError:
            continue
        compared += 1
        gap = float(np.linalg.norm(v1 - v2)) / (1.0 + float(np.linalg.norm(v1)))
        if gap > worst or witness is None:
            worst, witness = gap, X
    return worst, witness, compared


def agree_on_samples(R1, R2, box=None, tol=DEFAULT_TOL):
    if box is None:
        box = SamplingBox()
    gap, _, compared = max_sample_gap(R1, R2, box.samples(max(R1.num_vars, R2.num_vars)))
    return compared > 0 and gap <= tol


def _check_symmetric_function(R, samples, tol):
    if R.shape[0] != R.shape[1]:
        raise NotSymmetricFunction()
    for X in samples:
        try:
            value = R.evaluate(X)
        except DomainError:
            continue
        error = float(np.linalg.norm(value - value.T))
        if error > tol * (1.0 + float(np.linalg.norm(value))):
            raise NotSymmetricFunction(X, error)


def symmetrize(R, tol=DEFAULT_TOL, seed=DEFAULT_SEED):
    """
    Turns a General realization of a symmetric function into an equivalent
    Symmetric one.

    The minimal realization (Â, Ĉ, B) of r and (Âᵀ, B, Ĉ) of rᵀ are similar;
    the similarity T solves Â_jᵀT = TÂ_j and TĈ = B, and is symmetric. Then
    r = D + Bᵀ(T − L_{TÂ})⁻¹B, which normalize_symmetric turns into J = sign form.

    Raises:
        NotSymmetricFunction: sampling finds r(X) ≠ r(X)ᵀ
        SymmetrizationFailed: the similarity system is singular or inconsistent
    """
    if R.is_symmetric:
        return R
    samples = SamplingBox(count=SYMMETRY_SAMPLES, sizes=(1, 2, 3), seed=seed).samples(R.g)
    _check_symmetric_function(R, samples, tol)

    M = minimize(R)
    D = np.array(M.D)
    if np.max(np.abs(D - D.T), initial=0.0) > tol * (1.0 + np.max(np.abs(D), initial=0.0)):
        raise SymmetrizationFailed("minimal realizations of r and rᵀ differ in D")
    D = (D + D.T) / 2
    if M.d == 0:
        return DescriptorRealization.constant(D, M.g, Variant.SYMMETRIC)

    A_hat, C_hat, B = M.identity_form()
    d = M.d
    eye = np.eye(d)
    # column-major vec: vec(ÂᵀT) = (I ⊗ Âᵀ) vec T, vec(TÂ) = (Âᵀ ⊗ I) vec T, vec(TĈ) = (Ĉᵀ ⊗ I) vec T
    rows = [np.kron(eye, a.T) - np.kron(a.T, eye) for a in A_hat]
    rows.append(np.kron(C_hat.T, eye))
    K = np.vstack(rows)
    rhs = np.concatenate([np.zeros(d * d * len(A_hat)), B.flatten(order="F")])
    solution, _, rank, _ = lstsq(K, rhs)
    residual = float(np.linalg.norm(K @ solution - rhs))
    if rank < d * d or residual > tol * (1.0 + float(np.linalg.norm(rhs))):
        raise SymmetrizationFailed(f"similarity system has rank {rank} of {d * d}", residual)
    T = solution.reshape(d, d, order="F")
    asym = float(np.linalg.norm(T - T.T))
    if asym > 1e-6 * (1.0 + float(np.linalg.norm(T))):
        raise SymmetrizationFailed("similarity is not symmetric", asym)
    T = (T + T.T) / 2
    if not is_invertible(T):
        raise SymmetrizationFailed("similarity is singular", singular_value_extremes(T)[0])

    S = normalize_symmetric(T, [T @ a for a in A_hat], B, D)
    gap, _, _ = max_sample_gap(R, S, samples)
    if gap > tol:
        raise SymmetrizationFailed("symmetric realization does not reproduce r", gap)
    logger.info("symmetrized d=%d realization (signature %s)", S.d, np.diag(S.J).astype(int).tolist())
    return S


def realize_symmetric(e, tol=DEFAULT_TOL, seed=DEFAULT_SEED):
    """Minimal Symmetric realization of a symmetric expression."""
    return symmetrize(realize(e), tol, seed)
