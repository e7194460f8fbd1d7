"""
Truncated Fock space 𝔉(ν): the span of all words of length <= ν, with the
shifts S_j w = x_j w (zero on words of length ν) and the symmetric tuple
K_j = S_j + S_jᵀ. Everything here is exact: integers, or sympy rationals for
non-integer ζ. Floats appear only in as_matrix_tuple / fock_direct_sum.
"""
import logging
from fractions import Fraction

import numpy as np
import sympy
from scipy.linalg import block_diag

from ncrat.config import FOCK_DIMENSION_CAP
from ncrat.errors import DimensionOverflow, WordLengthMismatch, WordTooLong
from ncrat.ncalg import MatrixTuple, Word, all_words

logger = logging.getLogger(__name__)


def fock_dimension(g, nu):
    """𝔡 = Σ_{j=0}^{ν} g^j."""
    return sum(g ** j for j in range(nu + 1))


class FockBasis:
    def __init__(self, g, nu):
        self.g = g
        self.nu = nu
        self.words = list(all_words(g, nu))                        # (length, lex) order
        self.index = {w: i for i, w in enumerate(self.words)}      # word -> position

    def __repr__(self):
        return f"FockBasis(g={self.g}, nu={self.nu}, dimension={self.dimension})"

    @property
    def dimension(self):
        return len(self.words)

    def basis_vector(self, w):
        v = np.zeros(self.dimension, dtype=np.int64)
        v[self.index[Word(w)]] = 1
        return v


class ShiftTuple:
    def __init__(self, S, basis=None, parts=()):
        self.S = tuple(S)
        self.K = tuple(s + s.T for s in self.S)
        self.basis = basis
        self.parts = tuple(parts)       # summands when built by direct_sum

    def __repr__(self):
        return f"ShiftTuple(g={self.g}, dimension={self.dimension})"

    @property
    def g(self):
        return len(self.S)

    @property
    def dimension(self):
        return self.S[0].shape[0]


def build_fock(g, nu, cap=FOCK_DIMENSION_CAP):
    """
    Returns:
        (FockBasis, ShiftTuple)

    Raises:
        DimensionOverflow: 𝔡 exceeds cap
    """
    if g < 1 or nu < 0:
        raise ValueError("need g >= 1 and nu >= 0")
    dimension = fock_dimension(g, nu)
    if dimension > cap:
        raise DimensionOverflow(dimension, cap)
    basis = FockBasis(g, nu)
    S = [np.zeros((dimension, dimension), dtype=np.int64) for _ in range(g)]
    for w, col in basis.index.items():
        if len(w) < nu:
            for j in range(1, g + 1):
                S[j - 1][basis.index[Word((j,)) + w], col] = 1
    logger.debug("built Fock space g=%d nu=%d (dimension %d)", g, nu, dimension)
    return basis, ShiftTuple(S, basis)


def k_word_vector(T, w):
    """
    K^w ∅ = K_{i1} ... K_{ik} ∅ as an integer vector.

    Raises:
        WordTooLong: |w| > ν
    """
    w = Word(w)
    if T.basis is None:
        raise ValueError("k_word_vector needs a single Fock space, not a direct sum")
    if len(w) > T.basis.nu:
        raise WordTooLong(f"word {w} longer than nu={T.basis.nu}")
    v = T.basis.basis_vector(Word())
    for letter in reversed(w):
        v = T.K[letter - 1] @ v
    return v


def _rational(z):
    f = Fraction(z)
    return sympy.Rational(f.numerator, f.denominator)


def _exact_vector(zeta):
    values = list(np.asarray(zeta, dtype=object).ravel())
    if all(isinstance(z, (int, np.integer)) for z in values):
        return np.array([int(z) for z in values], dtype=np.int64)
    return np.array([_rational(z) for z in values], dtype=object)


def separating_map(basis, omega, zeta):
    """
    Qᵀ = ζ e_ωᵀ, an N×𝔡 map with QᵀK^ω∅ = ζ and QᵀK^w∅ = 0 for all other
    words w of length <= ν.

    Raises:
        WordLengthMismatch: |ω| ≠ ν
    """
    omega = Word(omega)
    if len(omega) != basis.nu:
        raise WordLengthMismatch(f"omega has length {len(omega)}, nu is {basis.nu}")
    zeta = _exact_vector(zeta)
    selector = basis.basis_vector(omega)
    if zeta.dtype == object:
        selector = selector.astype(object)
    return np.outer(zeta, selector)


def direct_sum(T1, T2):
    """Shift tuple of 𝔉(ν₁) ⊕ 𝔉(ν₂): block-diagonal S_j."""
    S = [block_diag(s1, s2).astype(np.int64) for s1, s2 in zip(T1.S, T2.S)]
    return ShiftTuple(S, parts=(T1, T2))


def as_matrix_tuple(T):
    return MatrixTuple([k.astype(float) for k in T.K])


def fock_direct_sum(g, nu1, nu2, cap=FOCK_DIMENSION_CAP):
    """K(ν₁) ⊕ K(ν₂) as a float MatrixTuple."""
    _, T1 = build_fock(g, nu1, cap)
    _, T2 = build_fock(g, nu2, cap)
    return as_matrix_tuple(direct_sum(T1, T2))


def integer_rank(matrix):
    """Exact rank of an integer (or rational) matrix over the rationals."""
    rows = [[_rational(v) for v in row] for row in np.asarray(matrix, dtype=object)]
    if not rows or not rows[0]:
        return 0
    return int(sympy.Matrix(rows).rank())

