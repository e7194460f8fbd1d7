"""
Free algebra layer: words, matrix-valued free polynomials, rational
expression trees, matrix tuples, sampling and equivalence testing.

Kronecker convention throughout the package: a coefficient P evaluated against
a matrix word X^w contributes P ⊗ X^w.
"""
import itertools
import logging

import numpy as np
from scipy.linalg import block_diag

from ncrat.config import (
    INVERTIBILITY_RTOL, DEFAULT_EPSILON, DEFAULT_SIZES, DEFAULT_SAMPLES,
    DEFAULT_SEED, DEFAULT_SERIES_DEGREE, DEFAULT_TOL, NUM_WORKERS,
)
from ncrat.errors import (
    DomainError, NotAnalyticAtZero, OutsideFormalDomain, ShapeMismatch,
)
from ncrat.sample_worker import map_outcomes

logger = logging.getLogger(__name__)


def as_matrix(value):
    """Coerces scalars and nested lists to a 2-D float array."""
    m = np.array(value, dtype=float)
    if m.ndim == 0:
        return m.reshape(1, 1)
    if m.ndim != 2:
        raise ShapeMismatch(f"expected a matrix, got an array with {m.ndim} dimensions")
    return m


def singular_value_extremes(m):
    """
    Returns:
        (sigma_min, sigma_max); an empty matrix reports (inf, 0)
    """
    if m.size == 0:
        return np.inf, 0.0
    s = np.linalg.svd(m, compute_uv=False)
    return float(s[-1]), float(s[0])


def is_invertible(m, rtol=INVERTIBILITY_RTOL, scale=None):
    """
    σ_min(m) > rtol · reference, the reference being σ_max(m) or, when given,
    the larger of σ_max(m) and scale (the size of the terms m was formed from).
    """
    if m.shape[0] != m.shape[1]:
        return False
    if m.size == 0:
        return True
    sigma_min, sigma_max = singular_value_extremes(m)
    reference = sigma_max if scale is None else max(sigma_max, float(scale))
    return reference > 0 and sigma_min > rtol * reference


def _readonly(m):
    m.setflags(write=False)
    return m


def _format_number(value):
    return format(float(value), ".17g")


class Word(tuple):
    """
    A word in the free monoid on x1..xg, stored as a tuple of 1-based indices.
    The empty tuple is the empty word.
    """

    def __new__(cls, letters=()):
        return super().__new__(cls, (int(i) for i in letters))

    def __add__(self, other):
        return Word(tuple.__add__(self, tuple(other)))

    def __repr__(self):
        if not self:
            return "∅"
        return "*".join(f"x{i}" for i in self)

    __str__ = __repr__

    @classmethod
    def parse(cls, text):
        text = text.strip()
        if text in ("", "∅", "1", "()"):
            return cls()
        letters = []
        for part in text.split("*"):
            part = part.strip()
            if not part.startswith("x") or not part[1:].isdigit():
                raise ValueError(f"not a word: {text!r}")
            letters.append(int(part[1:]))
        return cls(letters)

    def transpose(self):
        return Word(reversed(self))

    def sort_key(self):
        return (len(self), tuple(self))

    def check(self, g):
        for i in self:
            if not 1 <= i <= g:
                raise ValueError(f"letter x{i} outside x1..x{g}")
        return self

    def evaluate(self, X):
        """X^w = X_{i1} ... X_{ik}; the identity for the empty word."""
        result = np.eye(X.n)
        for i in self:
            result = result @ X[i - 1]
        return result


def all_words(g, max_length):
    """All words of length <= max_length in (length, lexicographic) order."""
    for length in range(max_length + 1):
        for letters in itertools.product(range(1, g + 1), repeat=length):
            yield Word(letters)


class FreePolynomial:
    """
    p = Σ P_w w with k1×k2 real coefficients. Coefficients are kept in
    (length, lexicographic) word order; exactly-zero coefficients are dropped.
    """

    def __init__(self, coeffs, shape=None, num_vars=1):
        collected = {}
        for word, coeff in coeffs.items():
            word = Word(word).check(num_vars)
            coeff = as_matrix(coeff)
            if shape is None:
                shape = coeff.shape
            if coeff.shape != tuple(shape):
                raise ShapeMismatch(f"coefficient of {word} has shape {coeff.shape}, expected {tuple(shape)}")
            collected[word] = collected[word] + coeff if word in collected else coeff.copy()
        if shape is None:
            raise ShapeMismatch("zero polynomial needs an explicit shape")
        self.shape = tuple(int(k) for k in shape)
        self.num_vars = num_vars
        self.coeffs = {
            word: _readonly(collected[word])
            for word in sorted(collected, key=Word.sort_key)
            if np.any(collected[word] != 0)
        }

    def __repr__(self):
        return f"FreePolynomial(shape={self.shape}, g={self.num_vars}, terms={len(self.coeffs)})"

    @classmethod
    def constant(cls, value, num_vars=1):
        value = as_matrix(value)
        return cls({Word(): value}, value.shape, num_vars)

    @classmethod
    def variable(cls, j, num_vars):
        return cls({Word([j]): np.ones((1, 1))}, (1, 1), num_vars)

    @classmethod
    def zero(cls, shape, num_vars=1):
        return cls({}, shape, num_vars)

    @property
    def degree(self):
        return max((len(w) for w in self.coeffs), default=-1)

    def coefficient(self, word):
        return self.coeffs.get(Word(word), np.zeros(self.shape))

    def value_at_zero(self):
        return self.coefficient(Word())

    def is_constant(self):
        return all(len(w) == 0 for w in self.coeffs)

    def key(self):
        return (self.shape, tuple((w, c.tobytes()) for w, c in self.coeffs.items()))

    def __eq__(self, other):
        return isinstance(other, FreePolynomial) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def _same_shape(self, other):
        if self.shape != other.shape:
            raise ShapeMismatch(f"cannot add shapes {self.shape} and {other.shape}")

    def __add__(self, other):
        self._same_shape(other)
        coeffs = dict(self.coeffs)
        for w, c in other.coeffs.items():
            coeffs[w] = coeffs[w] + c if w in coeffs else c
        return FreePolynomial(coeffs, self.shape, max(self.num_vars, other.num_vars))

    def __neg__(self):
        return self.scaled(-1.0)

    def __sub__(self, other):
        return self + (-other)

    def scaled(self, c):
        return FreePolynomial({w: c * m for w, m in self.coeffs.items()}, self.shape, self.num_vars)

    def __matmul__(self, other):
        if self.shape[1] != other.shape[0]:
            raise ShapeMismatch(f"cannot multiply shapes {self.shape} and {other.shape}")
        coeffs = {}
        for w1, c1 in self.coeffs.items():
            for w2, c2 in other.coeffs.items():
                w = w1 + w2
                term = c1 @ c2
                coeffs[w] = coeffs[w] + term if w in coeffs else term
        return FreePolynomial(coeffs, (self.shape[0], other.shape[1]), max(self.num_vars, other.num_vars))

    def transpose(self):
        """pᵀ = Σ P_wᵀ wᵀ."""
        coeffs = {w.transpose(): c.T for w, c in self.coeffs.items()}
        return FreePolynomial(coeffs, (self.shape[1], self.shape[0]), self.num_vars)

    def lifted(self, k):
        """A 1×1 polynomial s as the k×k polynomial s ⊗ I_k."""
        if self.shape != (1, 1):
            raise ShapeMismatch(f"only 1x1 polynomials lift, got {self.shape}")
        return FreePolynomial({w: c[0, 0] * np.eye(k) for w, c in self.coeffs.items()}, (k, k), self.num_vars)

    def truncated(self, max_degree):
        return FreePolynomial({w: c for w, c in self.coeffs.items() if len(w) <= max_degree},
                              self.shape, self.num_vars)

    def dense(self, max_degree):
        """Coefficient map over every word of length <= max_degree, zero padded."""
        return {w: np.array(self.coefficient(w)) for w in all_words(self.num_vars, max_degree)}

    def evaluate(self, X):
        """p(X) = Σ P_w ⊗ X^w."""
        n = X.n
        result = np.zeros((self.shape[0] * n, self.shape[1] * n))
        for w, c in self.coeffs.items():
            result += np.kron(c, w.evaluate(X))
        return result

    def _entry_text(self, a, b):
        terms = []
        for w, c in self.coeffs.items():
            value = c[a, b]
            if value == 0:
                continue
            if not w:
                text = _format_number(abs(value))
            elif abs(value) == 1:
                text = str(w)
            else:
                text = f"{_format_number(abs(value))}*{w}"
            terms.append(("-" if value < 0 else "+", text))
        if not terms:
            return "0"
        sign, text = terms[0]
        out = ("-" if sign == "-" else "") + text
        for sign, text in terms[1:]:
            out += f" {sign} {text}"
        return out

    def to_text(self):
        if self.shape == (1, 1):
            return self._entry_text(0, 0)
        rows = []
        for a in range(self.shape[0]):
            rows.append(", ".join(self._entry_text(a, b) for b in range(self.shape[1])))
        return "[" + "; ".join(rows) + "]"


class RationalExpr:
    """
    Base class of expression tree nodes. Nodes are immutable; the value at 0 is
    computed once when the node is built.
    """

    def __init__(self, shape, num_vars):
        self.shape = tuple(shape)
        self.num_vars = num_vars
        self._zero_value = None

    def __repr__(self):
        return f"{type(self).__name__}({self.to_text()})"

    def __eq__(self, other):
        return isinstance(other, RationalExpr) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def children(self):
        return ()

    def value_at_zero(self):
        if self._zero_value is None:
            self._zero_value = _readonly(self._compute_value_at_zero())
        return self._zero_value

    def evaluate(self, X):
        return eval_expr(self, X)

    # operator sugar; numbers are promoted to constants
    def __add__(self, other):
        return add(self, _promote(other, self.num_vars))

    def __radd__(self, other):
        return add(_promote(other, self.num_vars), self)

    def __sub__(self, other):
        return sub(self, _promote(other, self.num_vars))

    def __rsub__(self, other):
        return sub(_promote(other, self.num_vars), self)

    def __mul__(self, other):
        return mul(self, _promote(other, self.num_vars))

    def __rmul__(self, other):
        return mul(_promote(other, self.num_vars), self)

    def __neg__(self):
        return scale(-1.0, self)


class Poly(RationalExpr):
    def __init__(self, poly):
        super().__init__(poly.shape, poly.num_vars)
        self.poly = poly

    def key(self):
        return ("poly", self.poly.key())

    def to_text(self):
        text = self.poly.to_text()
        return f"({text})" if len(self.poly.coeffs) > 1 and self.shape == (1, 1) else text

    def _compute_value_at_zero(self):
        return np.array(self.poly.value_at_zero())

    def _evaluate(self, X, node_id):
        return self.poly.evaluate(X)

    def truncated_series(self, max_degree):
        return self.poly.truncated(max_degree)


class Sum(RationalExpr):
    def __init__(self, terms):
        terms = tuple(terms)
        shape = terms[0].shape
        for t in terms:
            if t.shape != shape:
                raise ShapeMismatch(f"cannot add shapes {shape} and {t.shape}")
        super().__init__(shape, max(t.num_vars for t in terms))
        self.terms = terms

    def children(self):
        return self.terms

    def key(self):
        return ("sum", tuple(t.key() for t in self.terms))

    def to_text(self):
        return "(" + " + ".join(t.to_text() for t in self.terms) + ")"

    def _compute_value_at_zero(self):
        return sum((t.value_at_zero() for t in self.terms), np.zeros(self.shape))

    def _evaluate(self, X, node_id):
        values = [t._evaluate(X, f"{node_id}.{i}") for i, t in enumerate(self.terms)]
        return sum(values[1:], values[0])

    def truncated_series(self, max_degree):
        series = [t.truncated_series(max_degree) for t in self.terms]
        return sum(series[1:], series[0])


class Product(RationalExpr):
    def __init__(self, factors):
        factors = tuple(factors)
        for left, right in zip(factors, factors[1:]):
            if left.shape[1] != right.shape[0]:
                raise ShapeMismatch(f"cannot multiply shapes {left.shape} and {right.shape}")
        super().__init__((factors[0].shape[0], factors[-1].shape[1]), max(f.num_vars for f in factors))
        self.factors = factors

    def children(self):
        return self.factors

    def key(self):
        return ("product", tuple(f.key() for f in self.factors))

    def to_text(self):
        return "*".join(f.to_text() for f in self.factors)

    def _compute_value_at_zero(self):
        value = self.factors[0].value_at_zero()
        for f in self.factors[1:]:
            value = value @ f.value_at_zero()
        return value

    def _evaluate(self, X, node_id):
        value = self.factors[0]._evaluate(X, f"{node_id}.0")
        for i, f in enumerate(self.factors[1:], start=1):
            value = value @ f._evaluate(X, f"{node_id}.{i}")
        return value

    def truncated_series(self, max_degree):
        series = self.factors[0].truncated_series(max_degree)
        for f in self.factors[1:]:
            series = (series @ f.truncated_series(max_degree)).truncated(max_degree)
        return series


class Inverse(RationalExpr):
    def __init__(self, child):
        if child.shape[0] != child.shape[1]:
            raise ShapeMismatch(f"inverse of a non-square {child.shape} expression")
        super().__init__(child.shape, child.num_vars)
        self.child = child
        at_zero = child.value_at_zero()
        if not is_invertible(at_zero):
            raise NotAnalyticAtZero(singular_value_extremes(at_zero)[0])
        self.value_at_zero()

    def children(self):
        return (self.child,)

    def key(self):
        return ("inv", self.child.key())

    def to_text(self):
        return f"inv({self.child.to_text()})"

    def _compute_value_at_zero(self):
        return np.linalg.inv(self.child.value_at_zero())

    def _evaluate(self, X, node_id):
        m = self.child._evaluate(X, f"{node_id}.0")
        if not is_invertible(m, scale=np.linalg.norm(self.child.value_at_zero(), 2)):
            raise OutsideFormalDomain(node_id, singular_value_extremes(m)[0])
        return np.linalg.inv(m)

    def truncated_series(self, max_degree):
        # s^-1 = Σ_k (-s0^-1 s')^k s0^-1 with s' the part of s without constant term
        s = self.child.truncated_series(max_degree)
        s0_inv = np.linalg.inv(s.value_at_zero())
        rest = s - FreePolynomial.constant(s.value_at_zero(), s.num_vars)
        step = FreePolynomial.constant(-s0_inv, s.num_vars) @ rest
        term = FreePolynomial.constant(s0_inv, s.num_vars)
        total = term
        for _ in range(max_degree):
            term = (step @ term).truncated(max_degree)
            total = total + term
        return total


class Transpose(RationalExpr):
    def __init__(self, child):
        super().__init__((child.shape[1], child.shape[0]), child.num_vars)
        self.child = child

    def children(self):
        return (self.child,)

    def key(self):
        return ("transpose", self.child.key())

    def to_text(self):
        return f"T({self.child.to_text()})"

    def _compute_value_at_zero(self):
        return self.child.value_at_zero().T

    def _evaluate(self, X, node_id):
        return self.child._evaluate(X, f"{node_id}.0").T

    def truncated_series(self, max_degree):
        return self.child.truncated_series(max_degree).transpose()


class ScalarMul(RationalExpr):
    def __init__(self, scalar, child):
        super().__init__(child.shape, child.num_vars)
        self.scalar = float(scalar)
        self.child = child

    def children(self):
        return (self.child,)

    def key(self):
        return ("scale", self.scalar, self.child.key())

    def to_text(self):
        return f"{_format_number(self.scalar)}*{self.child.to_text()}"

    def _compute_value_at_zero(self):
        return self.scalar * self.child.value_at_zero()

    def _evaluate(self, X, node_id):
        return self.scalar * self.child._evaluate(X, f"{node_id}.0")

    def truncated_series(self, max_degree):
        return self.child.truncated_series(max_degree).scaled(self.scalar)


# ---- constructors ----

def constant(value, num_vars=1):
    return Poly(FreePolynomial.constant(value, num_vars))


def variable(j, num_vars):
    return Poly(FreePolynomial.variable(j, num_vars))


def _promote(value, num_vars):
    if isinstance(value, RationalExpr):
        return value
    return constant(value, num_vars)


def _scalar_constant(e):
    """The number c if e is the constant 1×1 polynomial c, else None."""
    if isinstance(e, Poly) and e.shape == (1, 1) and e.poly.is_constant():
        return float(e.poly.value_at_zero()[0, 0])
    return None


def lift_scalar(e, k):
    """Treats a 1×1 expression s as s ⊗ I_k."""
    if k == 1:
        return e
    if isinstance(e, Poly):
        return Poly(e.poly.lifted(k))
    if isinstance(e, ScalarMul):
        return ScalarMul(e.scalar, lift_scalar(e.child, k))
    terms = []
    for i in range(k):
        column = np.zeros((k, 1))
        column[i, 0] = 1.0
        terms.append(Product([constant(column, e.num_vars), e, constant(column.T, e.num_vars)]))
    return Sum(terms)


def _broadcast_square(a, b):
    if a.shape == b.shape:
        return a, b
    if a.shape == (1, 1) and b.shape[0] == b.shape[1]:
        return lift_scalar(a, b.shape[0]), b
    if b.shape == (1, 1) and a.shape[0] == a.shape[1]:
        return a, lift_scalar(b, a.shape[0])
    raise ShapeMismatch(f"cannot add shapes {a.shape} and {b.shape}")


def add(a, b):
    a, b = _broadcast_square(a, b)
    terms = []
    for e in (a, b):
        terms.extend(e.terms if isinstance(e, Sum) else (e,))
    polys = [t.poly for t in terms if isinstance(t, Poly)]
    others = [t for t in terms if not isinstance(t, Poly)]
    merged = []
    if polys:
        total = sum(polys[1:], polys[0])
        if total.coeffs or not others:
            merged.append(Poly(total))
    merged.extend(others)
    if len(merged) == 1:
        return merged[0]
    return Sum(merged)


def sub(a, b):
    return add(a, scale(-1.0, b))


def scale(c, e):
    c = float(c)
    if c == 1.0:
        return e
    if isinstance(e, Poly):
        return Poly(e.poly.scaled(c))
    if isinstance(e, ScalarMul):
        return ScalarMul(c * e.scalar, e.child)
    return ScalarMul(c, e)


def mul(a, b):
    c = _scalar_constant(a)
    if c is not None and not isinstance(b, Poly):
        return scale(c, b)
    c = _scalar_constant(b)
    if c is not None and not isinstance(a, Poly):
        return scale(c, a)
    if a.shape[1] != b.shape[0]:
        if a.shape == (1, 1):
            a = lift_scalar(a, b.shape[0])
        elif b.shape == (1, 1):
            b = lift_scalar(b, a.shape[1])
        else:
            raise ShapeMismatch(f"cannot multiply shapes {a.shape} and {b.shape}")
    factors = []
    for e in (a, b):
        for f in (e.factors if isinstance(e, Product) else (e,)):
            if factors and isinstance(f, Poly) and isinstance(factors[-1], Poly):
                factors[-1] = Poly(factors[-1].poly @ f.poly)
            else:
                factors.append(f)
    if len(factors) == 1:
        return factors[0]
    return Product(factors)


def inv(e):
    return Inverse(e)


def transpose_node(e):
    """T(e) as written: folds into polynomials and cancels double transposes."""
    if isinstance(e, Poly):
        return Poly(e.poly.transpose())
    if isinstance(e, Transpose):
        return e.child
    return Transpose(e)


def block_matrix(rows):
    """
    Assembles [[e11, e12, ...], ...] into one expression. Entries in a row share
    their row count and entries in a column share their column count.
    """
    heights = [row[0].shape[0] for row in rows]
    widths = [e.shape[1] for e in rows[0]]
    for i, row in enumerate(rows):
        if len(row) != len(widths):
            raise ShapeMismatch("matrix rows have different lengths")
        for j, e in enumerate(row):
            if e.shape != (heights[i], widths[j]):
                raise ShapeMismatch(f"block ({i + 1}, {j + 1}) has shape {e.shape}, expected {(heights[i], widths[j])}")
    num_vars = max(e.num_vars for row in rows for e in row)
    total_rows, total_cols = sum(heights), sum(widths)
    row_offsets = np.cumsum([0] + heights)
    col_offsets = np.cumsum([0] + widths)

    result = None
    for i, row in enumerate(rows):
        for j, e in enumerate(row):
            left = np.zeros((total_rows, heights[i]))
            left[row_offsets[i]:row_offsets[i + 1], :] = np.eye(heights[i])
            right = np.zeros((widths[j], total_cols))
            right[:, col_offsets[j]:col_offsets[j + 1]] = np.eye(widths[j])
            placed = mul(mul(constant(left, num_vars), e), constant(right, num_vars))
            result = placed if result is None else add(result, placed)
    return result


def transpose_expr(e):
    """
    Structural transpose: pushes transposition down to the polynomial leaves,
    reversing products. A Transpose node keeps its place and transposes its
    child instead, (cᵀ)ᵀ = (T(c))ᵀ, so transpose_expr is an involution.
    """
    if isinstance(e, Poly):
        return Poly(e.poly.transpose())
    if isinstance(e, Sum):
        return Sum([transpose_expr(t) for t in e.terms])
    if isinstance(e, Product):
        return Product([transpose_expr(f) for f in reversed(e.factors)])
    if isinstance(e, Inverse):
        return Inverse(transpose_expr(e.child))
    if isinstance(e, Transpose):
        return Transpose(transpose_expr(e.child))
    if isinstance(e, ScalarMul):
        return ScalarMul(e.scalar, transpose_expr(e.child))
    raise TypeError(f"not an expression node: {e!r}")


# ---- evaluation ----

class MatrixTuple:
    """
    A g-tuple of real n×n matrices. With the symmetric flag set, entries are
    replaced by (X + Xᵀ)/2, which is exactly symmetric in floating point.
    """

    def __init__(self, entries, symmetric=True):
        mats = [as_matrix(x) for x in entries]
        if not mats:
            raise ShapeMismatch("a matrix tuple needs at least one entry")
        n = mats[0].shape[0]
        for m in mats:
            if m.shape != (n, n):
                raise ShapeMismatch(f"entries must all be {n}x{n}, got {m.shape}")
        if symmetric:
            mats = [(m + m.T) / 2 for m in mats]
        self.entries = tuple(_readonly(m) for m in mats)
        self.symmetric = symmetric

    def __repr__(self):
        return f"MatrixTuple(g={self.g}, n={self.n}, symmetric={self.symmetric})"

    def __getitem__(self, j):
        return self.entries[j]

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def g(self):
        return len(self.entries)

    @property
    def n(self):
        return self.entries[0].shape[0]

    @classmethod
    def zeros(cls, g, n):
        return cls([np.zeros((n, n)) for _ in range(g)])

    @classmethod
    def scalars(cls, values):
        return cls([[[float(v)]] for v in values])

    def scaled(self, t):
        return MatrixTuple([t * x for x in self.entries], self.symmetric)

    def __add__(self, other):
        return MatrixTuple([x + y for x, y in zip(self.entries, other.entries)],
                           self.symmetric and other.symmetric)

    def __sub__(self, other):
        return self + other.scaled(-1.0)

    def direct_sum(self, other):
        return MatrixTuple([block_diag(x, y) for x, y in zip(self.entries, other.entries)],
                           self.symmetric and other.symmetric)

    def sum_of_squares(self):
        return sum((x @ x for x in self.entries), np.zeros((self.n, self.n)))

    def radius(self):
        """Largest eigenvalue of Σ X_j²."""
        return float(np.linalg.eigvalsh(self.sum_of_squares())[-1])

    def norm(self):
        return float(np.sqrt(sum(np.sum(x * x) for x in self.entries)))

    def is_zero(self):
        return all(not np.any(x) for x in self.entries)

    def to_dict(self):
        return {"n": self.n, "g": self.g, "X": [x.tolist() for x in self.entries], "symmetric": self.symmetric}

    @classmethod
    def from_dict(cls, data):
        X = data["X"]
        if len(X) != data.get("g", len(X)):
            raise ShapeMismatch(f"tuple declares g={data['g']} but has {len(X)} entries")
        return cls(X, data.get("symmetric", True))


def random_direction(rng, g, n):
    """Random symmetric tuple E normalized so that λmax(Σ E_j²) = 1."""
    entries = []
    for _ in range(g):
        a = rng.standard_normal((n, n))
        entries.append((a + a.T) / 2)
    E = MatrixTuple(entries)
    radius = E.radius()
    if radius <= 0:
        return E
    return E.scaled(1.0 / np.sqrt(radius))


class SamplingBox:
    """
    Sampling plan for the free ε-neighborhood of 0: tuples with Σ X_j² ≺ ε I.
    Sizes are used round-robin; every draw comes from one seeded generator.
    """

    def __init__(self, epsilon=DEFAULT_EPSILON, sizes=DEFAULT_SIZES, count=DEFAULT_SAMPLES,
                 seed=DEFAULT_SEED, series_degree=DEFAULT_SERIES_DEGREE):
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        self.epsilon = epsilon
        self.sizes = tuple(sizes)
        self.count = count
        self.seed = seed
        self.series_degree = series_degree

    def __repr__(self):
        return (f"SamplingBox(epsilon={self.epsilon}, sizes={self.sizes}, count={self.count}, "
                f"seed={self.seed})")

    def samples(self, g):
        rng = np.random.default_rng(self.seed)
        out = []
        for i in range(self.count):
            n = self.sizes[i % len(self.sizes)]
            E = random_direction(rng, g, n)
            level = self.epsilon * rng.uniform(0.0, 1.0)
            out.append(E.scaled(np.sqrt(level)))
        return out


def eval_expr(e, X):
    """
    Evaluates e at X, lifting coefficients as P ⊗ X^w.

    Raises:
        OutsideFormalDomain: an inverse node met a singular matrix; carries the
            node's tree path ("0" is the root, "0.1" its second child, ...)
    """
    if X.g < e.num_vars:
        raise ShapeMismatch(f"expression uses {e.num_vars} variables, tuple has {X.g}")
    return e._evaluate(X, "0")


def evaluate(source, X):
    """Evaluates an expression or anything with an evaluate(X) method (realizations)."""
    if isinstance(source, RationalExpr):
        return eval_expr(source, X)
    return source.evaluate(X)


def series_coefficients(source, max_degree):
    """
    Coefficients of the power series at 0, for every word of length <= max_degree.

    Args:
        source: a RationalExpr or a realization
        max_degree: truncation length

    Returns:
        dict: Word -> coefficient matrix (zero padded)
    """
    if isinstance(source, RationalExpr):
        series = source.truncated_series(max_degree)
        series = FreePolynomial(series.coeffs, series.shape, source.num_vars)
        return series.dense(max_degree)
    return source.series_coefficients(max_degree)


def series_distance(series1, series2):
    """Largest mixed-relative coefficient difference between two series maps."""
    worst = 0.0
    for w, c1 in series1.items():
        c2 = series2.get(w)
        if c2 is None:
            c2 = np.zeros_like(c1)
        worst = max(worst, float(np.linalg.norm(c1 - c2)) / (1.0 + float(np.linalg.norm(c1))))
    return worst


class Verdict:
    """
    - EQUIVALENT: all samples and series coefficients agree
    - DISTINGUISHED: a sampled tuple separates the two functions
    - INCONCLUSIVE: not enough evidence either way
    """
    EQUIVALENT, DISTINGUISHED, INCONCLUSIVE = "Equivalent", "Distinguished", "Inconclusive"


class EquivalenceVerdict:
    def __init__(self, kind, witness=None, compared=0, max_error=0.0, series_error=0.0, reason=""):
        self.kind = kind
        self.witness = witness              # MatrixTuple when DISTINGUISHED
        self.compared = compared            # samples inside both domains
        self.max_error = max_error
        self.series_error = series_error
        self.reason = reason

    def __repr__(self):
        return f"EquivalenceVerdict({self.kind}, compared={self.compared}, max_error={self.max_error:.3e})"

    def to_dict(self):
        return {
            "verdict": self.kind,
            "witness": self.witness.to_dict() if self.witness is not None else None,
            "compared": self.compared,
            "max_error": self.max_error,
            "series_error": self.series_error,
            "reason": self.reason,
        }


def equivalence_test(e1, e2, plan=None, tol=DEFAULT_TOL, num_workers=NUM_WORKERS):
    """
    Sampling test of evaluation equivalence, backed by a series comparison.

    Values are compared with the mixed tolerance ||e1(X) - e2(X)|| > tol * (1 + ||e1(X)||).
    Samples outside either domain are skipped.

    Args:
        e1, e2: expressions or realizations of the same shape
        plan: SamplingBox (default: sizes 1..4 in the 0.1-neighborhood)
        tol: comparison tolerance

    Returns:
        EquivalenceVerdict
    """
    if plan is None:
        plan = SamplingBox()
    if tuple(e1.shape) != tuple(e2.shape):
        raise ShapeMismatch(f"cannot compare shapes {tuple(e1.shape)} and {tuple(e2.shape)}")
    g = max(e1.num_vars, e2.num_vars)
    samples = plan.samples(g)

    def both(X):
        return evaluate(e1, X), evaluate(e2, X)

    outcomes = map_outcomes(both, samples, num_workers, expected=(DomainError,))
    compared = 0
    max_error = 0.0
    for X, outcome in zip(samples, outcomes):
        if isinstance(outcome, DomainError):
            continue
        v1, v2 = outcome
        compared += 1
        diff = float(np.linalg.norm(v1 - v2))
        max_error = max(max_error, diff)
        if diff > tol * (1.0 + float(np.linalg.norm(v1))):
            logger.info("distinguished at n=%d after %d samples (diff=%.3e)", X.n, compared, diff)
            return EquivalenceVerdict(Verdict.DISTINGUISHED, X, compared, max_error)

    if compared == 0:
        return EquivalenceVerdict(Verdict.INCONCLUSIVE, compared=0,
                                  reason="no sample inside both domains")

    series_error = series_distance(series_coefficients(e1, plan.series_degree),
                                   series_coefficients(e2, plan.series_degree))
    if series_error > tol:
        return EquivalenceVerdict(Verdict.INCONCLUSIVE, compared=compared, max_error=max_error,
                                  series_error=series_error,
                                  reason="series differ but no sample separates the functions")
    logger.info("equivalent on %d samples, series to degree %d", compared, plan.series_degree)
    return EquivalenceVerdict(Verdict.EQUIVALENT, compared=compared, max_error=max_error,
                              series_error=series_error)
