"""
2×2 block elimination for M = [[Φ, U], [Ω, Ψ]] (U = Ωᵀ unless given).

With pivot Ψ the Schur complement is 𝒮 = Φ − UΨ⁻¹Ω and
    M⁻¹ = [[I, 0], [−Ψ⁻¹Ω, I]] · diag(𝒮⁻¹, Ψ⁻¹) · [[I, −UΨ⁻¹], [0, I]];
with pivot Φ it is 𝒮_* = Ψ − ΩΦ⁻¹U and
    M⁻¹ = [[I, −Φ⁻¹U], [0, I]] · diag(Φ⁻¹, 𝒮_*⁻¹) · [[I, 0], [−ΩΦ⁻¹, I]].
"""
import numpy as np

from ncrat.config import KERNEL_CHECK_TOL
from ncrat.errors import NotInKernel, PivotSingular, SchurSingular, ShapeMismatch
from ncrat.ncalg import as_matrix, is_invertible, singular_value_extremes


class Pivot:
    """
    - PSI: eliminate through the lower-right block
    - PHI: eliminate through the upper-left block
    """
    PSI, PHI = "psi", "phi"

    @staticmethod
    def to_string(pivot):
        return "PSI" if pivot == Pivot.PSI else "PHI"


class BlockMatrix:
    def __init__(self, Phi, Omega, Psi, upper=None):
        self.Phi = as_matrix(Phi)
        self.Omega = as_matrix(Omega)
        self.Psi = as_matrix(Psi)
        self.upper = self.Omega.T if upper is None else as_matrix(upper)
        p, q = self.Phi.shape[0], self.Psi.shape[0]
        if self.Phi.shape != (p, p) or self.Psi.shape != (q, q):
            raise ShapeMismatch("diagonal blocks must be square")
        if self.Omega.shape != (q, p) or self.upper.shape != (p, q):
            raise ShapeMismatch(f"off-diagonal blocks must be {(q, p)} and {(p, q)}")

    def __repr__(self):
        return f"BlockMatrix(p={self.p}, q={self.q})"

    @classmethod
    def split(cls, M, p):
        """Splits a square matrix after its first p rows and columns."""
        M = as_matrix(M)
        return cls(M[:p, :p], M[p:, :p], M[p:, p:], M[:p, p:])

    @property
    def p(self):
        return self.Phi.shape[0]

    @property
    def q(self):
        return self.Psi.shape[0]

    def assemble(self):
        return np.block([[self.Phi, self.upper], [self.Omega, self.Psi]])

    def is_symmetric(self):
        return bool(np.array_equal(self.assemble(), self.assemble().T))


def _pivot_inverse(block, name):
    if not is_invertible(block):
        raise PivotSingular(f"pivot block {name} is singular (sigma_min={singular_value_extremes(block)[0]:.3e})")
    return np.linalg.inv(block)


def schur_complement(B, pivot=Pivot.PSI):
    """
    Raises:
        PivotSingular: the pivot block is not invertible
    """
    if pivot == Pivot.PSI:
        Psi_inv = _pivot_inverse(B.Psi, "Psi")
        return B.Phi - B.upper @ Psi_inv @ B.Omega
    Phi_inv = _pivot_inverse(B.Phi, "Phi")
    return B.Psi - B.Omega @ Phi_inv @ B.upper


def inverse_factors(B, pivot=Pivot.PSI):
    """
    The three factors whose product is M⁻¹, in multiplication order.

    Raises:
        PivotSingular, SchurSingular
    """
    p, q = B.p, B.q
    I_p, I_q = np.eye(p), np.eye(q)
    Z_pq, Z_qp = np.zeros((p, q)), np.zeros((q, p))
    S = schur_complement(B, pivot)
    if not is_invertible(S):
        raise SchurSingular(f"Schur complement is singular (sigma_min={singular_value_extremes(S)[0]:.3e})")
    S_inv = np.linalg.inv(S)
    if pivot == Pivot.PSI:
        Psi_inv = np.linalg.inv(B.Psi)
        left = np.block([[I_p, Z_pq], [-Psi_inv @ B.Omega, I_q]])
        middle = np.block([[S_inv, Z_pq], [Z_qp, Psi_inv]])
        right = np.block([[I_p, -B.upper @ Psi_inv], [Z_qp, I_q]])
    else:
        Phi_inv = np.linalg.inv(B.Phi)
        left = np.block([[I_p, -Phi_inv @ B.upper], [Z_qp, I_q]])
        middle = np.block([[Phi_inv, Z_pq], [Z_qp, S_inv]])
        right = np.block([[I_p, Z_pq], [-B.Omega @ Phi_inv, I_q]])
    return left, middle, right


def block_inverse(B, pivot=Pivot.PSI):
    left, middle, right = inverse_factors(B, pivot)
    return left @ middle @ right


def kernel_from_schur(B, zeta):
    """
    Lifts ζ with 𝒮ζ = 0 (pivot Ψ) to the kernel vector (ζ, −Ψ⁻¹Ωζ) of M.

    Args:
        B: BlockMatrix
        zeta: vector of length p (or p×k matrix of such vectors)

    Raises:
        PivotSingular: Ψ is not invertible
        NotInKernel: 𝒮ζ is not zero within tolerance
    """
    zeta = np.asarray(zeta, dtype=float)
    S = schur_complement(B, Pivot.PSI)
    residual = float(np.linalg.norm(S @ zeta))
    if residual > KERNEL_CHECK_TOL * (1.0 + float(np.linalg.norm(zeta))):
        raise NotInKernel(residual)
    lower = -np.linalg.solve(B.Psi, B.Omega @ zeta)
    return np.concatenate([zeta, lower], axis=0)
