"""
Singularities of descriptor realizations.

At a point χ where the pencil J − L_A(χ) is singular we
    * probe lim r(χ + tE) along a geometric t-schedule (limit_probe),
    * split the pencil along its kernel 𝒦 (kernel_split),
    * find the order p and residue 𝐌 = lim t^p F(t)⁻¹ of the kernel Schur
      complement F(t) = α − t²βᵀR(t)⁻¹β along the line χ(1 + t²),
    * build the padded points [[χ(1+t²), st^qHᵀ], [st^qH, ρK]] and check the
      closed form of their limits (padded_limit_check, core_obstruction),
    * search Fock-generated paddings for evidence that χ is not well hidden.
"""
import logging

import numpy as np
from scipy.optimize import minimize_scalar

from ncrat.blockschur import BlockMatrix, Pivot, block_inverse
from ncrat.config import (
    SINGULARITY_RTOL, SCHEDULE_EXPONENTS, CAUCHY_TOL, RANDOM_DIRECTIONS,
    DET_COEF_CUTOFF, DET_SAMPLE_RADIUS, FIT_POINTS, FIT_TOL, SEGMENT_SAMPLES,
    SEGMENT_TOL, FOCK_NU_CAP, RHO_GRID, OBSTRUCTION_TOL, DEFAULT_SEED, NUM_WORKERS,
    RESIDUE_EXPONENTS,
)
from ncrat.errors import (
    AllDirectionsBlocked, DegenerateDeterminant, DomainError, FitUnstable,
    NotASingularity, NotMinimal, NotSingular, PencilSingular, ScheduleBlocked,
    YSingular,
)
from ncrat.fock import build_fock, direct_sum, as_matrix_tuple, separating_map
from ncrat.ncalg import MatrixTuple, Word, all_words, is_invertible, random_direction
from ncrat.sample_worker import run_parallel

logger = logging.getLogger(__name__)

INCONCLUSIVE_FACTOR = 100.0 # margins within this factor of SEGMENT_TOL are Inconclusive
LOCAL_MIN_RATIO = 1e-2 # grid local minima below this get refined


def _pencil_of(source):
    return source.pencil() if hasattr(source, "pencil") else source


def _scale(P, M, X):
    """Singular values of M = P(X) and the reference size ||J0|| + ||L_A(X)|| for relative margins."""
    s = np.linalg.svd(M, compute_uv=False) if M.size else np.zeros(1)
    return s, max(P.scale(X), float(s[0]), np.finfo(float).tiny)


def invertibility_margin(P, X):
    """Smallest singular value of J0 ⊗ I − L_A(X); accepts a Pencil or a realization."""
    return _pencil_of(P).margin(X)


def is_singular(P, X):
    P = _pencil_of(P)
    M = P.evaluate(X)
    if M.size == 0:
        return False
    s, scale = _scale(P, M, X)
    return float(s[-1]) <= SINGULARITY_RTOL * scale


def _require_singular(P, X, error=NotSingular):
    M = P.evaluate(X)
    if M.size == 0:
        raise error(np.inf)
    s, scale = _scale(P, M, X)
    if float(s[-1]) > SINGULARITY_RTOL * scale:
        raise error(float(s[-1]))
    return M, scale


# ---- path certificates ----

class PathStatus:
    """
    - IN_COMPONENT: the straight path stays inside the invertibility set
    - BLOCKED: the path meets a singular point at t_star
    - INCONCLUSIVE: the margin dips too close to the threshold to decide
    """
    IN_COMPONENT, BLOCKED, INCONCLUSIVE = "InComponentOfZero", "PathBlocked", "Inconclusive"


class PathCertificate:
    def __init__(self, status, t_star=None, min_margin=None):
        self.status = status
        self.t_star = t_star
        self.min_margin = min_margin    # smallest relative margin seen

    def __repr__(self):
        if self.status == PathStatus.BLOCKED:
            return f"PathCertificate({self.status}, t*={self.t_star:.6g})"
        return f"PathCertificate({self.status}, min_margin={self.min_margin:.3e})"

    def to_dict(self):
        return {"status": self.status, "t_star": self.t_star, "min_margin": self.min_margin}


def _crossing_parameters(M0, L):
    """t > 0 with M0 − tL singular: reciprocals of the real positive eigenvalues of M0⁻¹L, ascending."""
    out = []
    for lam in np.linalg.eigvals(np.linalg.solve(M0, L)):
        if abs(lam.imag) <= 1e-9 * max(1.0, abs(lam)) and lam.real > 1e-14:
            out.append(1.0 / lam.real)
    return sorted(out)


def segment_certificate(P, start, end, samples=SEGMENT_SAMPLES):
    """
    Certifies that the segment start → end avoids the singular set of P.

    Along the segment the pencil is P(start) − tL_A(end − start), so every
    crossing is t = 1/λ for a real eigenvalue λ ≥ 1 of P(start)⁻¹L_A(end − start).
    The relative margin is still sampled on a grid, with local minima refined
    by a bounded scalar minimization, to report min_margin and to flag
    near-misses from complex eigenvalue pairs close to the real axis.
    """
    P = _pencil_of(P)
    if P.dimension == 0:
        return PathCertificate(PathStatus.IN_COMPONENT, min_margin=np.inf)
    diff = end - start

    def ratio(t):
        X = start + diff.scaled(t)
        s, scale = _scale(P, P.evaluate(X), X)
        return float(s[-1]) / scale

    start_ratio = ratio(0.0)
    if start_ratio <= SEGMENT_TOL:
        return PathCertificate(PathStatus.BLOCKED, 0.0, start_ratio)
    crossings = [t for t in _crossing_parameters(P.evaluate(start), P.linear_part(diff)) if t <= 1.0 + 1e-12]
    if crossings:
        return PathCertificate(PathStatus.BLOCKED, min(crossings[0], 1.0), 0.0)

    ts = np.linspace(0.0, 1.0, samples + 1)
    ratios = [ratio(t) for t in ts]
    for t, value in zip(ts, ratios):
        if value <= SEGMENT_TOL:
            return PathCertificate(PathStatus.BLOCKED, float(t), value)
    best = min(ratios)
    for i in range(1, samples):
        if ratios[i] <= ratios[i - 1] and ratios[i] <= ratios[i + 1] and ratios[i] < LOCAL_MIN_RATIO:
            res = minimize_scalar(ratio, bounds=(ts[i - 1], ts[i + 1]), method="bounded",
                                  options={"xatol": 1e-12})
            if res.fun <= SEGMENT_TOL:
                return PathCertificate(PathStatus.BLOCKED, float(res.x), float(res.fun))
            best = min(best, float(res.fun))
    if best <= INCONCLUSIVE_FACTOR * SEGMENT_TOL:
        return PathCertificate(PathStatus.INCONCLUSIVE, min_margin=best)
    return PathCertificate(PathStatus.IN_COMPONENT, min_margin=best)


def line_segment_certificate(P, X, samples=SEGMENT_SAMPLES):
    """Straight path 0 → X; a sufficient certificate for the component of zero."""
    return segment_certificate(P, MatrixTuple.zeros(X.g, X.n), X, samples)


def ray_singularities(P, E):
    """
    All t > 0 with J0 ⊗ I − tL_A(E) singular: reciprocals of the real
    positive eigenvalues of (J0 ⊗ I)⁻¹ L_A(E), ascending.
    """
    P = _pencil_of(P)
    if P.dimension == 0:
        return []
    return _crossing_parameters(np.kron(P.J0, np.eye(E.n)), P.linear_part(E))


def ray_singular_points(P, E):
    """Singular points tE (t > 0) on the ray through E."""
    return [E.scaled(t) for t in ray_singularities(P, E)]


# ---- limit probes ----

class LimitReport:
    def __init__(self, direction_tag, schedule, converged, limit_value, growth_exponent_estimate,
                 skipped=(), norms=()):
        self.direction_tag = direction_tag
        self.schedule = list(schedule)                  # t values tried
        self.converged = converged
        self.limit_value = limit_value                  # last value when converged
        self.growth_exponent_estimate = growth_exponent_estimate
        self.skipped = list(skipped)                    # t values where the pencil was singular
        self.norms = list(norms)                        # ||r(chi + tE)|| at the used t values

    def __repr__(self):
        return (f"LimitReport({self.direction_tag}, converged={self.converged}, "
                f"growth={self.growth_exponent_estimate:.3f})")

    def to_dict(self):
        return {
            "direction": self.direction_tag,
            "converged": self.converged,
            "limit_value": None if self.limit_value is None else np.asarray(self.limit_value).tolist(),
            "growth_exponent_estimate": self.growth_exponent_estimate,
            "schedule": self.schedule,
            "skipped": self.skipped,
        }


def default_schedule():
    return [2.0 ** -k for k in SCHEDULE_EXPONENTS]


def default_directions(chi, seed=DEFAULT_SEED, count=RANDOM_DIRECTIONS):
    """[("chi", χ)] followed by seeded random symmetric directions."""
    rng = np.random.default_rng(seed)
    directions = []
    if not chi.is_zero():
        directions.append(("chi", chi))
    for i in range(count):
        directions.append((f"random-{i}", random_direction(rng, chi.g, chi.n)))
    return directions


def _is_cauchy(values):
    if len(values) < 3:
        return False
    last = values[-3:]
    for a in last:
        for b in last:
            if np.linalg.norm(a - b) > CAUCHY_TOL * (1.0 + np.linalg.norm(b)):
                return False
    return True


def _growth_exponent(ts, norms):
    if len(ts) < 2:
        return 0.0
    ts, norms = ts[-FIT_POINTS:], norms[-FIT_POINTS:]
    slope = np.polyfit(np.log(ts), np.log(np.maximum(norms, 1e-300)), 1)[0]
    return float(slope)


def probe_direction(R, chi, tag, E, schedule):
    values, used, skipped = [], [], []
    for t in schedule:
        try:
            values.append(R.evaluate(chi + E.scaled(t)))
            used.append(t)
        except PencilSingular:
            skipped.append(t)
    norms = [float(np.linalg.norm(v)) for v in values]
    converged = _is_cauchy(values)
    report = LimitReport(tag, schedule, converged, values[-1] if converged else None,
                         _growth_exponent(used, norms), skipped, norms)
    logger.debug("probe %s: %r", tag, report)
    return report


def limit_probe(R, chi, directions=None, schedule=None, seed=DEFAULT_SEED, num_workers=NUM_WORKERS):
    """
    Evaluates r(χ + tE) for t on a geometric schedule, per direction.

    Args:
        R: realization
        chi: candidate singular point (pencil margin at or below threshold)
        directions: list of MatrixTuple or (tag, MatrixTuple); default χ plus random
        schedule: t values, default 2^-k for k = 3..20

    Returns:
        list of LimitReport, one per direction

    Raises:
        NotASingularity: the pencil is invertible at χ
        AllDirectionsBlocked: no direction produced a single value
    """
    _require_singular(R.pencil(), chi, NotASingularity)
    if schedule is None:
        schedule = default_schedule()
    if directions is None:
        directions = default_directions(chi, seed)
    directions = [d if isinstance(d, tuple) else (f"direction-{i}", d) for i, d in enumerate(directions)]
    reports = run_parallel(lambda d: probe_direction(R, chi, d[0], d[1], schedule), directions, num_workers)
    if all(not r.norms for r in reports):
        raise AllDirectionsBlocked(f"all {len(reports)} directions met singular pencils on the schedule")
    return reports


def is_hidden(reports):
    """Every usable direction converged, to a common limit."""
    usable = [r for r in reports if r.norms]
    if not usable or not all(r.converged for r in usable):
        return False
    first = usable[0].limit_value
    return all(np.linalg.norm(r.limit_value - first) <= CAUCHY_TOL * (1.0 + np.linalg.norm(first)) for r in usable)


# ---- kernel split and residue ----

def _canonical_signs(V):
    for j in range(V.shape[1]):
        i = int(np.argmax(np.abs(V[:, j])))
        if V[i, j] < 0:
            V[:, j] = -V[:, j]
    return V


def _pencil_is_symmetric(P):
    return np.allclose(P.J0, P.J0.T, rtol=0, atol=1e-12) and all(
        np.allclose(a, a.T, rtol=0, atol=1e-12) for a in P.A)


class KernelSplit:
    """
    Blocks of the pencil at χ in the decomposition 𝒦 ⊕ 𝒦⊥:
    J − L_A(χ) = [[0, 0], [0, R]] and −L_A(χ) = [[α, β_top], [β, R1]].
    For symmetric pencils left and right bases coincide and β_top = βᵀ.
    """

    def __init__(self, V, U, V_left, U_left, alpha, beta, beta_top, Rblock, R1,
                 reconstruction_error, symmetric):
        self.V = V
        self.U = U
        self.V_left = V_left
        self.U_left = U_left
        self.alpha = alpha
        self.beta = beta
        self.beta_top = beta_top
        self.Rblock = Rblock
        self.R1 = R1
        self.reconstruction_error = reconstruction_error
        self.symmetric = symmetric

    def __repr__(self):
        return f"KernelSplit(k={self.k}, complement={self.m}, symmetric={self.symmetric})"

    @property
    def k(self):
        return self.V.shape[1]

    @property
    def m(self):
        return self.U.shape[1]

    def F(self, u):
        """F(u) = α − u β_top (R + uR1)⁻¹ β, with u = t²."""
        if self.m == 0:
            return np.array(self.alpha)
        return self.alpha - u * self.beta_top @ np.linalg.solve(self.Rblock + u * self.R1, self.beta)


def kernel_split(R, chi):
    """
    Raises:
        NotSingular: the pencil is invertible at χ
    """
    P = R.pencil()
    M, scale = _require_singular(P, chi, NotSingular)
    L = P.linear_part(chi)
    threshold = SINGULARITY_RTOL * scale
    symmetric = _pencil_is_symmetric(P) and chi.symmetric
    if symmetric:
        lam, Q = np.linalg.eigh((M + M.T) / 2)
        kernel = np.abs(lam) <= threshold
        V = _canonical_signs(Q[:, kernel].copy())
        U = Q[:, ~kernel]
        V_left, U_left = V, U
    else:
        Ul, s, Vt = np.linalg.svd(M)
        kernel = s <= threshold
        V = _canonical_signs(Vt.T[:, kernel].copy())
        U = Vt.T[:, ~kernel]
        V_left = _canonical_signs(Ul[:, kernel].copy())
        U_left = Ul[:, ~kernel]

    alpha = -V_left.T @ L @ V
    # cleanup of roundoff in α (singular values at threshold level)
    if alpha.size:
        ua, sa, va = np.linalg.svd(alpha)
        sa[sa <= threshold] = 0.0
        alpha = (ua * sa) @ va
        alpha[np.abs(alpha) <= threshold] = 0.0
    beta = -U_left.T @ L @ V
    beta_top = -V_left.T @ L @ U
    Rblock = U_left.T @ M @ U
    R1 = -U_left.T @ L @ U
    if symmetric:
        beta_top = beta.T
        Rblock = (Rblock + Rblock.T) / 2
        R1 = (R1 + R1.T) / 2

    left = np.hstack([V_left, U_left])
    right = np.hstack([V, U])
    k = V.shape[1]
    core = np.zeros_like(M)
    core[k:, k:] = Rblock
    error = float(np.max(np.abs(left @ core @ right.T - M), initial=0.0))
    logger.debug("kernel split: k=%d, reconstruction error %.3e", k, error)
    return KernelSplit(V, U, V_left, U_left, alpha, beta, beta_top, Rblock, R1, error, symmetric)


class SingularityResidue:
    def __init__(self, p, M, fit_error, vanishing_order, kernel_dim):
        self.p = p
        self.q = (p + 2) // 2
        self.M = M
        self.fit_error = fit_error
        self.vanishing_order = vanishing_order      # order of det P(χ(1+u)) at u = 0
        self.kernel_dim = kernel_dim

    def __repr__(self):
        return f"SingularityResidue(p={self.p}, q={self.q}, ||M||={np.linalg.norm(self.M):.3e})"

    def to_dict(self):
        return {"p": self.p, "q": self.q, "M": self.M.tolist(), "fit_error": self.fit_error,
                "vanishing_order": self.vanishing_order, "kernel_dim": self.kernel_dim}


def determinant_vanishing_order(P, chi):
    """
    Order of u = 0 as a root of q(u) = det(J ⊗ I − (1+u)L_A(χ)), a polynomial of
    degree <= dN, recovered by interpolation on Chebyshev nodes.

    Raises:
        DegenerateDeterminant: q vanishes identically
    """
    size = P.dimension * chi.n
    nodes = DET_SAMPLE_RADIUS * np.cos(np.pi * (np.arange(size + 1) + 0.5) / (size + 1))
    values = np.array([np.linalg.det(P.evaluate(chi.scaled(1.0 + u))) for u in nodes])
    reference = abs(np.linalg.det(np.kron(P.J0, np.eye(chi.n))))
    peak = float(np.max(np.abs(values)))
    if peak <= 1e-14 * reference:
        raise DegenerateDeterminant("det P(chi(1+u)) vanishes identically")
    coeffs = np.polynomial.polynomial.polyfit(nodes / DET_SAMPLE_RADIUS, values / peak, size)
    cutoff = DET_COEF_CUTOFF * float(np.max(np.abs(coeffs)))
    significant = np.nonzero(np.abs(coeffs) > cutoff)[0]
    if significant.size == 0:
        raise DegenerateDeterminant("all interpolated coefficients below cutoff")
    return int(significant[0])


def _intercept_fit(us, values, degree=2):
    """
    Least-squares polynomial fit of matrix values in u; returns (value at 0, relative residual).
    """
    us = np.asarray(us)
    stacked = np.array([np.asarray(v).ravel() for v in values])
    coef = np.polynomial.polynomial.polyfit(us, stacked, degree)
    fitted = np.polynomial.polynomial.polyval(us, coef).T
    intercept = coef[0].reshape(np.asarray(values[0]).shape)
    residual = float(np.max(np.abs(fitted - stacked))) / (1.0 + float(np.max(np.abs(stacked))))
    return intercept, residual


def residue_schedule():
    return [2.0 ** -k for k in RESIDUE_EXPONENTS]


def order_and_residue(R, chi, split=None):
    """
    p and 𝐌 = lim t^p F(t)⁻¹ at a singular point χ.

    Along u = t², e = p/2 is read from the slope of log||F(u)⁻¹|| against
    log u (bounded by the determinant's vanishing order minus dim 𝒦), and 𝐌 is
    the intercept of a quadratic fit of u^e F(u)⁻¹ on the last FIT_POINTS points.

    Raises:
        NotSingular, DegenerateDeterminant, FitUnstable
    """
    if split is None:
        split = kernel_split(R, chi)
    m = determinant_vanishing_order(R.pencil(), chi)
    us, inverses = [], []
    for t in residue_schedule():
        u = t * t
        F = split.F(u)
        if not is_invertible(F, rtol=1e-15):
            continue
        us.append(u)
        inverses.append(np.linalg.inv(F))
    if len(us) < FIT_POINTS:
        raise FitUnstable("F(t) singular on the residue schedule", np.inf)
    us, inverses = us[-FIT_POINTS:], inverses[-FIT_POINTS:]

    norms = [float(np.linalg.norm(G)) for G in inverses]
    slope = np.polyfit(np.log(us), np.log(np.maximum(norms, 1e-300)), 1)[0]
    e = int(round(-slope))
    e = min(max(e, 0), max(m - split.k, 0))
    scaled = [u ** e * G for u, G in zip(us, inverses)]
    M, residual = _intercept_fit(us, scaled)
    if residual > FIT_TOL:
        raise FitUnstable("residue fit", residual)
    if np.linalg.norm(M) <= 1e-10:
        raise FitUnstable("residue vanished", float(np.linalg.norm(M)))
    logger.info("order/residue at chi: k=%d, vanishing order %d, p=%d", split.k, m, 2 * e)
    return SingularityResidue(2 * e, M, residual, m, split.k)


# ---- perturbation frames ----

def split_permutation(d, N, M):
    """
    Index map taking ℝ^d ⊗ ℝ^(N+M) to (ℝ^d ⊗ ℝ^N) ⊕ (ℝ^d ⊗ ℝ^M):
    new position i holds old index perm[i].
    """
    width = N + M
    first = [a * width + i for a in range(d) for i in range(N)]
    second = [a * width + N + i for a in range(d) for i in range(M)]
    return np.array(first + second, dtype=int)


def assemble_perturbed_point(chi, H, K, s, t, q, rho):
    """X̃(s,t,ρ,H) = [[χ(1+t²), st^qHᵀ], [st^qH, ρK]]."""
    c = s * t ** q
    entries = []
    for x, h, k in zip(chi, H, K):
        entries.append(np.block([[x * (1.0 + t * t), c * h.T], [c * h, rho * k]]))
    return MatrixTuple(entries)


class PerturbationFrame:
    """
    Data of one padding experiment: H (M×N), K (M×M), s, ρ, and the derived
    γ = −(Σ A_j ⊗ H_j)V, W = −(Σ A_j ⊗ H_j)U, Y = J ⊗ I_M − ρL_A(K),
    test vectors h, k ∈ ℝ^M and th, tk ∈ ℝ^ℓ.
    """

    def __init__(self, realization, chi, split, H, K, s, rho, h, k, th, tk):
        self.realization = realization
        self.chi = chi
        self.split = split
        self.H = [np.array(x, dtype=float) for x in H]
        self.K = K
        self.s = s
        self.rho = rho
        self.t = None
        self.h, self.k, self.th, self.tk = h, k, th, tk
        P = realization.pencil()
        coupling = sum(np.kron(a, x) for a, x in zip(P.A, self.H))
        self.gamma = -coupling @ split.V
        self.W = -coupling @ split.U
        self.Y = np.kron(P.J0, np.eye(self.M)) - rho * P.linear_part(K)

    def __repr__(self):
        return f"PerturbationFrame(N={self.N}, M={self.M}, s={self.s}, rho={self.rho})"

    @property
    def N(self):
        return self.chi.n

    @property
    def M(self):
        return self.K.n

    def point(self, t, q):
        return assemble_perturbed_point(self.chi, self.H, self.K, self.s, t, q, self.rho)

    def delta(self, t, q):
        """Δ = Y − s²t^{2q} W R(t)⁻¹ Wᵀ."""
        if self.split.m == 0:
            return np.array(self.Y)
        Rt = self.split.Rblock + t * t * self.split.R1
        return self.Y - self.s ** 2 * t ** (2 * q) * self.W @ np.linalg.solve(Rt, self.W.T)

    def expected_blocks(self, t, q):
        """The pencil at X̃ in (ℝ^d⊗ℝ^N) ⊕ (ℝ^d⊗ℝ^M) order, assembled block by block."""
        P = self.realization.pencil()
        c = self.s * t ** q
        top_left = P.evaluate(self.chi.scaled(1.0 + t * t))
        lower = -c * sum(np.kron(a, x) for a, x in zip(P.A, self.H))
        upper = -c * sum(np.kron(a, x.T) for a, x in zip(P.A, self.H))
        return np.block([[top_left, upper], [lower, self.Y]])

    def permuted_pencil(self, t, q):
        P = self.realization.pencil()
        full = P.evaluate(self.point(t, q))
        perm = split_permutation(P.dimension, self.N, self.M)
        return full[np.ix_(perm, perm)]


def perturbation_frame(R, chi, K, H=None, s=0.1, rho=0.0, seed=DEFAULT_SEED, split=None):
    """
    Builds a frame with seeded random H, h, k, th, tk where not given.
    The pencil must be symmetric.
    """
    if not _pencil_is_symmetric(R.pencil()):
        raise ValueError("perturbation frames need a symmetric pencil")
    if split is None:
        split = kernel_split(R, chi)
    rng = np.random.default_rng(seed)
    M, N = K.n, chi.n
    if H is None:
        H = [rng.standard_normal((M, N)) for _ in range(chi.g)]
    h = rng.standard_normal(M)
    k = rng.standard_normal(M)
    th = rng.standard_normal(R.shape[1])
    tk = rng.standard_normal(R.shape[0])
    return PerturbationFrame(R, chi, split, H, K, s, rho, h, k, th, tk)


def padded_limit_terms(frame, q, t):
    """
    t²[0 I]Γ⁻¹ζ F_*⁻¹ ζᵀΓ⁻¹[0 I]ᵀ with Γ = [[R(t), st^qWᵀ], [st^qW, Y]],
    ζ = (β; st^{q−2}γ) and F_* = α − t²ζᵀΓ⁻¹ζ. Γ⁻¹ uses the R(t) pivot.
    """
    split = frame.split
    s, m, dM = frame.s, split.m, frame.Y.shape[0]
    c = s * t ** q
    if m:
        Rt = split.Rblock + t * t * split.R1
        Gamma_inv = block_inverse(BlockMatrix(Rt, c * frame.W, frame.Y, c * frame.W.T), Pivot.PHI)
        zeta = np.vstack([split.beta, s * t ** (q - 2) * frame.gamma])
    else:
        Gamma_inv = np.linalg.inv(frame.Y)
        zeta = s * t ** (q - 2) * frame.gamma
    F_star = split.alpha - t * t * zeta.T @ Gamma_inv @ zeta
    left = Gamma_inv[m:, :] @ zeta
    right = zeta.T @ Gamma_inv[:, m:]
    return t * t * left @ np.linalg.solve(F_star, right)


def eta(residue, G0, s):
    """η(s) = (I − s²𝐌G₀)⁻¹𝐌."""
    M = residue.M
    return np.linalg.solve(np.eye(M.shape[0]) - s * s * M @ G0, M)


def eta_limit(residue, G0, s_values=None):
    """Extrapolates η(s) to s → 0 by a quadratic fit in s²; should equal 𝐌."""
    if s_values is None:
        s_values = [2.0 ** -k for k in range(2, 2 + FIT_POINTS)]
    us = [s * s for s in s_values]
    limit, _ = _intercept_fit(us, [eta(residue, G0, s) for s in s_values])
    return limit


def padded_limit_check(R, chi, frame, residue=None):
    """
    Compares the t → 0 limit of padded_limit_terms (fit in u = t²) with the closed
    form s²Y⁻¹γ η(s) γᵀY⁻¹, G₀ = γᵀY⁻¹γ.

    Returns:
        (lhs, rhs, gap) with gap the relative difference (0 when both vanish)

    Raises:
        YSingular: Y = J ⊗ I − ρL_A(K) is singular
        ScheduleBlocked: too few t values with invertible Γ and F_*
    """
    if not is_invertible(frame.Y):
        raise YSingular("Y = J - rho L_A(K) is singular")
    if residue is None:
        residue = order_and_residue(R, chi, frame.split)
    q = residue.q
    Y_inv_gamma = np.linalg.solve(frame.Y, frame.gamma)
    G0 = frame.gamma.T @ Y_inv_gamma
    rhs = frame.s ** 2 * Y_inv_gamma @ eta(residue, G0, frame.s) @ Y_inv_gamma.T

    # the terms are even in t
    us, values = [], []
    for t in residue_schedule():
        try:
            values.append(padded_limit_terms(frame, q, t))
            us.append(t * t)
        except (DomainError, np.linalg.LinAlgError):
            continue
    if len(us) < FIT_POINTS:
        raise ScheduleBlocked(f"only {len(us)} usable t values")
    lhs, _ = _intercept_fit(us[-FIT_POINTS:], values[-FIT_POINTS:])

    scale = max(float(np.linalg.norm(lhs)), float(np.linalg.norm(rhs)))
    gap = 0.0 if scale <= 1e-12 else float(np.linalg.norm(lhs - rhs)) / scale
    return lhs, rhs, gap


def core_obstruction(frame, residue):
    """
    (B t̃k ⊗ k)ᵀ Y⁻¹ γ 𝐌 γᵀ Y⁻¹ (C t̃h ⊗ h); vanishes at well hidden singularities.

    Returns:
        (value, bound) where bound is the size the value is measured against
    """
    R = frame.realization
    left = np.kron(R.B @ frame.tk, frame.k)
    right = np.kron(R.C @ frame.th, frame.h)
    a = np.linalg.solve(frame.Y.T, left) @ frame.gamma
    b = frame.gamma.T @ np.linalg.solve(frame.Y, right)
    value = float(a @ residue.M @ b)
    bound = float(np.linalg.norm(a) * np.linalg.norm(residue.M, 2) * np.linalg.norm(b))
    return value, bound


def fock_separation_identity(R, middle, omega1, omega2, zeta1, zeta2, th, tk):
    """
    With K = K(ν₁) ⊕ K(ν₂), Qᵀ = [Q₁ᵀ Q₂ᵀ] from separating maps for (ω₁, ζ₁)
    and (ω₂, ζ₂), h = ∅ ⊕ 0 and k = 0 ⊕ ∅, returns both sides of

        Σ_j (JC t̃k ⊗ k)ᵀ L_{AJ}(K)^j Q Z Qᵀ L_{JA}(K)^{ν−j} (JC t̃h ⊗ h)
            = [(JA)^{ω₂}JC t̃k ⊗ ζ₂]ᵀ Z [(JA)^{ω₁}JC t̃h ⊗ ζ₁],

    ν = ν₁ + ν₂, for a symmetric realization and any dN×dN matrix Z.
    """
    omega1, omega2 = Word(omega1), Word(omega2)
    nu1, nu2 = len(omega1), len(omega2)
    basis1, T1 = build_fock(R.g, nu1)
    basis2, T2 = build_fock(R.g, nu2)
    Qt = np.hstack([separating_map(basis1, omega1, zeta1).astype(float),
                    separating_map(basis2, omega2, zeta2).astype(float)])
    K = as_matrix_tuple(direct_sum(T1, T2))
    d, M = R.d, K.n
    JA = [R.J @ a for a in R.A]
    L_JA = sum(np.kron(a, k) for a, k in zip(JA, K))
    h = np.zeros(M)
    h[0] = 1.0
    k = np.zeros(M)
    k[basis1.dimension] = 1.0
    right = np.kron(R.J @ R.C @ th, h)
    left = np.kron(R.J @ R.C @ tk, k)
    I_Q = np.kron(np.eye(d), Qt.T)
    nu = nu1 + nu2
    lhs = 0.0
    for j in range(nu + 1):
        a = np.linalg.matrix_power(L_JA, j) @ left
        b = np.linalg.matrix_power(L_JA, nu - j) @ right
        lhs += float(a @ I_Q @ middle @ I_Q.T @ b)

    def orbit(word, vec):
        v = R.J @ R.C @ vec
        for letter in reversed(word):
            v = JA[letter - 1] @ v
        return v

    rhs = float(np.kron(orbit(omega2, tk), zeta2) @ middle @ np.kron(orbit(omega1, th), zeta1))
    return lhs, rhs


# ---- refutation search ----

class Certificate:
    """
    Evidence that χ is not a well hidden singularity: either a probe of
    χ ⊕ ρK that diverges (kind PROBE), or a nonzero core obstruction (kind OBSTRUCTION).
    """
    PROBE, OBSTRUCTION = "probe-diverged", "core-obstruction"

    def __init__(self, kind, K, rho, report=None, obstruction=None, nu=None, words=None):
        self.kind = kind
        self.K = K                      # None for the empty padding
        self.rho = rho
        self.report = report
        self.obstruction = obstruction
        self.nu = nu
        self.words = words

    def __repr__(self):
        return f"Certificate({self.kind}, rho={self.rho}, nu={self.nu})"

    def to_dict(self):
        return {
            "kind": self.kind,
            "K": None if self.K is None else self.K.to_dict(),
            "rho": self.rho,
            "report": None if self.report is None else self.report.to_dict(),
            "obstruction": self.obstruction,
            "nu": None if self.nu is None else list(self.nu),
            "words": None if self.words is None else [str(w) for w in self.words],
        }


class RefutationReport:
    def __init__(self, certificate, branches_tried):
        self.certificate = certificate      # None means NoCertificateFound
        self.branches_tried = branches_tried

    def __repr__(self):
        found = "NoCertificateFound" if self.certificate is None else repr(self.certificate)
        return f"RefutationReport({found}, branches={self.branches_tried})"

    @property
    def found(self):
        return self.certificate is not None

    def to_dict(self):
        return {"certificate": None if self.certificate is None else self.certificate.to_dict(),
                "branches_tried": self.branches_tried}


def separating_frame(R, chi, split, nu1, nu2, omega1, omega2, rho, s, rng):
    """Frame with K = K(ν₁) ⊕ K(ν₂), H = Qχ, h = ∅ ⊕ 0, k = 0 ⊕ ∅."""
    basis1, T1 = build_fock(R.g, nu1)
    basis2, T2 = build_fock(R.g, nu2)
    N = chi.n
    zeta1 = rng.standard_normal(N)
    zeta2 = rng.standard_normal(N)
    Qt = np.hstack([separating_map(basis1, omega1, zeta1).astype(float),
                    separating_map(basis2, omega2, zeta2).astype(float)])
    K = as_matrix_tuple(direct_sum(T1, T2))
    H = [Qt.T @ x for x in chi]
    frame = PerturbationFrame(R, chi, split, H, K, s, rho,
                              np.eye(K.n)[0], np.eye(K.n)[basis1.dimension],
                              rng.standard_normal(R.shape[1]), rng.standard_normal(R.shape[0]))
    return frame


def _refutation_branches(g, nu_cap, rho_grid):
    branches = []
    pairs = sorted(((a, b) for a in range(nu_cap + 1) for b in range(nu_cap + 1)), key=lambda p: (sum(p), p))
    for nu1, nu2 in pairs:
        for rho in rho_grid:
            words = [(w1, w2) for w1 in all_words(g, nu1) if len(w1) == nu1
                     for w2 in all_words(g, nu2) if len(w2) == nu2]
            branches.append((nu1, nu2, rho, words))
    return branches


def well_hidden_refute(R, chi, require_minimal=True, nu_cap=FOCK_NU_CAP, rho_grid=RHO_GRID,
                       s=0.1, seed=DEFAULT_SEED, num_workers=NUM_WORKERS):
    """
    Looks for evidence that χ is not a well hidden singularity of r.

    First χ itself is probed; divergence there is a certificate with ρ = 0.
    Otherwise each branch (ν₁, ν₂, ρ) pads χ with ρK, K = K(ν₁) ⊕ K(ν₂), and
    tests (a) whether χ ⊕ ρK still gives convergent probes and (b) whether the
    core obstruction vanishes for the separating choices of H. Branches are
    ordered by (ν₁ + ν₂, ν₁, ν₂, ρ) and the first certificate in that order wins.

    Raises:
        NotMinimal: require_minimal and R fails minimality_check
        NotASingularity: the pencil is invertible at χ
    """
    # Import here to avoid circular import
    from ncrat.realization import minimality_check
    if require_minimal:
        is_min, reach, obs = minimality_check(R)
        if not is_min:
            raise NotMinimal(reach, obs, R.d)
    reports = limit_probe(R, chi, seed=seed, num_workers=num_workers)
    for report in reports:
        if report.norms and not report.converged:
            logger.info("chi is not hidden: probe %s diverges", report.direction_tag)
            return RefutationReport(Certificate(Certificate.PROBE, None, 0.0, report), 0)

    split = kernel_split(R, chi)
    residue = order_and_residue(R, chi, split)
    branches = _refutation_branches(R.g, nu_cap, rho_grid)

    def run_branch(item):
        index, (nu1, nu2, rho, words) = item
        rng = np.random.default_rng([seed, index])
        _, T1 = build_fock(R.g, nu1)
        _, T2 = build_fock(R.g, nu2)
        K = as_matrix_tuple(direct_sum(T1, T2))
        padded = chi.direct_sum(K.scaled(rho))
        if rho != 0.0:
            try:
                for report in limit_probe(R, padded, seed=seed, num_workers=1):
                    if report.norms and not report.converged:
                        return Certificate(Certificate.PROBE, K, rho, report, nu=(nu1, nu2))
            except (NotASingularity, AllDirectionsBlocked):
                pass
        for w1, w2 in words:
            frame = separating_frame(R, chi, split, nu1, nu2, w1, w2, rho, s, rng)
            if not is_invertible(frame.Y):
                continue
            value, bound = core_obstruction(frame, residue)
            if abs(value) > OBSTRUCTION_TOL * max(bound, 1e-300) and bound > 1e-12:
                return Certificate(Certificate.OBSTRUCTION, K, rho, obstruction=value,
                                   nu=(nu1, nu2), words=(w1, w2))
        return None

    results = run_parallel(run_branch, list(enumerate(branches)), num_workers)
    for index, certificate in enumerate(results):
        if certificate is not None:
            logger.info("certificate found in branch %d: %r", index, certificate)
            return RefutationReport(certificate, index + 1)
    logger.info("no certificate after %d branches", len(branches))
    return RefutationReport(None, len(branches))


def singularity_report(R, chi, seed=DEFAULT_SEED, refute=True, require_minimal=False):
    """
    Report dict: chi, margin, kernel_dim, p, M, probes, certificate.
    """
    margin = invertibility_margin(R, chi)
    split = kernel_split(R, chi)
    residue = order_and_residue(R, chi, split)
    probes = limit_probe(R, chi, seed=seed)
    certificate = None
    if refute:
        refutation = well_hidden_refute(R, chi, require_minimal=require_minimal, seed=seed)
        certificate = None if refutation.certificate is None else refutation.certificate.to_dict()
    return {
        "chi": chi.to_dict(),
        "margin": margin,
        "kernel_dim": split.k,
        "p": residue.p,
        "M": residue.M.tolist(),
        "probes": [r.to_dict() for r in probes],
        "certificate": certificate,
    }
