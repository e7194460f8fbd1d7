"""
Positivity sets of symmetric rational functions and their LMI shadows.

𝔓_r(n) is the set of n×n tuples X in the limit domain of r with r(X) ≻ 0.
For r(0) ≻ 0 with r and r̃ = r⁻¹ realized by pencils J − L_A and J̃ − L_Ã,
𝔓_r should be the component of zero of the invertibility set of the direct
sum pencil (J ⊕ J̃) − L_{A⊕Ã}; the audits here test that on samples.
"""
import logging

import numpy as np

from ncrat.config import (
    PD_THRESHOLD, BOUNDARY_BISECT_TOL, BOUNDARY_MARGIN_RTOL, BOUNDARY_MAX_RADIUS,
    TWO_SEGMENT_TRIES, DEFAULT_SEED, DEFAULT_SAMPLES, NUM_WORKERS,
)
from ncrat.errors import (
    DomainError, NotOnBoundary, NotPositiveAtOrigin, NumericalFailure, PencilSingular,
    ProbeDiverged, ShapeMismatch,
)
from ncrat.ncalg import MatrixTuple, random_direction
from ncrat.realization import Pencil, Variant
from ncrat.sample_worker import map_outcomes, run_parallel
from ncrat.singular import (
    PathStatus, is_hidden, limit_probe, line_segment_certificate, segment_certificate,
)

logger = logging.getLogger(__name__)

SCAN_STEPS = 64 # ray grid before bisecting for a boundary crossing


def _min_eig(value):
    value = np.asarray(value)
    return float(np.linalg.eigvalsh((value + value.T) / 2)[0])


def lmi_membership(A, X):
    """
    Smallest eigenvalue of I − L_A(X); X is in the LMI domain iff it is positive.

    Args:
        A: g-tuple of symmetric m×m matrices
        X: MatrixTuple
    """
    A = [np.asarray(a, dtype=float) for a in A]
    m = A[0].shape[0]
    if m == 0:
        return np.inf
    pencil = Pencil(np.eye(m), A)
    return _min_eig(pencil.evaluate(X))


class PositivityVerdict:
    def __init__(self, in_invertibility_set, min_eig, in_positivity_set, hidden_singularity_used):
        self.in_invertibility_set = in_invertibility_set
        self.min_eig = min_eig
        self.in_positivity_set = in_positivity_set
        self.hidden_singularity_used = hidden_singularity_used  # value came from a converged probe

    def __repr__(self):
        return (f"PositivityVerdict(member={self.in_positivity_set}, min_eig={self.min_eig:.6g}, "
                f"hidden={self.hidden_singularity_used})")

    def to_dict(self):
        return {
            "in_invertibility_set": self.in_invertibility_set,
            "min_eig": self.min_eig,
            "in_positivity_set": self.in_positivity_set,
            "hidden_singularity_used": self.hidden_singularity_used,
        }


def require_symmetric(R):
    """
    Raises:
        ShapeMismatch: R is not a Symmetric realization
    """
    if not R.is_symmetric:
        raise ShapeMismatch(f"positivity needs a {Variant.to_string(Variant.SYMMETRIC)} realization, "
                            f"got {Variant.to_string(R.variant)}; symmetrize it first")


def check_positive_at_origin(R):
    """
    Raises:
        ShapeMismatch: r is not square
        NotPositiveAtOrigin: r(0) is not positive definite
    """
    if R.shape[0] != R.shape[1]:
        raise ShapeMismatch(f"positivity needs a square function, got {R.shape}")
    min_eig = _min_eig(R.value_at_zero())
    if min_eig <= PD_THRESHOLD:
        raise NotPositiveAtOrigin(min_eig)
    return min_eig


def positivity_report(R, X, check_origin=True, seed=DEFAULT_SEED):
    """
    Membership of X in 𝔓_r.

    If the pencil is invertible at X the verdict uses r(X); otherwise X is
    probed and a convergent probe supplies the limit value.

    Raises:
        ShapeMismatch: R is a General realization
        NotPositiveAtOrigin: check_origin and r(0) is not positive definite
        ProbeDiverged: X is a singular point at which r has no limit
    """
    require_symmetric(R)
    if check_origin:
        check_positive_at_origin(R)
    try:
        min_eig = _min_eig(R.evaluate(X))
        return PositivityVerdict(True, min_eig, min_eig > PD_THRESHOLD, False)
    except PencilSingular:
        pass
    reports = limit_probe(R, X, seed=seed, num_workers=1)
    if not is_hidden(reports):
        raise ProbeDiverged("no common limit at the singular point")
    usable = [r for r in reports if r.norms]
    min_eig = _min_eig(usable[0].limit_value)
    return PositivityVerdict(False, min_eig, min_eig > PD_THRESHOLD, True)


def is_member(R, X, seed=DEFAULT_SEED):
    """Positivity without the origin check; divergence and domain errors count as outside, a General R raises."""
    try:
        return positivity_report(R, X, check_origin=False, seed=seed).in_positivity_set
    except (DomainError, NumericalFailure):
        return False


class PositivitySampler:
    """
    Random symmetric tuples tE with E normalized to λmax(Σ E_j²) = 1 and t
    uniform in (0, max_radius); sizes are used round-robin.
    """

    def __init__(self, R, sizes=(1, 2, 3), count=DEFAULT_SAMPLES, seed=DEFAULT_SEED,
                 max_radius=BOUNDARY_MAX_RADIUS):
        self.R = R
        self.sizes = tuple(sizes)
        self.count = count
        self.seed = seed
        self.max_radius = max_radius

    def __repr__(self):
        return f"PositivitySampler(sizes={self.sizes}, count={self.count}, seed={self.seed})"

    def samples(self):
        rng = np.random.default_rng(self.seed)
        out = []
        for i in range(self.count):
            n = self.sizes[i % len(self.sizes)]
            E = random_direction(rng, self.R.g, n)
            out.append(E.scaled(self.max_radius * rng.uniform(0.0, 1.0)))
        return out

    def directions(self):
        rng = np.random.default_rng([self.seed, 1])
        return [random_direction(rng, self.R.g, self.sizes[i % len(self.sizes)]) for i in range(self.count)]

    def members(self, num_workers=NUM_WORKERS):
        samples = self.samples()
        flags = run_parallel(lambda X: is_member(self.R, X, self.seed), samples, num_workers)
        return [X for X, flag in zip(samples, flags) if flag]


# ---- audits ----

class Bounded:
    def __init__(self, evidence, largest=0.0):
        self.evidence = evidence        # number of members inspected
        self.largest = largest          # largest λmax(Σ X_j²) seen
        self.quality = "ok" if evidence else "inconclusive"

    def __repr__(self):
        return f"Bounded(evidence={self.evidence}, quality={self.quality})"

    def to_dict(self):
        return {"verdict": "Bounded", "evidence": self.evidence, "largest": self.largest,
                "quality": self.quality}


class Violated:
    def __init__(self, witness, radius):
        self.witness = witness
        self.radius = radius

    def __repr__(self):
        return f"Violated(radius={self.radius:.6g})"

    def to_dict(self):
        return {"verdict": "Violated", "witness": self.witness.to_dict(), "radius": self.radius}


def boundedness_audit(sampler, R_bound, num_workers=NUM_WORKERS):
    """
    Checks Σ X_j² ⪯ R_bound·I on sampled members of 𝔓_r.

    Returns:
        Violated for the first member (in sample order) exceeding the bound,
        otherwise Bounded with the number of members seen
    """
    members = sampler.members(num_workers)
    largest = 0.0
    for X in members:
        radius = X.radius()
        if radius > R_bound:
            logger.info("boundedness violated: lambda_max(sum X^2) = %.4g > %.4g", radius, R_bound)
            return Violated(X, radius)
        largest = max(largest, radius)
    return Bounded(len(members), largest)


class DirectSumPencil:
    def __init__(self, P, R, Rtilde):
        self.P = P
        self.R = R
        self.Rtilde = Rtilde

    def __repr__(self):
        return f"DirectSumPencil(d={self.R.d}+{self.Rtilde.d})"

    def evaluate(self, X):
        return self.P.evaluate(X)

    def margin(self, X):
        return self.P.margin(X)


def direct_sum_pencil(R, Rtilde):
    """(J ⊕ J̃) − L_{A⊕Ã}."""
    if R.g != Rtilde.g:
        raise ShapeMismatch(f"realizations have {R.g} and {Rtilde.g} variables")
    return DirectSumPencil(R.pencil().direct_sum(Rtilde.pencil()), R, Rtilde)


def locate_boundary(R, direction, max_radius=BOUNDARY_MAX_RADIUS, seed=DEFAULT_SEED):
    """
    First exit of the ray t ↦ tE from 𝔓_r, bisected to BOUNDARY_BISECT_TOL.

    Returns:
        the boundary point, or None if the ray stays inside up to max_radius
    """
    inside = 0.0
    outside = None
    for t in np.linspace(0.0, max_radius, SCAN_STEPS + 1)[1:]:
        if is_member(R, direction.scaled(t), seed):
            inside = t
        else:
            outside = t
            break
    if outside is None:
        return None
    while outside - inside > BOUNDARY_BISECT_TOL:
        middle = (inside + outside) / 2
        if is_member(R, direction.scaled(middle), seed):
            inside = middle
        else:
            outside = middle
    return direction.scaled((inside + outside) / 2)


class BoundaryCheck:
    def __init__(self, point, min_eig, r_margin, rtilde_margin):
        self.point = point
        self.min_eig = min_eig              # None when r had no value at the point
        self.r_margin = r_margin
        self.rtilde_margin = rtilde_margin
        self.r_singular = r_margin <= BOUNDARY_MARGIN_RTOL
        self.rtilde_singular = rtilde_margin <= BOUNDARY_MARGIN_RTOL

    def __repr__(self):
        return f"BoundaryCheck(r_singular={self.r_singular}, rtilde_singular={self.rtilde_singular})"

    @property
    def passed(self):
        return self.r_singular or self.rtilde_singular

    def to_dict(self):
        return {"min_eig": self.min_eig, "r_margin": self.r_margin, "rtilde_margin": self.rtilde_margin,
                "r_singular": self.r_singular, "rtilde_singular": self.rtilde_singular, "passed": self.passed}


def _relative_margin(P, X):
    if P.dimension == 0:
        return np.inf
    M = P.evaluate(X)
    s = np.linalg.svd(M, compute_uv=False)
    return float(s[-1]) / max(float(s[0]), float(np.linalg.norm(P.J0, 2)))


def boundary_audit(R, Rtilde, boundary_points, num_workers=NUM_WORKERS):
    """
    At every boundary point of 𝔓_r, r's pencil or r̃'s pencil must be
    (numerically) singular. Margins are relative and compared with
    BOUNDARY_MARGIN_RTOL, the accuracy bisection leaves the points at.

    Returns:
        list of BoundaryCheck, one per point

    Raises:
        NotOnBoundary: a point where r(X) is defined and clearly definite or indefinite
    """
    require_symmetric(R)
    P, Ptilde = R.pencil(), Rtilde.pencil()

    def check(X):
        min_eig = None
        try:
            value = R.evaluate(X)
            min_eig = _min_eig(value)
            if abs(min_eig) > BOUNDARY_MARGIN_RTOL * (1.0 + float(np.linalg.norm(value, 2))):
                raise NotOnBoundary(min_eig)
        except PencilSingular:
            pass
        return BoundaryCheck(X, min_eig, _relative_margin(P, X), _relative_margin(Ptilde, X))

    checks = run_parallel(check, boundary_points, num_workers)
    failures = [c for c in checks if not c.passed]
    if failures:
        logger.warning("boundary audit: %d of %d points have both pencils invertible", len(failures), len(checks))
    return checks


# ---- component of zero ----

class Agree:
    def __init__(self, count, inconclusive=0):
        self.count = count
        self.inconclusive = inconclusive

    def __repr__(self):
        return f"Agree(count={self.count}, inconclusive={self.inconclusive})"

    def to_dict(self):
        return {"verdict": "Agree", "count": self.count, "inconclusive": self.inconclusive}


class Disagree:
    def __init__(self, witness, in_positivity_set, in_component):
        self.witness = witness
        self.in_positivity_set = in_positivity_set
        self.in_component = in_component

    def __repr__(self):
        return f"Disagree(member={self.in_positivity_set}, component={self.in_component})"

    def to_dict(self):
        return {"verdict": "Disagree", "witness": self.witness.to_dict(),
                "in_positivity_set": self.in_positivity_set, "in_component": self.in_component}


def component_of_zero(P, X, seed=DEFAULT_SEED):
    """
    True/False/None (unknown) membership of X in the component of zero of the
    invertibility set of P. A straight path decides first; when it is
    blocked, paths 0 → Y → X through random midpoints Y are tried.
    """
    certificate = line_segment_certificate(P, X)
    if certificate.status == PathStatus.IN_COMPONENT:
        return True
    undecided = certificate.status == PathStatus.INCONCLUSIVE
    rng = np.random.default_rng(seed)
    zero = MatrixTuple.zeros(X.g, X.n)
    for _ in range(TWO_SEGMENT_TRIES):
        offset = random_direction(rng, X.g, X.n).scaled(rng.uniform(0.0, 1.0) * np.sqrt(X.radius()))
        middle = X.scaled(0.5) + offset
        first = segment_certificate(P, zero, middle)
        if first.status != PathStatus.IN_COMPONENT:
            undecided = undecided or first.status == PathStatus.INCONCLUSIVE
            continue
        second = segment_certificate(P, middle, X)
        if second.status == PathStatus.IN_COMPONENT:
            return True
        undecided = undecided or second.status == PathStatus.INCONCLUSIVE
    return None if undecided else False


def pr_equals_component_check(R, Rtilde, sampler, num_workers=NUM_WORKERS):
    """
    Compares membership in 𝔓_r with membership in the component of zero of
    the direct sum pencil, sample by sample.

    Returns:
        Disagree for the first disagreeing sample in sample order, otherwise
        Agree with the number of decided samples and the number left undecided
    """
    require_symmetric(R)
    P = direct_sum_pencil(R, Rtilde).P
    samples = sampler.samples()

    def compare(item):
        index, X = item
        return is_member(R, X, sampler.seed), component_of_zero(P, X, seed=[sampler.seed, index])

    outcomes = run_parallel(compare, list(enumerate(samples)), num_workers)
    agreed, inconclusive = 0, 0
    for X, (member, component) in zip(samples, outcomes):
        if component is None:
            inconclusive += 1
        elif member != component:
            logger.info("positivity set and pencil component disagree at an n=%d sample", X.n)
            return Disagree(X, member, component)
        else:
            agreed += 1
    return Agree(agreed, inconclusive)


class NoCounterexample:
    def __init__(self, tested):
        self.tested = tested

    def __repr__(self):
        return f"NoCounterexample(tested={self.tested})"

    def to_dict(self):
        return {"verdict": "NoCounterexample", "tested": self.tested}


class NonConvex:
    def __init__(self, X, Y):
        self.X = X
        self.Y = Y

    def __repr__(self):
        return f"NonConvex(n={self.X.n})"

    def to_dict(self):
        return {"verdict": "NonConvex", "X": self.X.to_dict(), "Y": self.Y.to_dict()}


def convexity_falsifier(R, sampler, pairs, num_workers=NUM_WORKERS):
    """
    Draws pairs of sampled members of equal size and tests their midpoint.
    Fewer than two members of a size make that size vacuous.
    """
    members = sampler.members(num_workers)
    by_size = {}
    for X in members:
        by_size.setdefault(X.n, []).append(X)
    pools = [pool for _, pool in sorted(by_size.items()) if len(pool) >= 2]
    if not pools:
        return NoCounterexample(0)
    rng = np.random.default_rng([sampler.seed, 2])
    chosen = []
    for i in range(pairs):
        pool = pools[i % len(pools)]
        a, b = rng.choice(len(pool), size=2, replace=False)
        chosen.append((pool[a], pool[b]))
    flags = map_outcomes(lambda pair: is_member(R, (pair[0] + pair[1]).scaled(0.5), sampler.seed),
                         chosen, num_workers, expected=(DomainError, NumericalFailure))
    for (X, Y), flag in zip(chosen, flags):
        if flag is not True:
            return NonConvex(X, Y)
    return NoCounterexample(len(chosen))


def scaling_check(R, X, steps=10):
    """
    tX for t on a uniform [0, 1] grid must stay in 𝔓_r when X does.

    Returns:
        list of t values where tX is not a member (empty means the check passed)
    """
    return [float(t) for t in np.linspace(0.0, 1.0, steps + 1) if not is_member(R, X.scaled(t))]
