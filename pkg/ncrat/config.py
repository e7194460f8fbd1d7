# global variables
INVERTIBILITY_RTOL = 1e-12 # smallest/largest singular value below this is singular
SINGULARITY_RTOL = 1e-8 # pencil margin relative to ||pencil|| that declares a singularity
RANK_RTOL = 1e-10 # orbit rank decisions, relative to ||orbit matrix||
KERNEL_CHECK_TOL = 1e-10 # S zeta = 0 acceptance in kernel_from_schur
PD_THRESHOLD = 1e-10 # min eigenvalue above this is positive definite

# limit probes
SCHEDULE_EXPONENTS = range(3, 21) # t_k = 2^-k
CAUCHY_TOL = 1e-7 # last three probe values pairwise within CAUCHY_TOL * (1 + ||value||)
RANDOM_DIRECTIONS = 2 # random directions added to the default probe set

# order / residue fits
DET_COEF_CUTOFF = 1e-9 # relative cutoff on interpolated det F coefficients
DET_SAMPLE_RADIUS = 0.5 # interpolation nodes for det F live in [-radius, radius]
RESIDUE_EXPONENTS = range(3, 12) # t = 2^-k for residue fits in u = t² (keeps u above roundoff)
FIT_POINTS = 6 # last grid points used by least-squares fits
FIT_TOL = 1e-6 # relative fit residual above this is unstable

# path certificates and boundaries
SEGMENT_SAMPLES = 64 # initial grid on [0, 1]
SEGMENT_TOL = 1e-8 # margin at or below this (relative) blocks a path
BOUNDARY_BISECT_TOL = 1e-6
BOUNDARY_MARGIN_RTOL = 1e-4 # |min eig of r| within this of 0 counts as boundary
BOUNDARY_MAX_RADIUS = 8.0 # farthest ray parameter scanned when locating boundaries
TWO_SEGMENT_TRIES = 4 # random midpoints tried before a path verdict is Inconclusive

# fock / refutation search
FOCK_DIMENSION_CAP = 10**5
FOCK_NU_CAP = 2 # nu_1, nu_2 <= cap in well_hidden_refute
RHO_GRID = (0.0, 0.05, 0.1, 0.2) # padding scales tried per Fock branch
OBSTRUCTION_TOL = 1e-7

# sampling
DEFAULT_EPSILON = 0.1
DEFAULT_SIZES = (1, 2, 3, 4)
DEFAULT_SAMPLES = 100
DEFAULT_SERIES_DEGREE = 4
DEFAULT_SEED = 0
DEFAULT_TOL = 1e-8
NUM_WORKERS = 4 # sample workers per parallel batch
