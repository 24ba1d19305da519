"""Finite-difference realization of the 1-D operator -i d/dt - i*lam*S(t).

Two discretizations serve two distinct purposes:

* APS assembly (index extraction).  A midpoint one-sided scheme per grid
  cell keeps the matrix rectangular, with boundary node components
  restricted to the spectral subspaces of the endpoint potentials
  (incoming-negative at the left end, outgoing-positive at the right).
  The domain/codomain dimension difference then equals the expected index
  by bookkeeping; the genuine numerical content is that the SVD-extracted
  kernel and cokernel dimensions individually match closed-form oracles
  and survive grid refinement.  Second-order central schemes are avoided
  here on purpose: they square the matrix and hide the index.

* Dirichlet assembly (quadratic-form bounds).  A square central-difference
  matrix on interior nodes with the potential sampled at nodes.  Its
  spurious grid-oscillation branch sees the derivative with flipped sign
  and therefore reproduces exactly the adjoint problem, so the count of
  small singular values equals dim ker + dim coker of the APS problem,
  and the doubled graded operator built from it obeys the same lower
  bounds as the continuum operator.
"""

import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from .errors import (
    CutoffTooSmall,
    HypothesisUnmet,
    InvalidInput,
    NotDiagonalizable,
    NotInvertible,
)
from .opcore import (
    DEFAULT_TOL,
    HermitianOperator,
    Tolerances,
    eigh,
    null_space,
    spectral_gap,
)
from .specflow import PotentialPath

__all__ = [
    "GridSpec",
    "DiscretizedDiracSchroedinger",
    "DoubledOperator",
    "IndexReport",
    "FredholmBoundReport",
    "assemble",
    "bound_constants",
    "index_report",
    "kernel_vectors",
    "kernel_oracle_diagonal",
    "OracleIndex",
    "doubled",
    "fredholm_bounds",
    "make_cutoff",
    "lambda_sweep",
    "SweepReport",
    "perturbation_invariance",
    "PerturbationReport",
]

DECAY_TARGET = 1e-8


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on the symmetric interval [-L, L] with n_cells cells."""

    length: float
    n_cells: int

    def __post_init__(self):
        if not self.length > 0 or self.n_cells < 4:
            raise InvalidInput("need length > 0 and n_cells >= 4")

    @property
    def h(self) -> float:
        return 2.0 * self.length / self.n_cells

    def nodes(self) -> np.ndarray:
        return np.linspace(-self.length, self.length, self.n_cells + 1)

    def midpoints(self) -> np.ndarray:
        return self.nodes()[:-1] + 0.5 * self.h

    def refined(self) -> "GridSpec":
        return GridSpec(self.length, 2 * self.n_cells)

    @classmethod
    def auto(cls, path: PotentialPath, h_target: float = 0.1,
             decay: float = DECAY_TARGET) -> "GridSpec":
        """Truncation length from the decay rule exp(-c*(L - b)) <= decay,
        where c is the smallest invertibility margin outside the support
        hull [a, b] and the interval is symmetric about 0."""
        hull = path.hull()
        c = path.min_gap_outside()
        if not np.isfinite(c) or c <= 0.0:
            raise NotInvertible(
                "path has no invertible region outside its support")
        reach = math.log(1.0 / decay) / c
        if hull is None:
            lo, hi = path.span()
            length = max(abs(lo), abs(hi), 1.0) + 1.0
        else:
            length = max(abs(hull[0]), abs(hull[1])) + reach
        n_cells = max(16, int(math.ceil(2.0 * length / h_target)))
        n_cells += n_cells % 2
        return cls(length, n_cells)


@dataclass(frozen=True)
class DiscretizedDiracSchroedinger:
    """Assembled matrix together with its boundary bookkeeping."""

    matrix: np.ndarray
    bc: str                   # "aps" | "dirichlet"
    grid: GridSpec
    path: PotentialPath
    lam: float
    left_basis: Optional[np.ndarray]    # negative subspace of S(-L) (APS)
    right_basis: Optional[np.ndarray]   # positive subspace of S(+L) (APS)
    n_plus_left: int
    n_minus_right: int

    @property
    def k(self) -> int:
        return self.path.k

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape

    @property
    def structural_index(self) -> int:
        """Domain minus codomain dimension: k - n_+(S(-L)) - n_-(S(+L))."""
        return self.shape[1] - self.shape[0]

    def domain_to_nodes(self, vec: np.ndarray) -> np.ndarray:
        """Expand a domain vector to node values psi_0 .. psi_n (APS) or
        pad the interior values with the zero boundary nodes (Dirichlet)."""
        k, n = self.k, self.grid.n_cells
        out = np.zeros(((n + 1), k), dtype=np.complex128)
        if self.bc == "dirichlet":
            out[1:n] = vec.reshape(n - 1, k)
            return out.reshape(-1)
        kl = self.left_basis.shape[1]
        kr = self.right_basis.shape[1]
        out[0] = self.left_basis @ vec[:kl]
        if n > 1:
            out[1:n] = vec[kl:kl + (n - 1) * k].reshape(n - 1, k)
        out[n] = self.right_basis @ vec[kl + (n - 1) * k:]
        return out.reshape(-1)


def _aps_matrix(path, grid, lam, tol):
    k, n, h = path.k, grid.n_cells, grid.h
    nodes = grid.nodes()
    mids = grid.midpoints()
    eye = np.eye(k, dtype=np.complex128)
    full = np.zeros((n * k, (n + 1) * k), dtype=np.complex128)
    for j in range(n):
        s_mid = path.sample(mids[j])
        full[j * k:(j + 1) * k, j * k:(j + 1) * k] = (1j / h) * eye - (0.5j * lam) * s_mid
        full[j * k:(j + 1) * k, (j + 1) * k:(j + 2) * k] = (-1j / h) * eye - (0.5j * lam) * s_mid
    s_left = path.sample(nodes[0])
    s_right = path.sample(nodes[-1])
    for s, label in ((s_left, "left"), (s_right, "right")):
        if spectral_gap(s) < tol.proj_gap_tol:
            raise NotInvertible(f"potential not invertible at the {label} endpoint")
    wl, vl = eigh(s_left, tol)
    wr, vr = eigh(s_right, tol)
    left_basis = vl[:, wl < 0.0]     # P_+(S(-L)) psi(-L) = 0
    right_basis = vr[:, wr > 0.0]    # P_-(S(+L)) psi(+L) = 0
    cols = [full[:, :k] @ left_basis]
    if n > 1:
        cols.append(full[:, k:n * k])
    cols.append(full[:, n * k:] @ right_basis)
    matrix = np.concatenate(cols, axis=1)
    return matrix, left_basis, right_basis, int(np.sum(wl > 0.0)), int(np.sum(wr < 0.0))


def _dirichlet_matrix(path, grid, lam):
    k, n, h = path.k, grid.n_cells, grid.h
    nodes = grid.nodes()
    eye = np.eye(k, dtype=np.complex128)
    m = (n - 1) * k
    a = np.zeros((m, m), dtype=np.complex128)
    for j in range(1, n):
        r = (j - 1) * k
        a[r:r + k, r:r + k] = (-1j * lam) * path.sample(nodes[j])
        if j + 1 <= n - 1:
            a[r:r + k, r + k:r + 2 * k] = (-1j / (2.0 * h)) * eye
        if j - 1 >= 1:
            a[r:r + k, r - k:r] = (1j / (2.0 * h)) * eye
    return a


def assemble(path: PotentialPath, grid: GridSpec, bc: str = "aps",
             lam: float = 1.0, tol: Tolerances = DEFAULT_TOL) -> DiscretizedDiracSchroedinger:
    """Assemble the discretized operator -i d/dt - i*lam*S(t) on [-L, L].

    ``bc`` selects the APS (rectangular, index-carrying) or Dirichlet
    (square, form-level) realization; see the module docstring.  The path
    extends constantly by its endpoint values beyond its declared grid.
    """
    if bc not in ("aps", "dirichlet"):
        raise InvalidInput(f"unknown boundary condition {bc!r}")
    if not lam > 0:
        raise InvalidInput("coupling lam must be positive")
    if bc == "aps":
        matrix, lb, rb, npl, nmr = _aps_matrix(path, grid, lam, tol)
        return DiscretizedDiracSchroedinger(
            matrix=matrix, bc=bc, grid=grid, path=path, lam=lam,
            left_basis=lb, right_basis=rb, n_plus_left=npl, n_minus_right=nmr)
    matrix = _dirichlet_matrix(path, grid, lam)
    return DiscretizedDiracSchroedinger(
        matrix=matrix, bc=bc, grid=grid, path=path, lam=lam,
        left_basis=None, right_basis=None, n_plus_left=0, n_minus_right=0)


@dataclass(frozen=True)
class IndexReport:
    index: int
    dim_ker: int
    dim_coker: int
    structural_index: int
    structural_agrees: bool
    refined_agrees: Optional[bool]
    sigma_kernel: tuple      # singular values assigned to the kernel cluster
    sigma_next: float        # smallest singular value above the threshold
    gap_ratio: float
    threshold: float
    shape: tuple
    lam: float


def _dims_from_svd(matrix, tol):
    res = null_space(matrix, tol, want_basis=False)
    rows, cols = matrix.shape
    rank = cols - res.dim
    dim_coker = rows - rank
    s = res.singular_values
    small = res.dim - (cols - s.size)
    sigma_kernel = tuple(float(x) for x in s[s.size - small:]) if small > 0 else ()
    sigma_next = float(s[s.size - small - 1]) if s.size - small - 1 >= 0 else float("inf")
    return res.dim, dim_coker, sigma_kernel, sigma_next, res.gap_ratio, res.threshold


def index_report(op: DiscretizedDiracSchroedinger, tol: Tolerances = DEFAULT_TOL,
                 refine_check: bool = True) -> IndexReport:
    """Numerical index of an APS assembly: dim ker - dim coker via the
    singular-value clusters of D (and hence of D*).

    The report carries the structural identity check
    index = k - n_+(S(-L)) - n_-(S(+L)) and, when ``refine_check`` is on,
    whether the extracted dimensions survive an h -> h/2 rerun.
    """
    if op.bc != "aps":
        raise InvalidInput("index_report requires an APS assembly")
    dim_ker, dim_coker, sig_ker, sig_next, ratio, thr = _dims_from_svd(op.matrix, tol)
    index = dim_ker - dim_coker
    structural = op.structural_index
    refined_agrees = None
    if refine_check:
        op2 = assemble(op.path, op.grid.refined(), "aps", op.lam, tol)
        dk2, dc2, *_ = _dims_from_svd(op2.matrix, tol)
        refined_agrees = (dk2 == dim_ker and dc2 == dim_coker)
    return IndexReport(index=index, dim_ker=dim_ker, dim_coker=dim_coker,
                       structural_index=structural,
                       structural_agrees=(index == structural),
                       refined_agrees=refined_agrees,
                       sigma_kernel=sig_ker, sigma_next=sig_next,
                       gap_ratio=ratio, threshold=thr,
                       shape=op.shape, lam=op.lam)


def kernel_vectors(op: DiscretizedDiracSchroedinger,
                   tol: Tolerances = DEFAULT_TOL) -> list:
    """Numerical kernel of an APS assembly as node-space functions
    (one complex array over the n_cells+1 grid nodes per kernel vector)."""
    res = null_space(op.matrix, tol, want_basis=True)
    return [op.domain_to_nodes(res.basis[:, j]) for j in range(res.dim)]


@dataclass(frozen=True)
class OracleIndex:
    dim_ker: int
    dim_coker: int
    index: int


def kernel_oracle_diagonal(path: PotentialPath,
                           tol: Tolerances = DEFAULT_TOL) -> OracleIndex:
    """Closed-form index for simultaneously diagonalizable paths.

    Each scalar branch s(t) of the commuting family solves psi' = -s psi
    up to a positive coupling, so it contributes a kernel vector exactly
    when s changes sign upward (s(start) < 0 < s(end)) and a cokernel
    vector when it changes sign downward.  Pairwise commutators above
    1e-10 raise NotDiagonalizable.
    """
    samples = [path.sample(t) for t in path.grid]
    scale = max(1.0, max(float(np.linalg.norm(s, 2)) for s in samples))
    for i in range(len(samples)):
        for j in range(i + 1, len(samples)):
            comm = samples[i] @ samples[j] - samples[j] @ samples[i]
            if float(np.linalg.norm(comm, 2)) / scale**2 > 1e-10:
                raise NotDiagonalizable(
                    f"samples at t={path.grid[i]:g} and t={path.grid[j]:g} "
                    f"do not commute")
    rng = np.random.default_rng(0x5EED)
    weights = rng.uniform(0.5, 1.5, size=len(samples))
    _, v = eigh(sum(w * s for w, s in zip(weights, samples)), tol)
    start = np.real(np.diag(v.conj().T @ samples[0] @ v))
    end = np.real(np.diag(v.conj().T @ samples[-1] @ v))
    dim_ker = int(np.sum((start < 0) & (end > 0)))
    dim_coker = int(np.sum((start > 0) & (end < 0)))
    return OracleIndex(dim_ker=dim_ker, dim_coker=dim_coker,
                       index=dim_ker - dim_coker)


@dataclass(frozen=True)
class DoubledOperator:
    """Graded doubling [[0, D*], [D, 0]] of a square Dirichlet assembly.

    Anticommutes exactly with the grading diag(+1, -1) by block structure,
    and its spectrum is symmetric about 0 (eigenvalues are +-singular
    values of D).
    """

    matrix: np.ndarray
    grading: np.ndarray
    block_dim: int

    def anticommutator_norm(self) -> float:
        g, m = self.grading, self.matrix
        return float(np.linalg.norm(g @ m + m @ g, 2))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


def doubled(op: DiscretizedDiracSchroedinger) -> DoubledOperator:
    if op.bc != "dirichlet":
        raise InvalidInput("doubled() requires a square Dirichlet assembly")
    d = op.matrix
    m = d.shape[0]
    mat = np.zeros((2 * m, 2 * m), dtype=np.complex128)
    mat[:m, m:] = d.conj().T
    mat[m:, :m] = d
    grading = np.diag(np.concatenate([np.ones(m), -np.ones(m)])).astype(np.complex128)
    return DoubledOperator(matrix=mat, grading=grading, block_dim=m)


# ---------------------------------------------------------------------------
# Quantitative Fredholm bounds.

def _path_derivative_norms(path: PotentialPath):
    """delta_t = max over resolvent signs of ||S'(t) (S(t) +- i)^{-1}|| on
    the sample grid, with S' by central differences (one-sided at the ends)."""
    ts = path.grid
    samples = [path.sample(t) for t in ts]
    eye = np.eye(path.k, dtype=np.complex128)
    out = []
    for j, t in enumerate(ts):
        if j == 0:
            ds = (samples[1] - samples[0]) / (ts[1] - ts[0])
        elif j == len(ts) - 1:
            ds = (samples[-1] - samples[-2]) / (ts[-1] - ts[-2])
        else:
            ds = (samples[j + 1] - samples[j - 1]) / (ts[j + 1] - ts[j - 1])
        d_plus = float(np.linalg.norm(
            np.linalg.solve((samples[j] + 1j * eye).conj().T, ds.conj().T).conj().T, 2))
        d_minus = float(np.linalg.norm(
            np.linalg.solve((samples[j] - 1j * eye).conj().T, ds.conj().T).conj().T, 2))
        out.append((float(t), max(d_plus, d_minus)))
    return out, samples


def quintic_plateau(t, lo, hi, ramp):
    """1 on [lo, hi], quintic-smoothstep down to 0 over ``ramp`` outside."""
    if lo <= t <= hi:
        return 1.0
    d = (lo - t) if t < lo else (t - hi)
    if d >= ramp:
        return 0.0
    u = 1.0 - d / ramp
    return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)


def make_cutoff(k_hat: Tuple[float, float], amplitude: float,
                ramp: float) -> Callable[[float], float]:
    """Compactly supported cutoff: amplitude times a quintic-smoothstep
    plateau over the compact region, falling to 0 over ``ramp``."""
    lo, hi = k_hat

    def f(t: float) -> float:
        return amplitude * quintic_plateau(t, lo, hi, ramp)

    return f


def bound_constants(path: PotentialPath, k_hat: Optional[Tuple[float, float]] = None,
                    tol: Tolerances = DEFAULT_TOL):
    """(c, delta_out, delta_K, lambda0): the uniform invertibility bound and
    derivative-resolvent sups outside/inside the compact region, and the
    minimal coupling making the lower-bound threshold positive."""
    if k_hat is None:
        k_hat = path.hull()
    deltas, samples = _path_derivative_norms(path)

    def outside(t):
        return k_hat is None or not (k_hat[0] <= t <= k_hat[1])

    gaps_out = [spectral_gap(s) for (t, _), s in zip(deltas, samples) if outside(t)]
    if not gaps_out:
        raise InvalidInput("no sample lies outside the compact region")
    c_hat = min(gaps_out)
    if c_hat < tol.proj_gap_tol:
        raise NotInvertible("potential is not uniformly invertible outside K")
    delta_hat = max((d for (t, d) in deltas if outside(t)), default=0.0)
    delta_k = max((d for (t, d) in deltas if not outside(t)), default=0.0)
    lambda0 = delta_hat * (c_hat + 1.0) / (c_hat ** 2)
    return c_hat, delta_hat, delta_k, lambda0


@dataclass(frozen=True)
class FredholmBoundReport:
    c_hat: float            # uniform invertibility bound outside K
    delta_hat: float        # sup of the derivative-resolvent norm outside K
    delta_k: float          # same sup over K
    lambda0: float          # minimal coupling making the bound positive
    epsilon: float          # 0.5*(lam^2 c^2 - delta_hat^2 (1 + 1/c)^2)
    min_eig: float          # smallest eigenvalue of the doubled square + f^2
    f_amplitude: float
    disc_slack: float
    second_statement: bool  # delta_hat < c^2/(c+1), so lambda0 = 1 suffices
    passed: bool


def fredholm_bounds(path: PotentialPath, lam: float,
                    f: Optional[Callable[[float], float]] = None,
                    grid: Optional[GridSpec] = None,
                    k_hat: Optional[Tuple[float, float]] = None,
                    disc_slack: float = 0.2,
                    tol: Tolerances = DEFAULT_TOL) -> FredholmBoundReport:
    """Verify the quantitative lower bound on the doubled operator.

    Computes c = inf gap(S) and delta = sup ||S'(S +- i)^{-1}|| outside the
    compact region, the threshold epsilon = (lam^2 c^2 - delta^2(1+1/c)^2)/2,
    and checks that the assembled doubled square plus the cutoff satisfies
    min eig >= epsilon * (1 - disc_slack).  The cutoff must dominate
    epsilon + (lam^2 + delta_K^2)/2 pointwise on the compact region.
    """
    if k_hat is None:
        k_hat = path.hull()
    c_hat, delta_hat, delta_k, lambda0 = bound_constants(path, k_hat, tol)
    epsilon = 0.5 * (lam ** 2 * c_hat ** 2 - delta_hat ** 2 * (1.0 + 1.0 / c_hat) ** 2)
    if epsilon <= 0.0:
        raise HypothesisUnmet(
            f"coupling lam={lam:g} below the positivity threshold "
            f"lambda0={lambda0:g}")
    second = delta_hat < c_hat ** 2 / (c_hat + 1.0)
    if grid is None:
        grid = GridSpec.auto(path)
    needed = epsilon + 0.5 * (lam ** 2 + delta_k ** 2)
    amplitude = math.sqrt(needed)
    if f is None:
        if k_hat is None:
            f = lambda t: 0.0
            amplitude = 0.0
        else:
            ramp = min(2.0, 0.5 * (grid.length - max(abs(k_hat[0]), abs(k_hat[1]))))
            if ramp <= 0:
                raise InvalidInput("grid too short for a compactly supported cutoff")
            f = make_cutoff(k_hat, amplitude, ramp)
    else:
        amplitude = max((abs(f(t)) for t in grid.nodes()), default=0.0)
    if k_hat is not None:
        for t in grid.nodes():
            if k_hat[0] <= t <= k_hat[1] and f(t) ** 2 + 1e-12 < needed:
                raise CutoffTooSmall(
                    f"f({t:g})^2 = {f(t) ** 2:g} below required level {needed:g}")
    op = assemble(path, grid, "dirichlet", lam, tol)
    d = op.matrix
    f_sq = np.repeat([f(t) ** 2 for t in grid.nodes()[1:-1]], path.k)
    m1 = d.conj().T @ d + np.diag(f_sq)
    m2 = d @ d.conj().T + np.diag(f_sq)
    min_eig = float(min(np.linalg.eigvalsh(m1).min(), np.linalg.eigvalsh(m2).min()))
    passed = min_eig >= epsilon * (1.0 - disc_slack)
    return FredholmBoundReport(
        c_hat=c_hat, delta_hat=delta_hat, delta_k=delta_k, lambda0=lambda0,
        epsilon=epsilon, min_eig=min_eig, f_amplitude=amplitude,
        disc_slack=disc_slack, second_statement=second, passed=passed)


@dataclass(frozen=True)
class SweepReport:
    lams: tuple
    indices: tuple
    passed: bool


def lambda_sweep(path: PotentialPath, lams, grid: Optional[GridSpec] = None,
                 tol: Tolerances = DEFAULT_TOL,
                 refine_check: bool = False) -> SweepReport:
    """Index of the APS assembly across a list of couplings; the integers
    must all coincide."""
    if grid is None:
        grid = GridSpec.auto(path)
    indices = []
    for lam in lams:
        rep = index_report(assemble(path, grid, "aps", float(lam), tol), tol,
                           refine_check=refine_check)
        indices.append(rep.index)
    return SweepReport(lams=tuple(float(x) for x in lams),
                       indices=tuple(indices),
                       passed=len(set(indices)) == 1)


@dataclass(frozen=True)
class PerturbationReport:
    base_index: int
    perturbed_index: int
    passed: bool


def perturbation_invariance(path: PotentialPath, perturbed: PotentialPath,
                            lam: float = 1.0, grid: Optional[GridSpec] = None,
                            tol: Tolerances = DEFAULT_TOL,
                            refine_check: bool = False) -> PerturbationReport:
    """Exact index equality between a path and a compactly supported
    symmetric perturbation of it (the perturbation must vanish outside the
    support set, which the caller guarantees by construction)."""
    if grid is None:
        grid = GridSpec.auto(path)
    base = index_report(assemble(path, grid, "aps", lam, tol), tol, refine_check)
    pert = index_report(assemble(perturbed, grid, "aps", lam, tol), tol, refine_check)
    return PerturbationReport(base_index=base.index, perturbed_index=pert.index,
                              passed=base.index == pert.index)
