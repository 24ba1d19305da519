"""Relative index of pairs of projections.

For projections P, Q on the same finite-dimensional space with P - Q
"small" (here: any pair; in the operator-theoretic picture the difference
must be compact), the relative index is the Fredholm index of Q viewed as
a map Ran(P) -> Ran(Q).  In finite dimensions this equals both
rank P - rank Q and tr(P - Q); we compute the trace and keep the distance
to the nearest integer as a built-in health signal.  The explicit
restricted-operator index is implemented once (`rel_index_restricted`) as
an independent cross-check used by the property suites.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidInput, NonIntegerTrace, PathTooCoarse
from .opcore import DEFAULT_TOL, Projection, Tolerances, eigh, null_space

__all__ = [
    "ProjectionPair",
    "rel_index",
    "rel_index_restricted",
    "rel_index_odd_power",
    "check_additivity",
    "AdditivityReport",
    "homotopy_constancy",
    "HomotopyReport",
]


@dataclass(frozen=True)
class ProjectionPair:
    P: Projection
    Q: Projection
    diff_norm: float = None

    def __post_init__(self):
        if self.P.dim != self.Q.dim:
            raise InvalidInput(
                f"projection dims differ: {self.P.dim} vs {self.Q.dim}")
        object.__setattr__(
            self, "diff_norm",
            float(np.linalg.norm(self.P.entries - self.Q.entries, 2)))


def _as_pair(p, q=None) -> ProjectionPair:
    if isinstance(p, ProjectionPair):
        return p
    return ProjectionPair(p if isinstance(p, Projection) else Projection(p),
                          q if isinstance(q, Projection) else Projection(q))


def rel_index(p, q=None, tol: Tolerances = DEFAULT_TOL) -> int:
    """Relative index of (P, Q) via the trace formula round(tr(P - Q)).

    Raises NonIntegerTrace when the trace sits further than
    ``tol.integer_residual_tol`` from the nearest integer.
    """
    pair = _as_pair(p, q)
    t = float(np.trace(pair.P.entries - pair.Q.entries).real)
    r = int(round(t))
    if abs(t - r) > tol.integer_residual_tol:
        raise NonIntegerTrace(
            f"tr(P-Q) = {t!r} is {abs(t - r):.3e} from the nearest integer")
    return r


def _range_basis(p: Projection, tol: Tolerances) -> np.ndarray:
    w, v = eigh(p, tol)
    return v[:, w > 0.5]


def rel_index_restricted(p, q=None, tol: Tolerances = DEFAULT_TOL) -> int:
    """Index of Q: Ran(P) -> Ran(Q) computed explicitly from the restricted
    matrix (dim ker minus dim coker via SVD).  Cross-check for `rel_index`."""
    pair = _as_pair(p, q)
    bp = _range_basis(pair.P, tol)
    bq = _range_basis(pair.Q, tol)
    # matrix of psi -> Q psi in the orthonormal bases of Ran P and Ran Q
    m = bq.conj().T @ (pair.Q.entries @ bp)
    ker = null_space(m, tol, want_basis=False).dim
    coker = null_space(m.conj().T, tol, want_basis=False).dim
    return ker - coker


def rel_index_odd_power(p, q=None, m: int = 1, tol: Tolerances = DEFAULT_TOL) -> float:
    """tr((P - Q)^(2m+1)).

    For differences whose spectrum lies in {-1, 0, +1} the value is
    independent of m and equals the relative index; comparing m = 0, 1, 2
    is a cheap degradation diagnostic.
    """
    pair = _as_pair(p, q)
    if m < 0:
        raise InvalidInput("m must be a nonnegative integer")
    d = pair.P.entries - pair.Q.entries
    acc = d.copy()
    for _ in range(2 * m):
        acc = acc @ d
    return float(np.trace(acc).real)


@dataclass(frozen=True)
class AdditivityReport:
    direct: int        # rel_index(P, R)
    via_middle: int    # rel_index(P, Q) + rel_index(Q, R)
    terms: tuple
    passed: bool


def check_additivity(p, q, r, tol: Tolerances = DEFAULT_TOL) -> AdditivityReport:
    """Verify rel-ind(P, R) = rel-ind(P, Q) + rel-ind(Q, R) exactly."""
    i_pr = rel_index(p, r, tol)
    i_pq = rel_index(p, q, tol)
    i_qr = rel_index(q, r, tol)
    return AdditivityReport(direct=i_pr, via_middle=i_pq + i_qr,
                            terms=(i_pq, i_qr), passed=i_pr == i_pq + i_qr)


@dataclass(frozen=True)
class HomotopyReport:
    values: tuple           # rel_index along the sampled paths
    constant: bool
    max_step: float         # largest consecutive jump over both paths
    start_values: tuple     # rel_index(P_0, P_i), when Q_path is constant P_0
    passed: bool


def homotopy_constancy(p_path: Sequence, q_path: Sequence,
                       tol: Tolerances = DEFAULT_TOL) -> HomotopyReport:
    """Verify constancy of rel_index along sampled projection paths.

    Both paths must be sampled on a common grid with consecutive jumps
    ||P_{i+1} - P_i|| < 1 (the sampled stand-in for strong continuity with
    compact differences); a jump >= 1 raises PathTooCoarse.  When
    ``q_path`` is constantly equal to P_0, the vanishing of
    rel_index(P_0, P_i) is verified as well.
    """
    ps = [x if isinstance(x, Projection) else Projection(x) for x in p_path]
    qs = [x if isinstance(x, Projection) else Projection(x) for x in q_path]
    if len(ps) != len(qs) or len(ps) == 0:
        raise InvalidInput("paths must be nonempty and sampled on a common grid")
    max_step = 0.0
    for seq, label in ((ps, "P"), (qs, "Q")):
        for i in range(len(seq) - 1):
            step = float(np.linalg.norm(seq[i + 1].entries - seq[i].entries, 2))
            max_step = max(max_step, step)
            if step >= 1.0:
                raise PathTooCoarse(
                    f"{label}-path jump ||{label}_{i + 1} - {label}_{i}|| = "
                    f"{step:.3f} >= 1")
    values = tuple(rel_index(pi, qi, tol) for pi, qi in zip(ps, qs))
    constant = len(set(values)) == 1
    q_is_constant_p0 = all(
        float(np.linalg.norm(qi.entries - ps[0].entries, 2)) < 1e-12 for qi in qs)
    if q_is_constant_p0:
        start_values = tuple(rel_index(ps[0], pi, tol) for pi in ps)
        passed = constant and all(v == 0 for v in start_values)
    else:
        start_values = ()
        passed = constant
    return HomotopyReport(values=values, constant=constant, max_step=max_step,
                          start_values=start_values, passed=passed)
