"""Hypersurface pairing: computing the index from boundary data alone.

For a 1-D potential path invertible outside a finite union K of closed
intervals, the boundary N = dK is a finite set of points carrying outward
signs gamma = -1 at left interval endpoints and +1 at right ones.  The
pairing of the boundary restriction with a fixed invertible reference
operator T,

    rhs = sum over y in N of gamma(y) * rel-ind(P_+(S(y)), P_+(T)),

must equal the index of the assembled 1-D operator, independently of the
choice of T (the signed sum telescopes).  Fibered inputs (one independent
path per point of a finite fiber set Y) produce one integer per fiber,
and truncation towers give the finite-dimensional meaning of the
relatively-compact-perturbation hypothesis: difference-of-projection
tails must decay along the tower and the integers must stabilize.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    HypothesisUnmet,
    InvalidInput,
    NotInvertible,
    TheoremViolation,
    TowerTooShallow,
)
from .opcore import (
    DEFAULT_TOL,
    Tolerances,
    positive_projection,
    spectral_gap,
    spectral_norm,
)
from .relindex import rel_index
from .specflow import PotentialPath, endpoint_identity
from . import dirac1d

__all__ = [
    "Hypersurface",
    "hypersurface_of",
    "FiberedFamily",
    "CalliasReport",
    "rhs_pairing",
    "callias_check",
    "ran_projection_pairing",
    "four_way_identity",
    "FourWayReport",
    "tower_callias",
    "TowerCalliasReport",
]


@dataclass(frozen=True)
class Hypersurface:
    """Boundary points of the support set with their outward signs."""

    points: Tuple[float, ...]
    gamma: Tuple[int, ...]

    def __post_init__(self):
        if len(self.points) != len(self.gamma):
            raise InvalidInput("points and gamma must have equal length")
        if any(g not in (-1, 1) for g in self.gamma):
            raise InvalidInput("gamma entries must be -1 or +1")


def hypersurface_of(path: PotentialPath, tol: Tolerances = DEFAULT_TOL) -> Hypersurface:
    """Boundary of the declared support set, signed by the outward normal:
    -1 at left endpoints of the intervals of K, +1 at right endpoints.
    The potential must be invertible at every boundary point."""
    points, gamma = [], []
    for (a, b) in path.support:
        points.extend((a, b))
        gamma.extend((-1, +1))
    for y in points:
        if spectral_gap(path.sample(y)) < tol.proj_gap_tol:
            raise NotInvertible(f"potential not invertible at boundary point {y:g}")
    return Hypersurface(points=tuple(points), gamma=tuple(gamma))


@dataclass(frozen=True)
class FiberedFamily:
    """Finitely many independent potential paths, one per fiber label.

    Indices over such a family are integer vectors, one entry per fiber;
    every check factors through the fibers."""

    labels: tuple
    paths: tuple

    def __post_init__(self):
        if len(self.labels) != len(self.paths) or len(self.paths) == 0:
            raise InvalidInput("need one path per fiber label")

    @property
    def size(self) -> int:
        return len(self.paths)


def _resolve_reference(reference, k: int) -> np.ndarray:
    """Accept a scalar (multiple of the identity), a matrix, or a callable
    k -> matrix as the reference operator."""
    if callable(reference) and not hasattr(reference, "entries"):
        reference = reference(k)
    if np.isscalar(reference):
        mat = complex(reference) * np.eye(k, dtype=np.complex128)
    else:
        mat = np.asarray(reference.entries if hasattr(reference, "entries")
                         else reference, dtype=np.complex128)
    if mat.shape != (k, k):
        raise InvalidInput(f"reference has shape {mat.shape}, expected ({k}, {k})")
    return (mat + mat.conj().T) / 2.0


def _scalar_rhs(path: PotentialPath, surface: Hypersurface, reference,
                tol: Tolerances) -> int:
    if not surface.points:
        return 0
    t_ref = _resolve_reference(reference, path.k)
    if spectral_gap(t_ref) < tol.proj_gap_tol:
        raise NotInvertible("reference operator is not invertible")
    p_ref = positive_projection(t_ref, tol.proj_gap_tol, tol)
    total = 0
    for y, g in zip(surface.points, surface.gamma):
        p_y = positive_projection(path.sample(y), tol.proj_gap_tol, tol)
        total += g * rel_index(p_y, p_ref, tol)
    return total


def rhs_pairing(path_or_family, surface=None, reference=-1.0,
                tol: Tolerances = DEFAULT_TOL):
    """Signed sum of per-point relative indices against a reference.

    For a plain path returns an integer; for a FiberedFamily a tuple with
    one integer per fiber (each fiber uses its own boundary points).
    ``surface`` defaults to the boundary of the declared support set.
    """
    if isinstance(path_or_family, FiberedFamily):
        return tuple(
            _scalar_rhs(p, surface if surface is not None else hypersurface_of(p, tol),
                        reference, tol)
            for p in path_or_family.paths)
    path = path_or_family
    if surface is None:
        surface = hypersurface_of(path, tol)
    return _scalar_rhs(path, surface, reference, tol)


def _scalar_lhs(path: PotentialPath, lam, grid, tol, method, refine_check):
    """Index of the assembled operator, cross-checked against the endpoint
    identity of the spectral-flow module when method == "both"."""
    if method not in ("pde", "sf", "both"):
        raise InvalidInput(f"unknown lhs method {method!r}")
    sf_value = None
    if method in ("sf", "both"):
        ident = endpoint_identity(path, tol=tol)
        if not ident.passed:
            raise TheoremViolation(
                f"spectral-flow routes disagree on {path.name}: {ident}")
        sf_value = ident.endpoint_rel_index
    if method == "sf":
        return sf_value
    if grid is None:
        g = dirac1d.GridSpec.auto(path)
    elif callable(grid):
        g = grid(path)
    else:
        g = grid
    rep = dirac1d.index_report(
        dirac1d.assemble(path, g, "aps", lam, tol), tol, refine_check=refine_check)
    if sf_value is not None and sf_value != rep.index:
        raise TheoremViolation(
            f"assembled index {rep.index} != spectral flow {sf_value} "
            f"on {path.name}")
    return rep.index


@dataclass(frozen=True)
class CalliasReport:
    lhs: Union[int, tuple]
    rhs: Union[int, tuple]
    rhs_alt: Union[int, tuple]      # with the second, independent reference
    per_point: tuple                # per boundary point (or per fiber: tuple of tuples)
    passed: bool


def callias_check(path_or_family, lam: float = 1.0, reference=-1.0,
                  reference_alt=None, grid=None,
                  lhs_method: str = "both", refine_check: bool = False,
                  tol: Tolerances = DEFAULT_TOL) -> CalliasReport:
    """Assert index == hypersurface pairing, including reference independence.

    The left-hand side is the index of the APS assembly, cross-checked by
    default against the two spectral-flow computations; the right-hand
    side is evaluated with two distinct references and must not depend on
    the choice.  Any mismatch raises TheoremViolation.
    """
    fibered = isinstance(path_or_family, FiberedFamily)
    paths = path_or_family.paths if fibered else (path_or_family,)

    def alt_for(ref, k):
        if reference_alt is not None:
            return _resolve_reference(reference_alt, k)
        return -_resolve_reference(ref, k)

    lhs, rhs, rhs2, per_point = [], [], [], []
    for p in paths:
        surface = hypersurface_of(p, tol)
        lhs.append(_scalar_lhs(p, lam, grid, tol, lhs_method, refine_check))
        rhs.append(_scalar_rhs(p, surface, reference, tol))
        rhs2.append(_scalar_rhs(p, surface, alt_for(reference, p.k), tol))
        ref_mat = _resolve_reference(reference, p.k)
        p_ref = positive_projection(ref_mat, tol.proj_gap_tol, tol)
        per_point.append(tuple(
            g * rel_index(positive_projection(p.sample(y), tol.proj_gap_tol, tol),
                          p_ref, tol)
            for y, g in zip(surface.points, surface.gamma)))
    if fibered:
        report = CalliasReport(lhs=tuple(lhs), rhs=tuple(rhs), rhs_alt=tuple(rhs2),
                               per_point=tuple(per_point),
                               passed=tuple(lhs) == tuple(rhs) == tuple(rhs2))
    else:
        report = CalliasReport(lhs=lhs[0], rhs=rhs[0], rhs_alt=rhs2[0],
                               per_point=per_point[0],
                               passed=lhs[0] == rhs[0] == rhs2[0])
    if not report.passed:
        exc = TheoremViolation(
            f"hypersurface pairing mismatch: lhs={report.lhs} rhs={report.rhs} "
            f"rhs_alt={report.rhs_alt}")
        exc.report = report
        raise exc
    return report


def ran_projection_pairing(path_or_family, surface=None,
                           tol: Tolerances = DEFAULT_TOL):
    """Signed sum of positive-subspace ranks at the boundary points.

    This is the unital/finitely-generated specialization: with the
    reference -1 the relative index against P_+(-1) = 0 is just the rank,
    so the value must agree with rhs_pairing(..., reference=-1); the
    equality is asserted.
    """
    if isinstance(path_or_family, FiberedFamily):
        return tuple(ran_projection_pairing(p, None, tol)
                     for p in path_or_family.paths)
    path = path_or_family
    if surface is None:
        surface = hypersurface_of(path, tol)
    total = 0
    for y, g in zip(surface.points, surface.gamma):
        p_y = positive_projection(path.sample(y), tol.proj_gap_tol, tol)
        total += g * p_y.rank()
    against_minus_one = _scalar_rhs(path, surface, -1.0, tol)
    if total != against_minus_one:
        raise TheoremViolation(
            f"rank pairing {total} != relative-index pairing {against_minus_one}")
    return total


@dataclass(frozen=True)
class FourWayReport:
    sf_by_crossings: int
    sf_by_partition: int
    endpoint_rel_index: int
    pairing: int
    passed: bool


def four_way_identity(path: PotentialPath, reference=-1.0,
                      crossing_tol: float = 1e-8,
                      tol: Tolerances = DEFAULT_TOL) -> FourWayReport:
    """The interval special case: spectral flow (both routes), endpoint
    relative index, and the hypersurface pairing over N = dK must produce
    one and the same integer."""
    ident = endpoint_identity(path, crossing_tol, tol)
    pairing = rhs_pairing(path, None, reference, tol)
    passed = ident.passed and ident.endpoint_rel_index == pairing
    return FourWayReport(sf_by_crossings=ident.sf_by_crossings,
                         sf_by_partition=ident.sf_by_partition,
                         endpoint_rel_index=ident.endpoint_rel_index,
                         pairing=pairing, passed=passed)


# ---------------------------------------------------------------------------
# Truncation-tower version.

def make_tower_scenario(seed: int, n_fibers: int = 2,
                        base_dim: int = 16, rank: int = 2,
                        decay_rate: float = 1.6,
                        min_end_gap: float = 0.8):
    """Seeded tower-backed scenario: nested reference template plus, per
    fiber, a path that ramps a decaying finite-rank perturbation onto the
    reference across the support set [-1, 1].

    Returns (family_builder, reference_template).  The perturbation scale
    is fixed at the base dimension (so all truncations nest) and bumped
    deterministically until the perturbed endpoint keeps a healthy gap.
    """
    from .opcore import alternating_diag_template, decaying_rank_template
    from .surgery import smoothstep

    reference_template = alternating_diag_template
    fiber_scales = []
    for i in range(n_fibers):
        raw = decaying_rank_template(rank, decay_rate, seed * 101 + i)
        base_norm = spectral_norm(raw(base_dim))
        scale = 3.0 / base_norm
        for _ in range(64):
            end = reference_template(base_dim) + scale * raw(base_dim)
            from .opcore import HermitianOperator
            if spectral_gap(HermitianOperator(end)) >= min_end_gap:
                break
            scale *= 1.13
        else:
            raise InvalidInput("could not reach an invertible perturbed endpoint")
        fiber_scales.append((raw, scale))

    def family_builder(n: int) -> FiberedFamily:
        paths = []
        for i, (raw, scale) in enumerate(fiber_scales):
            r_n = scale * raw(n)
            t_n = reference_template(n)

            def sampler(t, r_n=r_n, t_n=t_n):
                return t_n + smoothstep((t + 1.0) / 2.0) * r_n

            paths.append(PotentialPath(
                n, np.linspace(-2.5, 2.5, 41), sampler,
                support=((-1.0, 1.0),), name=f"tower-fiber-{i}(dim={n})"))
        return FiberedFamily(labels=tuple(range(n_fibers)), paths=tuple(paths))

    return family_builder, reference_template


@dataclass(frozen=True)
class TowerCalliasReport:
    dims: tuple
    integers: tuple          # per dim: tuple of per-fiber integers
    tail_norms: tuple        # per dim: max over fibers/points of the projection tail
    precondition_norms: tuple
    stabilized: bool
    tails_decay: bool
    passed: bool


def _tail_projector(n: int, start: int) -> np.ndarray:
    p = np.zeros((n, n))
    p[start:, start:] = np.eye(n - start)
    return p


def tower_callias(family_builder: Callable[[int], FiberedFamily],
                  reference_template: Callable[[int], np.ndarray],
                  dims: Sequence[int], lam: float = 1.0,
                  rank_cutoff: int = 12,
                  base_grid: Optional[dirac1d.GridSpec] = None,
                  tail_bound: float = 1e-6,
                  tol: Tolerances = DEFAULT_TOL) -> TowerCalliasReport:
    """Hypersurface pairing along a truncation tower.

    ``family_builder(n)`` must produce the fibered family at fiber
    dimension n (nested compressions of one template scenario) and
    ``reference_template(n)`` the reference operator at dimension n.

    Preconditions: at every boundary point, the perturbation against the
    reference must have a small resolvent tail beyond ``rank_cutoff``
    (||(S(y) - T)(T +- i)^(-1) Pi_tail|| <= tail_bound).  The full
    assembled-operator check runs at the base dimension; larger dimensions
    use the (already cross-validated) spectral-flow route for the
    left-hand side.  The per-fiber integers must agree at the top two
    dimensions and the difference-of-projection tail norms must decay
    monotonically (within factor 2) along the tower.
    """
    dims = tuple(int(d) for d in dims)
    if len(dims) < 2 or any(b <= a for a, b in zip(dims, dims[1:])):
        raise InvalidInput("need at least two strictly increasing dims")
    if rank_cutoff >= dims[0]:
        raise InvalidInput("rank_cutoff must be below the smallest dim")
    integers, tails, pre_norms = [], [], []
    for pos, n in enumerate(dims):
        family = family_builder(n)
        t_ref = _resolve_reference(reference_template, n)
        eye = np.eye(n, dtype=np.complex128)
        pi_fixed = _tail_projector(n, rank_cutoff)
        pi_scaled = _tail_projector(n, n // 2)
        worst_pre, worst_tail = 0.0, 0.0
        p_ref = positive_projection(t_ref, tol.proj_gap_tol, tol)
        for p in family.paths:
            if p.k != n:
                raise InvalidInput("fiber dim must equal the tower dim")
            surface = hypersurface_of(p, tol)
            for y in surface.points:
                diff = p.sample(y) - t_ref
                for sign in (1j, -1j):
                    resolvent = np.linalg.solve((t_ref + sign * eye).conj().T,
                                                pi_fixed).conj().T
                    worst_pre = max(worst_pre, spectral_norm(diff @ resolvent))
                p_y = positive_projection(p.sample(y), tol.proj_gap_tol, tol)
                worst_tail = max(worst_tail, spectral_norm(
                    (p_y.entries - p_ref.entries) @ pi_scaled))
        if worst_pre > tail_bound:
            raise HypothesisUnmet(
                f"tail precondition fails at dim {n}: resolvent tail "
                f"{worst_pre:.3e} > {tail_bound:.1e}")
        method = "both" if pos == 0 else "sf"
        rep = callias_check(family, lam=lam,
                            reference=reference_template(n),
                            grid=base_grid if pos == 0 else None,
                            lhs_method=method, tol=tol)
        integers.append(rep.lhs)
        tails.append(worst_tail)
        pre_norms.append(worst_pre)
    stabilized = integers[-1] == integers[-2]
    tails_decay = all(b <= 2.0 * a + 1e-12 for a, b in zip(tails, tails[1:]))
    if not stabilized:
        raise TowerTooShallow(
            f"integers did not stabilize: {integers[-2]} vs {integers[-1]} "
            f"at dims {dims[-2:]}" )
    return TowerCalliasReport(dims=dims, integers=tuple(integers),
                              tail_norms=tuple(tails),
                              precondition_norms=tuple(pre_norms),
                              stabilized=stabilized, tails_decay=tails_decay,
                              passed=stabilized and tails_decay)
