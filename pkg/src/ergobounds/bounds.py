"""Closed-form perturbation bounds and their empirical verification.

Each formula here is a pure scalar function of a :class:`BoundInput`;
:func:`verify_bound` evaluates the corresponding left side exactly from the
two generators and reports bound-vs-actual rows.  All floor exponents use
the nudged integer part from :mod:`.dobrushin`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dobrushin import (
    StabilityCertificate,
    UNIFORM_ASYMPTOTIC,
    UNIFORM_MEAN_ERGODIC,
    floor_ratio,
)
from .errors import (
    HypothesisNotMetError,
    InputError,
    OutOfDomainError,
    PreconditionError,
)
from .semigroup import Semigroup, cesaro_average, evolve, stationary_points
from .spaces import (
    Classical,
    DirectSum,
    Quantum,
    hermitian_basis,
    is_in_base,
    norm,
    operator_norm,
    _check_vector,
    _inner_norm,
    _pure_state_coords,
)

BOUND_KINDS = (
    "eq1a",
    "eq5",
    "eq6",
    "eq12",
    "per62",
    "cesaro_convergence",
    "cesaro_pair",
    "mean_ergodic",
    "per72",
    "mean_combined",
)

_SEMIGROUP_KINDS = frozenset({"eq1a", "eq5", "eq6", "eq12", "per62"})

CERTIFICATE_REQUIREMENT = {
    kind: (UNIFORM_ASYMPTOTIC if kind in _SEMIGROUP_KINDS else UNIFORM_MEAN_ERGODIC)
    for kind in BOUND_KINDS
}


@dataclass(frozen=True)
class BoundInput:
    """Scalar ingredients of the bound formulas.

    rho is the contraction coefficient certified at time t0;
    perturbation_norm is the generator-difference norm, start_gap the
    distance between the two start points, early_sup the largest flow
    distance before t0, and operator_gap the flow (or averaged-flow)
    distance at t0.
    """

    rho: float
    t0: float
    t: float = 0.0
    perturbation_norm: float = 0.0
    start_gap: float = 0.0
    early_sup: float = 0.0
    operator_gap: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.rho < 1.0:
            raise InputError(f"contraction coefficient {self.rho} must lie in [0, 1)")
        if self.t0 <= 0:
            raise InputError("certificate time must be positive")
        for name in ("t", "perturbation_norm", "start_gap", "early_sup", "operator_gap"):
            if getattr(self, name) < 0:
                raise InputError(f"{name} must be nonnegative")


def bound_trajectory(inp: BoundInput, proof_variant: bool = False) -> float:
    """Bound on the flow distance between two started trajectories.

    Before t0 the perturbation accumulates linearly; after t0 the certified
    contraction discounts the start gap and caps the accumulated
    perturbation by a geometric sum.  ``proof_variant`` drops the final
    geometric term's exponent by one, matching the looser running-sum form
    that the statement supersedes; it is exposed only for comparison.
    """
    if inp.t <= inp.t0:
        return inp.start_gap + inp.t * inp.perturbation_norm
    k = floor_ratio(inp.t, inp.t0)
    rho_k = inp.rho**k
    geom_exponent = k - 1 if proof_variant else k
    geometric = inp.t0 * (1.0 - inp.rho**geom_exponent) / (1.0 - inp.rho)
    remainder = rho_k * (inp.t - inp.t0 * k)
    return rho_k * inp.start_gap + (geometric + remainder) * inp.perturbation_norm


def trajectory_branch_values(inp: BoundInput) -> tuple[float, float]:
    """Both branch values of :func:`bound_trajectory` at the current inputs.

    Useful when |t - t0| is at roundoff scale and the caller wants to report
    the values on either side of the branch point.
    """
    below = inp.start_gap + inp.t * inp.perturbation_norm
    k = max(1, floor_ratio(inp.t, inp.t0))
    rho_k = inp.rho**k
    geometric = inp.t0 * (1.0 - rho_k) / (1.0 - inp.rho)
    above = rho_k * inp.start_gap + (geometric + rho_k * (inp.t - inp.t0 * k)) * inp.perturbation_norm
    return below, above


class SupStationaryBounds(NamedTuple):
    sup_bound: float
    stationary_bound: float


def bound_sup_and_stationary(inp: BoundInput) -> SupStationaryBounds:
    """All-time trajectory bound and the induced bound on the limit gap."""
    stationary = inp.t0 * inp.perturbation_norm / (1.0 - inp.rho)
    return SupStationaryBounds(inp.start_gap + stationary, stationary)


def bound_alternative(inp: BoundInput) -> float:
    """Trajectory bound phrased through flow distances instead of generator norms."""
    k = floor_ratio(inp.t, inp.t0)
    rho_k = inp.rho**k
    return rho_k * (inp.start_gap + inp.early_sup) + (1.0 - rho_k) / (1.0 - inp.rho) * inp.operator_gap


def bound_fixed_point_gap(rho: float, operator_gap: float) -> float:
    """Bound on the distance between the two unique fixed points.

    Requires the smallness hypothesis operator_gap < 1 - rho; violating it is
    not an input error but the failure of the result's hypothesis, reported
    as :class:`HypothesisNotMetError`.  The same formula serves the flow and
    the averaged-flow variants with the matching inputs.
    """
    if not 0.0 <= rho < 1.0:
        raise InputError(f"contraction coefficient {rho} must lie in [0, 1)")
    if operator_gap < 0:
        raise InputError("operator gap must be nonnegative")
    if operator_gap >= 1.0 - rho:
        raise HypothesisNotMetError(
            f"operator gap {operator_gap:.6g} is not below 1 - rho = {1.0 - rho:.6g}"
        )
    return operator_gap / (1.0 - rho - operator_gap)


def bound_cesaro_convergence(inp: BoundInput) -> float:
    """Bound on the distance from the time average to the fixed point.

    ``start_gap`` plays the distance from the start point to the fixed
    point.  Only defined for t > t0.
    """
    if inp.t <= inp.t0:
        raise OutOfDomainError("averaged bound needs t > t0")
    k = floor_ratio(inp.t, inp.t0)
    head = inp.t0 * (1.0 - inp.rho ** (k - 1)) / (inp.t * (1.0 - inp.rho))
    tail = inp.rho**k * (inp.t - inp.t0 * k) / inp.t
    return (head + tail) * inp.start_gap


def bound_cesaro_pair(inp: BoundInput) -> float:
    """Bound on the distance between the time averages of two flows."""
    if inp.t <= inp.t0:
        raise OutOfDomainError("averaged bound needs t > t0")
    k = floor_ratio(inp.t, inp.t0)
    head = inp.t0 * (1.0 - inp.rho ** (k - 1)) / (1.0 - inp.rho)
    tail = inp.rho**k * (inp.t - inp.t0 * k)
    return (head + tail) * (inp.perturbation_norm + inp.start_gap / inp.t)


def bound_mean_ergodic(rho: float, t0: float, t: float) -> float:
    """Uniform bound on base-point deviations of the averaged flow from its limit."""
    if not 0.0 <= rho < 1.0:
        raise InputError(f"contraction coefficient {rho} must lie in [0, 1)")
    if t0 <= 0 or t <= 0:
        raise InputError("times must be positive")
    return 2.0 * t0 / (t * (1.0 - rho))


def bound_mean_combined(rho: float, t0: float, t: float, operator_gap: float) -> float:
    """Uniform bound on averaged-flow distances between two perturbed families."""
    if not 0.0 <= rho < 1.0:
        raise InputError(f"contraction coefficient {rho} must lie in [0, 1)")
    if t0 <= 0 or t <= 0:
        raise InputError("times must be positive")
    if operator_gap < 0:
        raise InputError("operator gap must be nonnegative")
    if operator_gap >= 1.0 - rho:
        raise HypothesisNotMetError(
            f"operator gap {operator_gap:.6g} is not below 1 - rho = {1.0 - rho:.6g}"
        )
    reduced = 1.0 - rho - operator_gap
    return (
        2.0 * t0 / (t * (1.0 - rho))
        + 2.0 * t0 / (t * reduced)
        + operator_gap / reduced
    )


# ---------------------------------------------------------------------------
# Empirical verification


@dataclass(frozen=True)
class BoundRow:
    t: float
    actual: float
    bound: float

    @property
    def slack(self) -> float:
        return self.bound - self.actual


@dataclass(frozen=True)
class BoundReport:
    """Bound-vs-actual rows for one bound kind; passes when no row is violated."""

    kind: str
    rows: tuple[BoundRow, ...]
    tolerance: float
    notes: tuple[str, ...] = ()

    @property
    def min_slack(self) -> float:
        return min((r.slack for r in self.rows), default=float("inf"))

    @property
    def passed(self) -> bool:
        return self.min_slack >= -self.tolerance

    def csv_rows(self) -> list[str]:
        lines = []
        for r in self.rows:
            ok = "true" if r.slack >= -self.tolerance else "false"
            lines.append(f"{self.kind},{r.t!r},{r.actual!r},{r.bound!r},{r.slack!r},{ok}")
        return lines


CSV_HEADER = "kind,t,actual,bound,slack,pass"


def _sample_base_points(space, n: int, rng: np.random.Generator) -> np.ndarray:
    """Seeded base points; for the classical kind the extreme points come first."""
    if isinstance(space, Classical):
        corners = np.eye(space.n)
        if n <= space.n:
            return corners[:n]
        extra = rng.dirichlet(np.ones(space.n), size=n - space.n)
        return np.concatenate([corners, extra], axis=0)
    if isinstance(space, DirectSum):
        m = space.inner_dim
        vs = rng.standard_normal((n, m))
        norms = np.array([_inner_norm(space.inner_norm, v) for v in vs])
        norms[norms == 0] = 1.0
        radii = np.ones(n)
        radii[1::2] = rng.uniform(0.0, 1.0, size=len(radii[1::2]))
        pts = vs / norms[:, None] * radii[:, None]
        return np.concatenate([np.ones((n, 1)), pts], axis=1)
    d = space.d
    raw = rng.standard_normal((n, d, 2))
    psi = raw[..., 0] + 1j * raw[..., 1]
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    return _pure_state_coords(d, psi)


def _sup_deviation(space, matrix: np.ndarray, x0: np.ndarray, samples: np.ndarray) -> float:
    """max over sampled base points of ||A x - x0||; exact for classical."""
    return max(norm(space, matrix @ x - x0) for x in samples)


def _sup_pair_deviation(space, mat_a, mat_b, samples_a, samples_b) -> float:
    values = [
        norm(space, mat_a @ x - mat_b @ z) for x in samples_a for z in samples_b
    ]
    return max(values)


def verify_bound(
    kind: str,
    sg_base: Semigroup,
    sg_perturbed: Semigroup,
    x=None,
    z=None,
    t_grid=(),
    tol: float = 1e-9,
    certificate: StabilityCertificate | None = None,
    seed: int = 0,
    n_base_samples: int = 8,
    early_grid_points: int = 32,
) -> BoundReport:
    """Evaluate one bound's left side from the matrices and compare to the formula.

    ``certificate`` must be of the kind the bound requires (flow certificate
    for the trajectory family, averaged-flow certificate for the mean
    family).  Bounds referring to fixed points require both flows to have a
    unique one.  Raises :class:`HypothesisNotMetError` when a smallness
    hypothesis fails; the caller decides how to report that.
    """
    if kind not in BOUND_KINDS:
        raise InputError(f"unknown bound kind {kind!r}; catalog: {BOUND_KINDS}")
    space = sg_base.space
    if sg_perturbed.space != space:
        raise InputError("the two flows live on different spaces")
    if certificate is None:
        raise PreconditionError(f"bound {kind!r} needs a certificate")
    if certificate.kind != CERTIFICATE_REQUIREMENT[kind]:
        raise PreconditionError(
            f"bound {kind!r} needs a {CERTIFICATE_REQUIREMENT[kind]} certificate, "
            f"got {certificate.kind}"
        )
    rho, t0 = certificate.rho, certificate.t0
    notes: list[str] = []
    if isinstance(space, Quantum):
        notes.append("operator norms and suprema on this space are sampled lower bounds")

    if x is None:
        x = _sample_base_points(space, 1, np.random.default_rng(seed))[0]
    x = _check_vector(space, x)
    z = x if z is None else _check_vector(space, z)
    for point, label in ((x, "x"), (z, "z")):
        if not is_in_base(space, point, tol=1e-6):
            raise InputError(f"start point {label} is not a base point")

    b_matrix = sg_perturbed.generator.matrix - sg_base.generator.matrix
    start_gap = norm(space, x - z)
    t_grid = [float(t) for t in t_grid]
    rng = np.random.default_rng(seed)

    def inp(**kw) -> BoundInput:
        return BoundInput(rho=rho, t0=t0, **kw)

    def unique_fixed_points() -> tuple[np.ndarray, np.ndarray]:
        fx = stationary_points(sg_base)
        fz = stationary_points(sg_perturbed)
        if not (fx.is_unique and fz.is_unique):
            raise PreconditionError(
                f"bound {kind!r} refers to fixed points but uniqueness failed "
                f"({fx.kind} / {fz.kind})"
            )
        return fx.x0, fz.x0

    rows: list[BoundRow] = []
    if kind in ("eq1a", "eq5", "eq12"):
        norm_b = operator_norm(space, b_matrix, seed=seed)
        actuals = [
            (t, norm(space, evolve(sg_base, t).apply(x) - evolve(sg_perturbed, t).apply(z)))
            for t in t_grid
        ]
        if kind == "eq1a":
            rows = [
                BoundRow(t, a, bound_trajectory(inp(t=t, perturbation_norm=norm_b, start_gap=start_gap)))
                for t, a in actuals
            ]
        elif kind == "eq5":
            sup_bound = bound_sup_and_stationary(
                inp(perturbation_norm=norm_b, start_gap=start_gap)
            ).sup_bound
            worst_t, worst = max(actuals, key=lambda ta: ta[1])
            rows = [BoundRow(worst_t, worst, sup_bound)]
            notes.append("actual is the supremum over the requested grid")
        else:
            early = np.linspace(0.0, t0, early_grid_points + 2)[1:-1]
            sup_early = max(
                operator_norm(
                    space,
                    evolve(sg_base, s).matrix - evolve(sg_perturbed, s).matrix,
                    seed=seed,
                )
                for s in early
            )
            gap_t0 = operator_norm(
                space, evolve(sg_base, t0).matrix - evolve(sg_perturbed, t0).matrix, seed=seed
            )
            rows = [
                BoundRow(
                    t,
                    a,
                    bound_alternative(
                        inp(t=t, start_gap=start_gap, early_sup=sup_early, operator_gap=gap_t0)
                    ),
                )
                for t, a in actuals
            ]
    elif kind == "eq6":
        norm_b = operator_norm(space, b_matrix, seed=seed)
        x0, z0 = unique_fixed_points()
        stationary = bound_sup_and_stationary(
            inp(perturbation_norm=norm_b, start_gap=start_gap)
        ).stationary_bound
        rows = [BoundRow(t0, norm(space, x0 - z0), stationary)]
    elif kind == "per62":
        gap_t0 = operator_norm(
            space, evolve(sg_base, t0).matrix - evolve(sg_perturbed, t0).matrix, seed=seed
        )
        x0, z0 = unique_fixed_points()
        rows = [BoundRow(t0, norm(space, x0 - z0), bound_fixed_point_gap(rho, gap_t0))]
    elif kind == "cesaro_convergence":
        x0, _ = unique_fixed_points()
        gap_to_limit = norm(space, x - x0)
        usable = [t for t in t_grid if t > t0]
        if len(usable) < len(t_grid):
            notes.append("rows with t <= t0 are outside the bound's domain and were skipped")
        rows = [
            BoundRow(
                t,
                norm(space, cesaro_average(sg_base, t).apply(x) - x0),
                bound_cesaro_convergence(inp(t=t, start_gap=gap_to_limit)),
            )
            for t in usable
        ]
    elif kind == "cesaro_pair":
        norm_b = operator_norm(space, b_matrix, seed=seed)
        usable = [t for t in t_grid if t > t0]
        if len(usable) < len(t_grid):
            notes.append("rows with t <= t0 are outside the bound's domain and were skipped")
        rows = [
            BoundRow(
                t,
                norm(
                    space,
                    cesaro_average(sg_base, t).apply(x)
                    - cesaro_average(sg_perturbed, t).apply(z),
                ),
                bound_cesaro_pair(inp(t=t, perturbation_norm=norm_b, start_gap=start_gap)),
            )
            for t in usable
        ]
    elif kind == "mean_ergodic":
        x0, _ = unique_fixed_points()
        samples = _sample_base_points(space, n_base_samples, rng)
        rows = [
            BoundRow(
                t,
                _sup_deviation(space, cesaro_average(sg_base, t).matrix, x0, samples),
                bound_mean_ergodic(rho, t0, t),
            )
            for t in t_grid
        ]
        if not isinstance(space, Classical):
            notes.append("supremum over the base is approximated by seeded samples")
    elif kind == "per72":
        gap_avg = operator_norm(
            space,
            cesaro_average(sg_base, t0).matrix - cesaro_average(sg_perturbed, t0).matrix,
            seed=seed,
        )
        x0, z0 = unique_fixed_points()
        rows = [BoundRow(t0, norm(space, x0 - z0), bound_fixed_point_gap(rho, gap_avg))]
    else:  # mean_combined
        gap_avg = operator_norm(
            space,
            cesaro_average(sg_base, t0).matrix - cesaro_average(sg_perturbed, t0).matrix,
            seed=seed,
        )
        samples = _sample_base_points(space, n_base_samples, rng)
        rows = [
            BoundRow(
                t,
                _sup_pair_deviation(
                    space,
                    cesaro_average(sg_base, t).matrix,
                    cesaro_average(sg_perturbed, t).matrix,
                    samples,
                    samples,
                ),
                bound_mean_combined(rho, t0, t, gap_avg),
            )
            for t in t_grid
        ]
        notes.append("left side compares the averages at each row's own time")
        if not isinstance(space, Classical):
            notes.append("supremum over base pairs is approximated by seeded samples")

    return BoundReport(kind=kind, rows=tuple(rows), tolerance=tol, notes=tuple(notes))
