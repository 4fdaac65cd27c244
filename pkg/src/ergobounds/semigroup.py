"""Evolution and time averages of the flow generated by a validated matrix.

The flow at time t is the matrix exponential of t*Q.  The plain time average
over [0, t] is evaluated exactly (to exponential accuracy) through an
augmented block exponential, so no discretization error enters bound
verification; quadrature is used only for general weight functions and as a
cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import expm

from ._quad import (
    DEFAULT_QUADRATURE,
    QuadratureSettings,
    adaptive_simpson,
    integral_with_endpoint_singularity,
)
from .errors import ConsistencyError, InputError, RangeOverflowError
from .spaces import (
    LinearMap,
    Role,
    StateSpace,
    functional,
    generator_map,
    is_in_cone,
    norm,
    _check_vector,
)


@dataclass(frozen=True)
class Semigroup:
    """A validated generator together with the accuracy target for its exponentials."""

    space: StateSpace
    generator: LinearMap
    expm_tolerance: float = 1e-12

    def __post_init__(self) -> None:
        if self.generator.role is not Role.GENERATOR:
            raise InputError("semigroup needs a map with generator role")
        if self.generator.space != self.space:
            raise InputError("generator lives on a different space")


def make_semigroup(
    space: StateSpace,
    q_matrix,
    tol: float = 1e-9,
    probe_times: tuple[float, ...] = (0.1, 1.0, 10.0),
    expm_tolerance: float = 1e-12,
) -> Semigroup:
    """Validate ``q_matrix`` as a generator on ``space`` and wrap it."""
    gen = generator_map(space, q_matrix, tol=tol, probe_times=probe_times)
    return Semigroup(space, gen, expm_tolerance)


def evolve(sg: Semigroup, t: float) -> LinearMap:
    """The flow at time ``t``, computed by Pade scaling-and-squaring."""
    if t < 0:
        raise InputError("evolution time must be nonnegative")
    result = expm(t * sg.generator.matrix)
    if not np.all(np.isfinite(result)):
        raise RangeOverflowError(f"exponential overflowed at t={t}")
    return LinearMap(sg.space, result, Role.MARKOV)


def cesaro_average(sg: Semigroup, t: float) -> LinearMap:
    """Time average (1/t) * integral of the flow over [0, t], evaluated exactly.

    The integral of exp(s*Q) appears in the upper-right block of the
    exponential of the augmented matrix [[Q, I], [0, 0]].
    """
    if t <= 0:
        raise InputError("averaging horizon must be positive")
    m = sg.space.ambient_dim
    block = np.zeros((2 * m, 2 * m))
    block[:m, :m] = sg.generator.matrix
    block[:m, m:] = np.eye(m)
    big = expm(t * block)
    if not np.all(np.isfinite(big)):
        raise RangeOverflowError(f"augmented exponential overflowed at t={t}")
    return LinearMap(sg.space, big[:m, m:] / t, Role.MARKOV)


def _flow_fn(sg: Semigroup) -> Callable[[float], np.ndarray]:
    q = sg.generator.matrix

    def flow(s: float) -> np.ndarray:
        return expm(s * q)

    return flow


def weighted_average_with_error(
    sg: Semigroup,
    b,
    t: float,
    quad: QuadratureSettings = DEFAULT_QUADRATURE,
) -> tuple[LinearMap, float]:
    """Weighted time average with an a-posteriori quadrature error estimate.

    ``b`` is any positive weight callable; an optional ``integral`` method
    supplies the normalizer analytically and an optional ``singular_exponent``
    attribute routes integrable power singularities at 0 onto a substitution
    mesh.  Constant weights short-circuit to :func:`cesaro_average`, which is
    exact.
    """
    if t <= 0:
        raise InputError("averaging horizon must be positive")
    if getattr(b, "is_constant", False):
        return cesaro_average(sg, t), 0.0

    alpha = min(0.0, float(getattr(b, "singular_exponent", 0.0)))
    flow = _flow_fn(sg)

    def weighted_flow(s: float) -> np.ndarray:
        return float(b(s)) * flow(s)

    numerator, err_num = integral_with_endpoint_singularity(weighted_flow, t, alpha, quad)

    denominator = None
    integral = getattr(b, "integral", None)
    if callable(integral):
        denominator = integral(t)
    if denominator is None:
        den_val, err_den = integral_with_endpoint_singularity(
            lambda s: float(b(s)), t, alpha, quad
        )
        denominator, err_den = float(den_val), float(err_den)
    else:
        denominator, err_den = float(denominator), 0.0
    if not denominator > 0:
        raise InputError("weight does not have positive mass on (0, t]")

    avg = numerator / denominator
    err = (err_num + err_den * float(np.abs(avg).max())) / denominator
    return LinearMap(sg.space, avg, Role.MARKOV), err


def weighted_average(
    sg: Semigroup,
    b,
    t: float,
    quad: QuadratureSettings = DEFAULT_QUADRATURE,
) -> LinearMap:
    """Weighted time average of the flow over [0, t]."""
    result, _ = weighted_average_with_error(sg, b, t, quad)
    return result


def time_squared_average(
    sg: Semigroup,
    t: float,
    quad: QuadratureSettings = DEFAULT_QUADRATURE,
) -> LinearMap:
    """(1/t) * integral of T_{s^2} over [0, t].

    Evaluated directly and, independently, as the 1/sqrt(s)-weighted average
    over [0, t^2]; the two routes must agree to 1e-6 or the call fails, which
    guards the quadrature against silent misconfiguration.
    """
    if t <= 0:
        raise InputError("averaging horizon must be positive")
    flow = _flow_fn(sg)
    direct, _ = adaptive_simpson(lambda s: flow(s * s), 0.0, t, quad)
    direct = direct / t

    numerator, _ = integral_with_endpoint_singularity(
        lambda s: flow(s) / np.sqrt(s), t * t, -0.5, quad
    )
    substituted = numerator / (2.0 * t)

    disagreement = float(np.abs(direct - substituted).max())
    if disagreement > 1e-6:
        raise ConsistencyError(
            f"direct and substituted averaging routes differ by {disagreement:.3e}"
        )
    return LinearMap(sg.space, direct, Role.MARKOV)


@dataclass(frozen=True)
class StationaryPoints:
    """Fixed points of the flow inside the base.

    ``kind`` is "unique", "non_unique", or "none"; ``x0`` is populated only in
    the unique case and then satisfies Q x0 = 0 (residual recorded) and
    functional(x0) = 1.
    """

    kind: str
    x0: np.ndarray | None = None
    nullity: int = 0
    residual: float = 0.0

    @property
    def is_unique(self) -> bool:
        return self.kind == "unique"


def stationary_points(sg: Semigroup, tol: float = 1e-9) -> StationaryPoints:
    """Null space of the generator intersected with the base."""
    q = sg.generator.matrix
    _, svals, vt = np.linalg.svd(q)
    nullity = int((svals <= tol).sum())
    if nullity == 0:
        return StationaryPoints("none")
    if nullity > 1:
        return StationaryPoints("non_unique", nullity=nullity)
    v = vt[-1]
    fv = functional(sg.space, v)
    if abs(fv) <= 1e-12 * float(np.abs(v).max()):
        return StationaryPoints("none", nullity=1)
    x0 = v / fv
    if not is_in_cone(sg.space, x0, tol=max(tol, 1e-8)):
        return StationaryPoints("none", nullity=1)
    return StationaryPoints("unique", x0=x0, nullity=1, residual=norm(sg.space, q @ x0))


def integral_equation_residual(
    sg_base: Semigroup,
    sg_perturbed: Semigroup,
    x,
    t: float,
    quad: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """Residual of the variation-of-constants identity linking two flows.

    For generators Q and Q + B the perturbed flow satisfies
    S_t x = T_t x + integral_0^t T_{t-s} B S_s x ds; the returned value is the
    base norm of the defect, which should sit at quadrature accuracy.
    """
    if sg_base.space != sg_perturbed.space:
        raise InputError("flows live on different spaces")
    x = _check_vector(sg_base.space, x)
    if t <= 0:
        raise InputError("time must be positive")
    q_t = sg_base.generator.matrix
    q_s = sg_perturbed.generator.matrix
    b = q_s - q_t

    def integrand(s: float) -> np.ndarray:
        return expm((t - s) * q_t) @ (b @ (expm(s * q_s) @ x))

    integral, _ = adaptive_simpson(integrand, 0.0, t, quad)
    defect = expm(t * q_s) @ x - expm(t * q_t) @ x - integral
    return norm(sg_base.space, defect)
