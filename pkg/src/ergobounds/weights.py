"""Weight functions for time averaging, the averaging-class test, and convergence checks.

A weight is a positive function on (0, oo) whose integral diverges.  The
averaging class consists of weights whose shift-difference ratio

    r(s, t) = integral_s^t |b(u) - b(u - s)| du / integral_0^t b(u) du

vanishes as t grows, for every shift s; weighted averages built from such
weights inherit the convergence of the plain time average.  Membership is a
limit statement, so the numeric test returns evidence (the r table) and
treats "unknown" as a first-class verdict; the built-in catalog forms are
classified analytically instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from ._quad import (
    DEFAULT_QUADRATURE,
    QuadratureSettings,
    adaptive_simpson,
    integral_with_endpoint_singularity,
)
from .errors import InputError, PreconditionError
from .semigroup import (
    Semigroup,
    evolve,
    stationary_points,
    weighted_average,
)
from .spaces import functional, norm, _check_vector


class ClassWVerdict(Enum):
    IN_W = "in_w"
    NOT_IN_W = "not_in_w"
    UNKNOWN = "unknown"


class Weight:
    """Base class for weights; subclasses define evaluation and metadata.

    ``singular_exponent`` reports the power behaviour at 0 (negative values
    route quadrature onto a substitution mesh); ``bounds_info`` returns
    (bounded, infimum lower bound) used by the product closure hypotheses.
    """

    is_constant = False

    def __call__(self, s: float) -> float:
        raise NotImplementedError

    @property
    def singular_exponent(self) -> float:
        return 0.0

    def integral(self, t: float) -> float | None:
        """Analytic integral over [0, t] when available, else None."""
        return None

    def bounds_info(self) -> tuple[bool, float]:
        return (False, 0.0)

    def analytic_verdict(self) -> ClassWVerdict | None:
        return None

    def analytic_reason(self) -> str:
        return ""

    @property
    def class_w_verdict(self) -> ClassWVerdict:
        return self.analytic_verdict() or ClassWVerdict.UNKNOWN


@dataclass(frozen=True)
class Constant(Weight):
    value: float = 1.0
    is_constant = True

    def __post_init__(self) -> None:
        if self.value <= 0:
            raise InputError("constant weight must be positive")

    def __call__(self, s: float) -> float:
        return self.value

    def integral(self, t: float) -> float:
        return self.value * t

    def bounds_info(self) -> tuple[bool, float]:
        return (True, self.value)

    def analytic_verdict(self) -> ClassWVerdict:
        return ClassWVerdict.IN_W

    def analytic_reason(self) -> str:
        return "constant: shift differences vanish identically"


@dataclass(frozen=True)
class Power(Weight):
    """s**alpha; integrable at 0 and of divergent integral exactly when alpha > -1."""

    alpha: float

    def __post_init__(self) -> None:
        if self.alpha <= -1:
            raise InputError("power weight needs exponent > -1 to be integrable at 0")

    def __call__(self, s: float) -> float:
        if s == 0.0:
            return 1.0 if self.alpha == 0 else (0.0 if self.alpha > 0 else math.inf)
        return float(s) ** self.alpha

    @property
    def singular_exponent(self) -> float:
        return min(self.alpha, 0.0)

    def integral(self, t: float) -> float:
        return t ** (1.0 + self.alpha) / (1.0 + self.alpha)

    def bounds_info(self) -> tuple[bool, float]:
        if self.alpha == 0:
            return (True, 1.0)
        return (False, 0.0)

    def analytic_verdict(self) -> ClassWVerdict:
        return ClassWVerdict.IN_W

    def analytic_reason(self) -> str:
        branch = "nondecreasing" if self.alpha >= 0 else "nonincreasing with integrable head"
        return f"power weight, eventually monotone ({branch})"


@dataclass(frozen=True)
class PowerLog(Weight):
    """s**beta * log(e + s)**gamma for beta, gamma >= 0.

    The log factor is taken at e + s so the function is positive and
    nondecreasing on all of (0, oo); asymptotically this matches the plain
    power-times-log growth.
    """

    beta: float
    gamma: float

    def __post_init__(self) -> None:
        if self.beta < 0 or self.gamma < 0:
            raise InputError("power-log weight needs nonnegative exponents")

    def __call__(self, s: float) -> float:
        powered = 1.0 if self.beta == 0 else float(s) ** self.beta
        return powered * math.log(math.e + float(s)) ** self.gamma

    def integral(self, t: float) -> float | None:
        if self.gamma == 0:
            return t ** (1.0 + self.beta) / (1.0 + self.beta)
        return None

    def bounds_info(self) -> tuple[bool, float]:
        if self.beta == 0 and self.gamma == 0:
            return (True, 1.0)
        if self.beta == 0:
            return (False, 1.0)
        return (False, 0.0)

    def analytic_verdict(self) -> ClassWVerdict:
        return ClassWVerdict.IN_W

    def analytic_reason(self) -> str:
        return "power-log weight, nondecreasing"


@dataclass(frozen=True)
class Exponential(Weight):
    """exp(rate * s) with rate >= 0; a positive rate grows too fast to average."""

    rate: float

    def __post_init__(self) -> None:
        if self.rate < 0:
            raise InputError("negative rate gives a convergent integral, not a weight")

    def __call__(self, s: float) -> float:
        return math.exp(self.rate * float(s))

    def integral(self, t: float) -> float:
        if self.rate == 0:
            return t
        return (math.exp(self.rate * t) - 1.0) / self.rate

    def bounds_info(self) -> tuple[bool, float]:
        return (self.rate == 0, 1.0)

    def analytic_verdict(self) -> ClassWVerdict:
        return ClassWVerdict.IN_W if self.rate == 0 else ClassWVerdict.NOT_IN_W

    def analytic_reason(self) -> str:
        if self.rate == 0:
            return "constant"
        return "exponential growth: the shift ratio tends to 1 - exp(-rate*s) > 0"

    def shift_ratio_limit(self, s: float) -> float:
        return 1.0 - math.exp(-self.rate * s)


@dataclass(frozen=True)
class Tabulated(Weight):
    """Piecewise-linear weight through positive samples, constant beyond the table."""

    s_values: tuple[float, ...]
    b_values: tuple[float, ...]

    def __post_init__(self) -> None:
        s = np.asarray(self.s_values, dtype=float)
        b = np.asarray(self.b_values, dtype=float)
        if s.ndim != 1 or s.shape != b.shape or s.size < 2:
            raise InputError("table needs matching 1-d sample arrays with >= 2 rows")
        if not np.all(np.diff(s) > 0):
            raise InputError("sample abscissae must be strictly increasing")
        if s[0] < 0:
            raise InputError("sample abscissae must be nonnegative")
        if not np.all(b > 0):
            raise InputError("tabulated weight values must be positive")
        object.__setattr__(self, "s_values", tuple(float(v) for v in s))
        object.__setattr__(self, "b_values", tuple(float(v) for v in b))

    def __call__(self, s: float) -> float:
        return float(np.interp(s, self.s_values, self.b_values))

    def bounds_info(self) -> tuple[bool, float]:
        return (True, min(self.b_values))

    def analytic_verdict(self) -> ClassWVerdict | None:
        diffs = np.diff(self.b_values)
        if np.all(diffs >= 0) or np.all(diffs <= 0):
            return ClassWVerdict.IN_W
        return None

    def analytic_reason(self) -> str:
        diffs = np.diff(self.b_values)
        if np.all(diffs >= 0):
            return "tabulated, nondecreasing over the table"
        if np.all(diffs <= 0):
            return "tabulated, nonincreasing over the table"
        return ""


@dataclass(frozen=True)
class Scaled(Weight):
    factor: float
    inner: Weight

    def __post_init__(self) -> None:
        if self.factor <= 0:
            raise InputError("scale factor must be positive")

    def __call__(self, s: float) -> float:
        return self.factor * self.inner(s)

    @property
    def singular_exponent(self) -> float:
        return self.inner.singular_exponent

    def integral(self, t: float) -> float | None:
        inner = self.inner.integral(t)
        return None if inner is None else self.factor * inner

    def bounds_info(self) -> tuple[bool, float]:
        bounded, inf = self.inner.bounds_info()
        return (bounded, self.factor * inf)

    def analytic_verdict(self) -> ClassWVerdict | None:
        # the shift ratio is invariant under positive scaling
        return self.inner.analytic_verdict()

    def analytic_reason(self) -> str:
        return self.inner.analytic_reason()


@dataclass(frozen=True)
class SumWeight(Weight):
    left: Weight
    right: Weight

    def __call__(self, s: float) -> float:
        return self.left(s) + self.right(s)

    @property
    def singular_exponent(self) -> float:
        return min(self.left.singular_exponent, self.right.singular_exponent)

    def integral(self, t: float) -> float | None:
        a, b = self.left.integral(t), self.right.integral(t)
        return None if a is None or b is None else a + b

    def bounds_info(self) -> tuple[bool, float]:
        (ba, ia), (bb, ib) = self.left.bounds_info(), self.right.bounds_info()
        return (ba and bb, ia + ib)

    def analytic_verdict(self) -> ClassWVerdict | None:
        if (
            self.left.analytic_verdict() is ClassWVerdict.IN_W
            and self.right.analytic_verdict() is ClassWVerdict.IN_W
        ):
            return ClassWVerdict.IN_W
        return None

    def analytic_reason(self) -> str:
        if self.analytic_verdict() is ClassWVerdict.IN_W:
            return "sum of members of the averaging class"
        return ""


@dataclass(frozen=True)
class ProductWeight(Weight):
    """Pointwise product; class membership propagates only for bounded factors
    with positive infima, otherwise the verdict is unknown."""

    left: Weight
    right: Weight

    def __call__(self, s: float) -> float:
        return self.left(s) * self.right(s)

    @property
    def singular_exponent(self) -> float:
        return self.left.singular_exponent + self.right.singular_exponent

    def bounds_info(self) -> tuple[bool, float]:
        (ba, ia), (bb, ib) = self.left.bounds_info(), self.right.bounds_info()
        return (ba and bb, ia * ib)

    def analytic_verdict(self) -> ClassWVerdict | None:
        both_in = (
            self.left.analytic_verdict() is ClassWVerdict.IN_W
            and self.right.analytic_verdict() is ClassWVerdict.IN_W
        )
        (ba, ia), (bb, ib) = self.left.bounds_info(), self.right.bounds_info()
        if both_in and ba and bb and ia > 0 and ib > 0:
            return ClassWVerdict.IN_W
        return None

    def analytic_reason(self) -> str:
        if self.analytic_verdict() is ClassWVerdict.IN_W:
            return "product of bounded members with positive infima"
        return ""


def combine(op: str, *args: Weight, factor: float | None = None) -> Weight:
    """Closure operations on weights: "scale", "sum", or "product".

    Verdicts propagate exactly as far as the closure statements reach:
    scaling and sums of members stay members; products only under the
    boundedness hypotheses, otherwise the result carries an unknown verdict.
    """
    if op == "scale":
        if len(args) != 1 or factor is None:
            raise InputError("scale takes one weight and a factor")
        return Scaled(factor, args[0])
    if op == "sum":
        if len(args) != 2:
            raise InputError("sum takes two weights")
        return SumWeight(*args)
    if op == "product":
        if len(args) != 2:
            raise InputError("product takes two weights")
        return ProductWeight(*args)
    raise InputError(f"unknown combination {op!r}")


# ---------------------------------------------------------------------------
# Class membership testing


def shift_difference_ratio(
    b: Weight,
    s: float,
    t: float,
    quad: QuadratureSettings = DEFAULT_QUADRATURE,
) -> float:
    """The ratio r(s, t) whose decay in t defines the averaging class."""
    if s <= 0:
        raise InputError("shift must be positive")
    if t <= s:
        raise InputError("horizon must exceed the shift")
    alpha = min(0.0, b.singular_exponent)

    def shifted_difference(w: float) -> float:
        return abs(b(w + s) - b(w))

    numerator, _ = integral_with_endpoint_singularity(shifted_difference, t - s, alpha, quad)
    denominator = b.integral(t)
    if denominator is None:
        den_val, _ = integral_with_endpoint_singularity(lambda u: float(b(u)), t, alpha, quad)
        denominator = float(den_val)
    if not denominator > 0:
        raise InputError("weight has no mass on (0, t]")
    return float(numerator) / denominator


@dataclass(frozen=True)
class ClassWReport:
    """Verdict plus the evidence that produced it.

    ``evidence`` holds, per shift s, the sampled (t, r(s, t)) rows; it is
    empty when the verdict was analytic.  ``limit_estimates`` records the
    apparent limit of r(s, t) per shift (exact for the exponential family).
    """

    verdict: ClassWVerdict
    analytic: bool
    reason: str = ""
    evidence: tuple[tuple[float, tuple[tuple[float, float], ...]], ...] = ()
    limit_estimates: tuple[tuple[float, float], ...] = ()


def is_in_class_w(
    b: Weight,
    s_samples: tuple[float, ...] = (0.5, 1.0, 2.0),
    t_sequence: tuple[float, ...] = (10.0, 30.0, 100.0, 300.0),
    tol: float = 1e-2,
    quad: QuadratureSettings = DEFAULT_QUADRATURE,
) -> ClassWReport:
    """Decide class membership analytically where possible, numerically otherwise.

    The numeric path declares membership when every shift's ratio has fallen
    below ``tol`` at the final horizon while decreasing, declares
    non-membership when some ratio has stabilized above ``10 * tol`` over the
    last three horizons, and otherwise returns unknown; a finite computation
    cannot decide the limit, so the evidence table always travels with the
    verdict.
    """
    if any(s <= 0 for s in s_samples) or not s_samples:
        raise InputError("shift samples must be positive")
    t_sequence = tuple(float(t) for t in t_sequence)
    if len(t_sequence) < 3 or any(
        t2 <= t1 for t1, t2 in zip(t_sequence, t_sequence[1:])
    ):
        raise InputError("horizon sequence must be strictly increasing with >= 3 entries")
    if t_sequence[-1] < 10.0 * t_sequence[0]:
        raise InputError("final horizon must be at least 10x the first")

    verdict = b.analytic_verdict()
    if verdict is ClassWVerdict.IN_W:
        return ClassWReport(verdict, analytic=True, reason=b.analytic_reason())
    if verdict is ClassWVerdict.NOT_IN_W:
        limit_fn = getattr(b, "shift_ratio_limit", None)
        limits = tuple(
            (float(s), float(limit_fn(s))) for s in s_samples
        ) if callable(limit_fn) else ()
        return ClassWReport(verdict, analytic=True, reason=b.analytic_reason(), limit_estimates=limits)

    if t_sequence[0] <= max(s_samples):
        raise InputError("horizons must exceed every shift sample")
    evidence = []
    limits = []
    saw_in = True
    saw_not_in = False
    for s in s_samples:
        ratios = [(t, shift_difference_ratio(b, s, t, quad)) for t in t_sequence]
        evidence.append((float(s), tuple((float(t), float(r)) for t, r in ratios)))
        r_vals = [r for _, r in ratios]
        limits.append((float(s), float(r_vals[-1])))
        decreasing_below = r_vals[-1] < tol and r_vals[-1] <= min(r_vals[:-1]) + 1e-12
        tail = r_vals[-3:]
        stable_above = min(tail) > 10.0 * tol and (max(tail) - min(tail)) <= tol
        saw_in = saw_in and decreasing_below
        saw_not_in = saw_not_in or stable_above
    if saw_not_in:
        verdict = ClassWVerdict.NOT_IN_W
    elif saw_in:
        verdict = ClassWVerdict.IN_W
    else:
        verdict = ClassWVerdict.UNKNOWN
    return ClassWReport(
        verdict,
        analytic=False,
        reason="numeric shift-ratio table",
        evidence=tuple(evidence),
        limit_estimates=tuple(limits),
    )


# ---------------------------------------------------------------------------
# Ergodicity checks driven by weights


@dataclass(frozen=True)
class ErgodicityCheck:
    kind: str  # "uniquely_ergodic" | "not_unique" | "no_fixed_point"
    x0: np.ndarray | None = None


def unique_ergodicity_check(sg: Semigroup, tol: float = 1e-9) -> ErgodicityCheck:
    """Whether the flow has exactly one fixed point in the base."""
    fixed = stationary_points(sg, tol=tol)
    if fixed.is_unique:
        return ErgodicityCheck("uniquely_ergodic", x0=fixed.x0)
    if fixed.kind == "non_unique":
        return ErgodicityCheck("not_unique")
    return ErgodicityCheck("no_fixed_point")


@dataclass(frozen=True)
class DecompositionReport:
    holds: bool
    span_rank: int
    ambient_dim: int
    x0_outside_span: bool


def check_mean_ergodic_decomposition(
    sg: Semigroup,
    t_samples,
    tol: float = 1e-9,
) -> DecompositionReport:
    """Test whether the space splits as the fixed line plus the reach of (I - T_t).

    Assembles the column span of I - T_t over the sample times and checks it
    has codimension one with the fixed point outside; this is the
    finite-dimensional form of the splitting that characterizes convergence
    of the averaged flow.
    """
    t_samples = [float(t) for t in t_samples]
    if not t_samples:
        raise InputError("need at least one sample time")
    fixed = stationary_points(sg)
    if fixed.kind == "none":
        raise PreconditionError("flow has no fixed point in the base")
    m = sg.space.ambient_dim
    blocks = [np.eye(m) - evolve(sg, t).matrix for t in t_samples]
    stacked = np.concatenate(blocks, axis=1)
    svals = np.linalg.svd(stacked, compute_uv=False)
    rank = int((svals > tol).sum())
    outside = False
    if fixed.is_unique and rank > 0:
        u, _, _ = np.linalg.svd(stacked)
        basis = u[:, :rank]
        residual = fixed.x0 - basis @ (basis.T @ fixed.x0)
        outside = float(np.linalg.norm(residual)) > tol * max(
            1.0, float(np.linalg.norm(fixed.x0))
        )
    holds = rank == m - 1 and outside
    return DecompositionReport(holds, rank, m, outside)


@dataclass(frozen=True)
class WeightedConvergenceReport:
    """Deviation of the weighted average from the limit along a time grid."""

    rows: tuple[tuple[float, float], ...]
    final_deviation: float
    passed: bool
    threshold: float


def verify_weighted_convergence(
    sg: Semigroup,
    b: Weight,
    x,
    t_grid,
    quad: QuadratureSettings = DEFAULT_QUADRATURE,
    threshold: float = 1e-2,
    class_report: ClassWReport | None = None,
) -> WeightedConvergenceReport:
    """Measure ||A_{b,t} x - f(x) x0|| along the grid for a class member.

    Requires the weight's class verdict to be membership (the convergence
    statement's hypothesis) and the flow to be uniquely ergodic.  The report
    passes when the final deviation is below ``threshold`` and the sequence
    is nonincreasing over its second half.
    """
    report = class_report if class_report is not None else is_in_class_w(b)
    if report.verdict is not ClassWVerdict.IN_W:
        raise PreconditionError(
            f"weight has class verdict {report.verdict.value}; the convergence "
            "statement needs membership"
        )
    fixed = stationary_points(sg)
    if not fixed.is_unique:
        raise PreconditionError("flow is not uniquely ergodic")
    x = _check_vector(sg.space, x)
    t_grid = [float(t) for t in t_grid]
    if not t_grid or any(t <= 0 for t in t_grid):
        raise InputError("time grid must be positive")
    limit = functional(sg.space, x) * fixed.x0
    rows = []
    for t in t_grid:
        avg = weighted_average(sg, b, t, quad)
        rows.append((t, norm(sg.space, avg.apply(x) - limit)))
    deviations = [d for _, d in rows]
    half = len(deviations) // 2
    tail = deviations[half:]
    nonincreasing = all(b2 <= a2 + 1e-12 for a2, b2 in zip(tail, tail[1:]))
    passed = deviations[-1] < threshold and nonincreasing
    return WeightedConvergenceReport(
        rows=tuple(rows),
        final_deviation=deviations[-1],
        passed=passed,
        threshold=threshold,
    )


# ---------------------------------------------------------------------------
# Scenario grammar


def weight_from_spec(spec) -> Weight:
    """Build a weight from the scenario grammar, e.g. {"form": "power", "alpha": 0.5}."""
    if not isinstance(spec, dict) or "form" not in spec:
        raise InputError("weight spec must be a mapping with a 'form' field")
    form = spec["form"]
    try:
        if form == "constant":
            return Constant(float(spec.get("c", 1.0)))
        if form == "power":
            return Power(float(spec["alpha"]))
        if form == "power_log":
            return PowerLog(float(spec["beta"]), float(spec["gamma"]))
        if form == "exponential":
            return Exponential(float(spec["rate"]))
        if form == "tabulated":
            samples = spec["samples"]
            s_vals = tuple(float(row[0]) for row in samples)
            b_vals = tuple(float(row[1]) for row in samples)
            return Tabulated(s_vals, b_vals)
        if form == "scaled":
            return Scaled(float(spec["factor"]), weight_from_spec(spec["inner"]))
        if form == "sum":
            return combine("sum", weight_from_spec(spec["left"]), weight_from_spec(spec["right"]))
        if form == "product":
            return combine(
                "product", weight_from_spec(spec["left"]), weight_from_spec(spec["right"])
            )
    except KeyError as exc:
        raise InputError(f"weight spec for {form!r} is missing field {exc}") from exc
    raise InputError(f"unknown weight form {form!r}")


def tabulated_from_csv(path) -> Tabulated:
    """Load a two-column (s, b) CSV table as a weight."""
    rows = np.loadtxt(path, delimiter=",", dtype=float, ndmin=2)
    if rows.shape[1] != 2:
        raise InputError("weight table CSV must have exactly two columns")
    return Tabulated(tuple(rows[:, 0]), tuple(rows[:, 1]))
