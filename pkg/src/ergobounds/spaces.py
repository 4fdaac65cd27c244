"""Finite-dimensional state spaces carrying a distinguished base of the positive cone.

Three concrete kinds are provided:

* ``Classical(n)`` -- probability vectors in R^n with the l1 norm; the base is
  the simplex and the mass functional is the coordinate sum.
* ``Quantum(d)`` -- Hermitian d x d matrices with the trace norm, stored as
  real coordinate vectors in a fixed orthonormal Hermitian basis; the base is
  the set of density matrices and the functional is the trace.
* ``DirectSum(n, inner_norm)`` -- the plane-plus-fibre space R (+) V with norm
  max(|a|, |v|) and cone {(a, v): |v| <= a}, which embeds any contraction on V
  as a mass-preserving positive map.

All operators are dense real matrices acting on column coordinate vectors, so
for ``Classical`` a mass-preserving positive map is a column-stochastic matrix.
Everything here is immutable and pure; sampling-based checks take an explicit
seed and are deterministic for a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Union

import numpy as np
from scipy.linalg import expm

from .errors import (
    DegenerateInputError,
    DimensionMismatchError,
    InputError,
    NotAContractionError,
    PreconditionError,
    UnsupportedShapeError,
)

DEFAULT_TOL = 1e-9

_INNER_NORMS = ("l1", "l2", "linf")


@dataclass(frozen=True)
class Classical:
    """Probability-simplex space on ``n`` states."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InputError("classical space needs at least one state")

    @property
    def ambient_dim(self) -> int:
        return self.n

    @property
    def lambda_generating(self) -> float:
        return 1.0


@dataclass(frozen=True)
class DirectSum:
    """The space R (+) V for V = R^inner_dim with the chosen inner norm.

    The recorded generating constant is the one achievable on the zero-mass
    subspace {(0, v)}, which is all the coefficient and bound machinery ever
    decomposes; general elements would need a constant above 1.
    """

    inner_dim: int
    inner_norm: str = "l2"

    def __post_init__(self) -> None:
        if self.inner_dim < 1:
            raise InputError("inner dimension must be positive")
        if self.inner_norm not in _INNER_NORMS:
            raise InputError(f"inner_norm must be one of {_INNER_NORMS}")

    @property
    def ambient_dim(self) -> int:
        return 1 + self.inner_dim

    @property
    def lambda_generating(self) -> float:
        return 1.0


@dataclass(frozen=True)
class Quantum:
    """Hermitian matrices on C^d in real coordinates, trace norm, density-matrix base."""

    d: int

    def __post_init__(self) -> None:
        if self.d < 2:
            raise InputError("quantum space needs dimension at least 2")

    @property
    def ambient_dim(self) -> int:
        return self.d * self.d

    @property
    def lambda_generating(self) -> float:
        return 1.0


StateSpace = Union[Classical, DirectSum, Quantum]


class Role(Enum):
    MARKOV = "markov"
    GENERATOR = "generator"
    GENERAL = "general"


def _frozen_matrix(matrix) -> np.ndarray:
    out = np.array(matrix, dtype=float, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class LinearMap:
    """Dense real matrix acting on the coordinates of a state space."""

    space: StateSpace
    matrix: np.ndarray
    role: Role = Role.GENERAL

    def __post_init__(self) -> None:
        mat = _frozen_matrix(self.matrix)
        m = self.space.ambient_dim
        if mat.shape != (m, m):
            raise DimensionMismatchError(
                f"matrix shape {mat.shape} does not match ambient dimension {m}"
            )
        object.__setattr__(self, "matrix", mat)

    def apply(self, x) -> np.ndarray:
        x = _check_vector(self.space, x)
        return self.matrix @ x


# ---------------------------------------------------------------------------
# Hermitian coordinates for the quantum kind


@lru_cache(maxsize=None)
def hermitian_basis(d: int) -> np.ndarray:
    """Orthonormal basis of Hermitian d x d matrices, identity direction first.

    Index 0 is I/sqrt(d); indices 1..d-1 are the traceless diagonal
    directions; the rest are the symmetric and antisymmetric off-diagonal
    pairs.  Orthonormal under the trace inner product, so coordinates of a
    Hermitian X are tr(B_k X) and are real.
    """
    mats = [np.eye(d, dtype=complex) / math.sqrt(d)]
    for level in range(1, d):
        diag = np.zeros(d)
        diag[:level] = 1.0
        diag[level] = -level
        mats.append(np.diag(diag).astype(complex) / math.sqrt(level * (level + 1)))
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0 / math.sqrt(2.0)
            mats.append(sym)
            skew = np.zeros((d, d), dtype=complex)
            skew[j, k] = -1j / math.sqrt(2.0)
            skew[k, j] = 1j / math.sqrt(2.0)
            mats.append(skew)
    basis = np.stack(mats)
    basis.setflags(write=False)
    return basis


def hermitian_to_coords(x_matrix, d: int | None = None) -> np.ndarray:
    """Real coordinates of a Hermitian matrix in the fixed basis."""
    x_matrix = np.asarray(x_matrix, dtype=complex)
    d = x_matrix.shape[0] if d is None else d
    basis = hermitian_basis(d)
    return np.einsum("kij,ji->k", basis, x_matrix).real


def coords_to_hermitian(coords, d: int) -> np.ndarray:
    coords = np.asarray(coords, dtype=float)
    return np.einsum("k,kij->ij", coords, hermitian_basis(d))


def map_matrix_from_action(d: int, action) -> np.ndarray:
    """Coordinate matrix of a superoperator given by its action on Hermitian matrices.

    ``action`` maps a Hermitian (d, d) complex array to another; the result is
    the real matrix whose column k is the coordinates of action(B_k).
    """
    basis = hermitian_basis(d)
    cols = [hermitian_to_coords(action(basis[k]), d) for k in range(d * d)]
    return np.stack(cols, axis=1)


def _trace_norm(x_matrix) -> float:
    return float(np.abs(np.linalg.eigvalsh(x_matrix)).sum())


def _pure_state_coords(d: int, psi: np.ndarray) -> np.ndarray:
    """Coordinates of the projectors onto the rows of ``psi`` (batched)."""
    basis = hermitian_basis(d)
    return np.einsum("np,kpq,nq->nk", psi.conj(), basis, psi).real


# ---------------------------------------------------------------------------
# Norms, functional, cone and base membership


def _check_vector(space: StateSpace, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (space.ambient_dim,):
        raise DimensionMismatchError(
            f"vector of length {x.shape} does not fit ambient dimension {space.ambient_dim}"
        )
    return x


def _check_matrix(space: StateSpace, matrix) -> np.ndarray:
    matrix = np.asarray(matrix, dtype=float)
    m = space.ambient_dim
    if matrix.shape != (m, m):
        raise DimensionMismatchError(
            f"matrix shape {matrix.shape} does not fit ambient dimension {m}"
        )
    return matrix


def _inner_norm(kind: str, v: np.ndarray) -> float:
    if kind == "l1":
        return float(np.abs(v).sum())
    if kind == "l2":
        return float(np.linalg.norm(v))
    return float(np.abs(v).max()) if v.size else 0.0


def _induced_inner_norm(kind: str, m_block: np.ndarray) -> float:
    if kind == "l1":
        return float(np.abs(m_block).sum(axis=0).max())
    if kind == "l2":
        return float(np.linalg.svd(m_block, compute_uv=False)[0])
    return float(np.abs(m_block).sum(axis=1).max())


def norm(space: StateSpace, x) -> float:
    """Base norm of a coordinate vector.

    Classical: l1 sum.  DirectSum: max of |mass coordinate| and the inner
    norm of the fibre part.  Quantum: trace norm of the reconstructed
    Hermitian matrix.
    """
    x = _check_vector(space, x)
    if isinstance(space, Classical):
        return float(np.abs(x).sum())
    if isinstance(space, DirectSum):
        return max(abs(float(x[0])), _inner_norm(space.inner_norm, x[1:]))
    return _trace_norm(coords_to_hermitian(x, space.d))


def functional(space: StateSpace, x) -> float:
    """The strictly positive mass functional defining the base."""
    x = _check_vector(space, x)
    if isinstance(space, Classical):
        return float(x.sum())
    if isinstance(space, DirectSum):
        return float(x[0])
    return float(x[0]) * math.sqrt(space.d)


def functional_vector(space: StateSpace) -> np.ndarray:
    """Row vector f with functional(space, x) == f @ x."""
    m = space.ambient_dim
    if isinstance(space, Classical):
        return np.ones(m)
    out = np.zeros(m)
    out[0] = math.sqrt(space.d) if isinstance(space, Quantum) else 1.0
    return out


def is_in_cone(space: StateSpace, x, tol: float = DEFAULT_TOL) -> bool:
    x = _check_vector(space, x)
    if tol < 0:
        raise InputError("tolerance must be nonnegative")
    if isinstance(space, Classical):
        return bool(x.min() >= -tol)
    if isinstance(space, DirectSum):
        return float(x[0]) >= -tol and _inner_norm(space.inner_norm, x[1:]) <= float(x[0]) + tol
    eigs = np.linalg.eigvalsh(coords_to_hermitian(x, space.d))
    return bool(eigs.min() >= -tol)


def is_in_base(space: StateSpace, x, tol: float = DEFAULT_TOL) -> bool:
    """Membership in the base: positive and of unit mass, within ``tol``."""
    x = _check_vector(space, x)
    if tol < 0:
        raise InputError("tolerance must be nonnegative")
    return is_in_cone(space, x, tol) and abs(functional(space, x) - 1.0) <= tol


def rank_one_limit(space: StateSpace, x0) -> LinearMap:
    """The map x |-> functional(x) * x0, the limit operator of a stable family."""
    x0 = _check_vector(space, x0)
    return LinearMap(space, np.outer(x0, functional_vector(space)), Role.MARKOV)


# ---------------------------------------------------------------------------
# Zero-mass decomposition


@dataclass(frozen=True)
class ZeroSumSplit:
    """x = xi * (u - v) with u, v in the base and xi <= (lambda/2)||x||."""

    xi: float
    u: np.ndarray
    v: np.ndarray


def decompose_zero_sum(space: StateSpace, x, tol: float = DEFAULT_TOL) -> ZeroSumSplit:
    """Split a zero-mass vector as xi*(u - v) with u, v in the base.

    For the classical and quantum kinds this is the Jordan decomposition and
    xi equals norm(x)/2 exactly.  For DirectSum the zero-mass subspace is
    {(0, v)} and the split (1, v/|v|) minus (1, -v/|v|) with xi = |v|/2
    achieves the same constant.
    """
    x = _check_vector(space, x)
    nx = norm(space, x)
    if nx == 0.0:
        raise DegenerateInputError("cannot decompose the zero vector")
    if abs(functional(space, x)) > max(tol, tol * nx):
        raise PreconditionError("vector has nonzero mass functional")

    if isinstance(space, Classical):
        pos = np.clip(x, 0.0, None)
        neg = np.clip(-x, 0.0, None)
        xi = float(pos.sum())
        return ZeroSumSplit(xi, pos / xi, neg / xi)
    if isinstance(space, DirectSum):
        v = x[1:]
        nv = _inner_norm(space.inner_norm, v)
        if nv == 0.0:
            raise DegenerateInputError("zero fibre part cannot be decomposed")
        u = np.concatenate(([1.0], v / nv))
        w = np.concatenate(([1.0], -v / nv))
        return ZeroSumSplit(nv / 2.0, u, w)

    herm = coords_to_hermitian(x, space.d)
    eigs, vecs = np.linalg.eigh(herm)
    pos_part = (vecs * np.clip(eigs, 0.0, None)) @ vecs.conj().T
    neg_part = (vecs * np.clip(-eigs, 0.0, None)) @ vecs.conj().T
    xi = float(np.clip(eigs, 0.0, None).sum())
    return ZeroSumSplit(
        xi,
        hermitian_to_coords(pos_part / xi, space.d),
        hermitian_to_coords(neg_part / xi, space.d),
    )


# ---------------------------------------------------------------------------
# Operator validation


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of a structural operator check.

    ``worst_violation`` is the largest measured deviation across all checks
    (0 when everything is exact); ``failures`` names the checks that exceeded
    the tolerance.  ``certified_at`` lists probe times when positivity was
    certified empirically rather than structurally.
    """

    passed: bool
    worst_violation: float
    failures: tuple[str, ...] = ()
    certified_at: tuple[float, ...] = ()


def _direct_sum_cone_samples(space: DirectSum, seed: int, n_samples: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    n = space.inner_dim
    vs = rng.standard_normal((n_samples, n))
    norms = np.array([_inner_norm(space.inner_norm, v) for v in vs])
    norms[norms == 0] = 1.0
    vs = vs / norms[:, None]
    radii = rng.uniform(0.0, 1.0, size=n_samples) ** (1.0 / n)
    # boundary points stress the check hardest; keep half of them there
    radii[::2] = 1.0
    pts = np.concatenate([np.ones((n_samples, 1)), vs * radii[:, None]], axis=1)
    apex = np.zeros((1, space.ambient_dim))
    apex[0, 0] = 1.0
    return np.concatenate([apex, pts], axis=0)


def validate_markov(
    m: LinearMap,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    n_samples: int = 64,
) -> ValidationReport:
    """Check that a map sends the base into the base and preserves the mass functional.

    Positivity is tested on a generating family per kind: coordinate basis
    vectors (classical), Choi-matrix positive semidefiniteness (quantum, i.e.
    complete positivity), and seeded cone samples (direct sum).  Always
    returns a report; never raises on a failing map.
    """
    space = m.space
    mat = m.matrix
    checks: list[tuple[str, float]] = []
    if isinstance(space, Classical):
        checks.append(("positivity", float(max(0.0, -mat.min()))))
        checks.append(("mass_preservation", float(np.abs(mat.sum(axis=0) - 1.0).max())))
    elif isinstance(space, DirectSum):
        row = mat[0].copy()
        row[0] -= 1.0
        checks.append(("mass_preservation", float(np.abs(row).max())))
        worst = 0.0
        for p in _direct_sum_cone_samples(space, seed, n_samples):
            img = mat @ p
            defect = _inner_norm(space.inner_norm, img[1:]) - float(img[0])
            worst = max(worst, defect, -float(img[0]))
        checks.append(("positivity_sampled", worst))
    else:
        row = mat[0].copy()
        row[0] -= 1.0
        checks.append(("trace_preservation", float(np.abs(row).max())))
        choi = choi_matrix(space, mat)
        checks.append(("choi_psd", float(max(0.0, -np.linalg.eigvalsh(choi).min()))))
    worst = max(v for _, v in checks)
    failures = tuple(name for name, v in checks if v > tol)
    return ValidationReport(passed=not failures, worst_violation=worst, failures=failures)


def choi_matrix(space: Quantum, matrix) -> np.ndarray:
    """Choi matrix of the coordinate superoperator (complex, d^2 x d^2)."""
    matrix = _check_matrix(space, matrix)
    d = space.d

    def apply_herm(h: np.ndarray) -> np.ndarray:
        return coords_to_hermitian(matrix @ hermitian_to_coords(h, d), d)

    choi = np.zeros((d * d, d * d), dtype=complex)
    for j in range(d):
        for k in range(d):
            unit = np.zeros((d, d), dtype=complex)
            unit[j, k] = 1.0
            sym = 0.5 * (unit + unit.conj().T)
            skew = (unit - unit.conj().T) / 2j
            image = apply_herm(sym) + 1j * apply_herm(skew)
            choi[j * d : (j + 1) * d, k * d : (k + 1) * d] = image
    return choi


def validate_generator(
    m: LinearMap,
    tol: float = DEFAULT_TOL,
    probe_times: tuple[float, ...] = (0.1, 1.0, 10.0),
    seed: int = 0,
) -> ValidationReport:
    """Check that a matrix generates a mass-preserving positive flow.

    Classical matrices admit a structural test (nonnegative off-diagonal
    entries, zero column sums).  The quantum and direct-sum kinds are
    certified empirically: the mass functional must annihilate the matrix and
    exp(tau * Q) must validate as Markov at every probe time.  The probe
    certificate is evidence, not a proof, and the probes used are recorded.
    """
    if not probe_times or any(p <= 0 for p in probe_times):
        raise InputError("probe_times must be nonempty and positive")
    space = m.space
    mat = m.matrix
    if isinstance(space, Classical):
        off = mat - np.diag(np.diag(mat))
        checks = [
            ("offdiagonal_nonnegative", float(max(0.0, -off.min()))),
            ("zero_column_sums", float(np.abs(mat.sum(axis=0)).max())),
        ]
        worst = max(v for _, v in checks)
        failures = tuple(name for name, v in checks if v > tol)
        return ValidationReport(not failures, worst, failures)

    fvec = functional_vector(space)
    checks = [("mass_annihilation", float(np.abs(fvec @ mat).max()))]
    for tau in probe_times:
        probe = LinearMap(space, expm(tau * mat), Role.GENERAL)
        report = validate_markov(probe, tol=max(tol, 1e-9), seed=seed)
        checks.append((f"markov_at_{tau:g}", report.worst_violation))
    worst = max(v for _, v in checks)
    failures = tuple(name for name, v in checks if v > tol)
    return ValidationReport(
        not failures, worst, failures, certified_at=tuple(float(p) for p in probe_times)
    )


def markov_map(space: StateSpace, matrix, tol: float = DEFAULT_TOL) -> LinearMap:
    """Construct a validated mass-preserving positive map or raise."""
    candidate = LinearMap(space, matrix, Role.MARKOV)
    report = validate_markov(candidate, tol=tol)
    if not report.passed:
        raise InputError(
            f"matrix fails Markov validation: {report.failures}, "
            f"worst violation {report.worst_violation:.3e}"
        )
    return candidate


def generator_map(
    space: StateSpace,
    matrix,
    tol: float = DEFAULT_TOL,
    probe_times: tuple[float, ...] = (0.1, 1.0, 10.0),
) -> LinearMap:
    """Construct a validated generator or raise."""
    candidate = LinearMap(space, matrix, Role.GENERATOR)
    report = validate_generator(candidate, tol=tol, probe_times=probe_times)
    if not report.passed:
        raise InputError(
            f"matrix fails generator validation: {report.failures}, "
            f"worst violation {report.worst_violation:.3e}"
        )
    return candidate


# ---------------------------------------------------------------------------
# Lifts and operator norms


def lift_contraction(inner_norm: str, m_inner, tol: float = DEFAULT_TOL) -> LinearMap:
    """Embed a norm contraction on the fibre as a Markov map on R (+) V."""
    if inner_norm not in _INNER_NORMS:
        raise InputError(f"inner_norm must be one of {_INNER_NORMS}")
    m_inner = np.asarray(m_inner, dtype=float)
    if m_inner.ndim != 2 or m_inner.shape[0] != m_inner.shape[1]:
        raise InputError("inner matrix must be square")
    induced = _induced_inner_norm(inner_norm, m_inner)
    if induced > 1.0 + tol:
        raise NotAContractionError(f"inner matrix has induced norm {induced:.6g} > 1")
    n = m_inner.shape[0]
    block = np.zeros((n + 1, n + 1))
    block[0, 0] = 1.0
    block[1:, 1:] = m_inner
    return LinearMap(DirectSum(n, inner_norm), block, Role.MARKOV)


def direct_sum_blocks(
    space: DirectSum, matrix, atol: float = 1e-10
) -> tuple[float, np.ndarray]:
    """Split a block map (a, v) -> (a*alpha, M v) into (alpha, M).

    Raises :class:`UnsupportedShapeError` when the coupling blocks are not
    numerically zero; sub-``atol`` noise from structured exponentials is
    discarded.
    """
    matrix = _check_matrix(space, matrix)
    coupling = max(float(np.abs(matrix[0, 1:]).max()), float(np.abs(matrix[1:, 0]).max()))
    if coupling > atol * max(1.0, float(np.abs(matrix).max())):
        raise UnsupportedShapeError(
            "matrix couples the mass coordinate and the fibre; exact handling "
            "is only available for block maps"
        )
    return float(matrix[0, 0]), matrix[1:, 1:]


@dataclass(frozen=True)
class OperatorNormEstimate:
    """Induced base-norm operator norm; ``exact=False`` marks a sampled lower bound."""

    value: float
    exact: bool
    n_samples: int | None = None
    seed: int | None = None


def operator_norm_estimate(
    space: StateSpace,
    matrix,
    seed: int = 0,
    n_samples: int = 2048,
) -> OperatorNormEstimate:
    """Induced operator norm on (X, base norm).

    Classical: max absolute column sum (exact).  DirectSum: exact for block
    maps, max(|alpha|, induced inner norm of the fibre block).  Quantum: a
    certified-sampling lower bound over pure states, which are the extreme
    points of the trace-norm unit ball.
    """
    matrix = _check_matrix(space, matrix)
    if isinstance(space, Classical):
        return OperatorNormEstimate(float(np.abs(matrix).sum(axis=0).max()), True)
    if isinstance(space, DirectSum):
        alpha, block = direct_sum_blocks(space, matrix)
        return OperatorNormEstimate(
            max(abs(alpha), _induced_inner_norm(space.inner_norm, block)), True
        )
    d = space.d
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((n_samples, d, 2))
    psi = raw[..., 0] + 1j * raw[..., 1]
    psi /= np.linalg.norm(psi, axis=1, keepdims=True)
    coords = _pure_state_coords(d, psi)
    images = coords @ matrix.T
    herms = np.einsum("nk,kij->nij", images, hermitian_basis(d))
    values = np.abs(np.linalg.eigvalsh(herms)).sum(axis=1)
    return OperatorNormEstimate(float(values.max()), False, n_samples, seed)


def operator_norm(space: StateSpace, matrix, seed: int = 0, n_samples: int = 2048) -> float:
    """Convenience scalar form of :func:`operator_norm_estimate`."""
    return operator_norm_estimate(space, matrix, seed=seed, n_samples=n_samples).value
