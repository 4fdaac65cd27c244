"""Adaptive composite Simpson quadrature for scalar- and matrix-valued integrands."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class QuadratureSettings:
    """Accuracy knobs for the adaptive integrator.

    ``tolerance`` is the absolute target for the whole interval and is halved
    on each bisection.  ``relative`` guards against stalls on large-magnitude
    integrands by also accepting panels whose error is tiny relative to the
    panel value.  ``max_intervals`` caps the work; when it is hit the panel is
    accepted anyway and its error contributes to the returned estimate.
    """

    tolerance: float = 1e-8
    relative: float = 1e-9
    max_intervals: int = 2**20


DEFAULT_QUADRATURE = QuadratureSettings()


def adaptive_simpson(
    f: Callable[[float], np.ndarray | float],
    a: float,
    b: float,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> tuple[np.ndarray, float]:
    """Integrate ``f`` over ``[a, b]``, returning ``(integral, error_estimate)``.

    ``f`` may return floats or ndarrays of any fixed shape; the error metric
    for array integrands is the max-abs entry.  Classic interval-halving
    Simpson with Richardson correction of accepted panels.
    """
    if not b > a:
        raise InputError(f"integration interval [{a}, {b}] is empty")

    def ev(s: float) -> np.ndarray:
        return np.asarray(f(s), dtype=float)

    fa, fb = ev(a), ev(b)
    mid = 0.5 * (a + b)
    fm = ev(mid)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    total = np.zeros_like(whole)
    err_total = 0.0
    n_intervals = 1
    stack = [(a, fa, mid, fm, b, fb, whole, float(settings.tolerance))]
    while stack:
        a0, f0, m0, fmid, b0, f1, s_whole, tol = stack.pop()
        lm = 0.5 * (a0 + m0)
        rm = 0.5 * (m0 + b0)
        flm, frm = ev(lm), ev(rm)
        s_left = (m0 - a0) / 6.0 * (f0 + 4.0 * flm + fmid)
        s_right = (b0 - m0) / 6.0 * (fmid + 4.0 * frm + f1)
        delta = s_left + s_right - s_whole
        err = float(np.max(np.abs(delta))) / 15.0
        scale = float(np.max(np.abs(s_left + s_right)))
        if (
            err <= tol + settings.relative * scale
            or n_intervals >= settings.max_intervals
        ):
            total = total + s_left + s_right + delta / 15.0
            err_total += err
        else:
            n_intervals += 2
            stack.append((a0, f0, lm, flm, m0, fmid, s_left, 0.5 * tol))
            stack.append((m0, fmid, rm, frm, b0, f1, s_right, 0.5 * tol))
    return total, err_total


def integral_with_endpoint_singularity(
    f: Callable[[float], np.ndarray | float],
    t: float,
    alpha: float,
    settings: QuadratureSettings = DEFAULT_QUADRATURE,
) -> tuple[np.ndarray, float]:
    """Integrate ``f`` over ``[0, t]`` where ``f(s) ~ s**alpha`` near 0.

    For ``alpha >= 0`` this is plain adaptive Simpson.  For integrable
    singularities (``-1 < alpha < 0``) the substitution ``s = t * v**p`` with
    ``p = 2 / (1 + alpha)`` makes the transformed integrand vanish like ``v``
    at the origin, so the closed Simpson rule applies with the left endpoint
    pinned to zero and no singular evaluation ever happens.
    """
    if t <= 0:
        raise InputError("upper limit must be positive")
    if alpha <= -1:
        raise InputError(f"endpoint exponent {alpha} is not integrable")
    if alpha >= 0:
        return adaptive_simpson(f, 0.0, t, settings)

    p = 2.0 / (1.0 + alpha)
    shape = np.zeros_like(np.asarray(f(t), dtype=float))

    def g(v: float) -> np.ndarray:
        if v <= 0.0:
            return shape
        s = t * v**p
        return (t * p * v ** (p - 1.0)) * np.asarray(f(s), dtype=float)

    return adaptive_simpson(g, 0.0, 1.0, settings)
