"""Multilevel Monte Carlo estimation of leading basis coefficients.

The estimator runs through levels ``j = 1..k``.  Level ``j`` draws ``n_j``
points from the spectral measure of the first ``m_j`` basis functions,
evaluates the residual (target minus current approximation) there, and adds
the importance-weighted empirical coefficients

    g_hat[i] = (1/n_j) * sum_points  residual(X) * conj(b_i(X)) / u_{m_j}(X)

for ``i < m_j`` to the running coefficient vector (``u_m`` is the sampling
density; points where it vanishes contribute zero).  Every ``g_hat[i]`` is an
unbiased estimate of the residual's ``i``-th coefficient, so after ``k``
levels the leading ``m_k`` coefficients are estimated without bias from
``sum_j n_j`` function values in total.

Two ready-made level plans are provided: a doubling plan that spends a budget
of ``n`` values so that the number of estimated coefficients stays a fixed
fraction ``2^-ceil(2r+1)`` of the number of samples per level, and a
tolerance-driven plan that needs only a sequence of projection error bounds
``eps(m)`` instead of a norm bound on the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .functions import CoefficientFunction
from .sampling import RngStream, sample_mu_m
from .spectral import SpectralBasis

__all__ = [
    "Schedule",
    "Approximant",
    "BoundConstants",
    "bound_constants",
    "multilevel_estimate",
    "doubling_schedule",
    "approximate",
    "tolerance_schedule",
    "approximate_weak",
    "write_schedule_csv",
]


@dataclass(frozen=True)
class Schedule:
    """Per-level sample counts and coefficient counts.

    ``samples[j]`` points are drawn at level ``j`` to update the leading
    ``coeffs[j]`` coefficients.  Counts are plain Python integers, so
    tolerance-driven plans with astronomically large levels stay exact.
    """

    samples: tuple[int, ...]
    coeffs: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.samples) != len(self.coeffs):
            raise ValueError("samples and coeffs must have equal length")
        prev = 0
        for j, (n_j, m_j) in enumerate(zip(self.samples, self.coeffs), start=1):
            if n_j < 0 or m_j < 0:
                raise ValueError(f"level {j}: counts must be nonnegative")
            if m_j < prev:
                raise ValueError(f"level {j}: coefficient counts must be nondecreasing")
            if n_j == 0 and m_j != prev:
                raise ValueError(
                    f"level {j}: a level without samples may not add coefficients"
                )
            prev = m_j

    @property
    def levels(self) -> int:
        return len(self.samples)

    @property
    def final_coeffs(self) -> int:
        return self.coeffs[-1] if self.coeffs else 0

    @property
    def total_samples(self) -> int:
        return sum(self.samples)


@dataclass(frozen=True)
class Approximant:
    """Result of one estimator run: the value and its exact evaluation count."""

    value: CoefficientFunction
    evals_used: int
    levels: tuple[CoefficientFunction, ...] | None = None


@dataclass(frozen=True)
class BoundConstants:
    """Explicit constants of the doubling plan for order ``r``.

    ``level_offset = ceil(2r+1)`` — levels up to this index draw no samples;
    ``error_factor = 2^(r*ceil(2r+3)+1)`` — multiplies the singular-value
    envelope in the error bound; ``level_factor = 2^(r*(level_offset+1)+1)``
    is its dyadic-level form (``error_factor = 2^r * level_factor``);
    ``optimality_factor = 2^(r*ceil(2r+4)+3/2)`` compares the plan against
    the best possible randomized method.
    """

    order: float
    level_offset: int
    error_factor: float
    level_factor: float
    optimality_factor: float


def bound_constants(order: float) -> BoundConstants:
    if order < 0:
        raise ValueError("order must be nonnegative")
    offset = math.ceil(2 * order + 1)
    return BoundConstants(
        order=order,
        level_offset=offset,
        error_factor=2.0 ** (order * math.ceil(2 * order + 3) + 1),
        level_factor=2.0 ** (order * (offset + 1) + 1),
        optimality_factor=2.0 ** (order * math.ceil(2 * order + 4) + 1.5),
    )


def multilevel_estimate(
    f,
    basis: SpectralBasis,
    schedule: Schedule,
    rng: RngStream,
    keep_levels: bool = False,
) -> Approximant:
    """Run the multilevel estimator for ``f`` along ``schedule``.

    ``f`` is either a :class:`CoefficientFunction` over ``basis`` (the
    residual is then formed in coefficient space, which is exact and fast) or
    a black-box callable mapping an ``(n, d)`` point array to ``n`` values.
    Level ``j`` (1-based) consumes the child stream ``rng.child(j)``, so runs
    are reproducible and levels are mutually independent.

    With ``keep_levels=True`` the approximant after every level is recorded.
    """
    if schedule.final_coeffs > basis.size:
        raise ValueError(
            f"schedule needs {schedule.final_coeffs} coefficients, "
            f"basis has {basis.size}"
        )
    fast = isinstance(f, CoefficientFunction)
    if fast and f.basis is not basis:
        raise ValueError("target and estimator must share one basis instance")
    f_coeffs = f.coeffs if fast else None
    fourier = basis.has_fourier_functions

    line = basis.is_canonical_line
    coeffs = np.zeros(schedule.final_coeffs, dtype=complex)
    snapshots: list[CoefficientFunction] = []
    evals = 0
    m_prev = 0
    for j, (n_j, m_j) in enumerate(zip(schedule.samples, schedule.coeffs), start=1):
        evals += n_j
        if n_j == 0 or m_j == 0:
            if keep_levels:
                snapshots.append(CoefficientFunction(basis, coeffs[:m_j]))
            continue
        gen = rng.child(j).generator()
        points = sample_mu_m(basis, m_j, gen, size=n_j)
        width = max(m_j, f_coeffs.shape[0]) if fast else m_j
        if fast:
            delta = np.zeros(width, dtype=complex)
            delta[: f_coeffs.shape[0]] = f_coeffs
            delta[:m_prev] -= coeffs[:m_prev]
        if line:
            table = _line_powers(points[:, 0], width // 2)
            if fast:
                residual = _line_apply(table, delta)
            else:
                residual = np.asarray(f(points), dtype=complex).reshape(-1)
                if m_prev:
                    residual = residual - _line_apply(table, coeffs[:m_prev])
            update = _line_adjoint(table, residual, m_j) / n_j
        else:
            values = basis.point_values(points, width)
            if fast:
                residual = values @ delta
            else:
                residual = np.asarray(f(points), dtype=complex).reshape(-1)
                if m_prev:
                    residual = residual - values[:, :m_prev] @ coeffs[:m_prev]
            if not fourier:
                u = basis.density(m_j, points)
                residual = np.where(u > 0, residual / np.where(u > 0, u, 1.0), 0.0)
            update = values[:, :m_j].conj().T @ residual / n_j
        coeffs[:m_j] += update
        m_prev = m_j
        if keep_levels:
            snapshots.append(CoefficientFunction(basis, coeffs[:m_j]))
    return Approximant(
        value=CoefficientFunction(basis, coeffs),
        evals_used=evals,
        levels=tuple(snapshots) if keep_levels else None,
    )


def _line_powers(x: np.ndarray, mx: int) -> np.ndarray:
    """Power table ``T[i, p] = exp(2*pi*i*x_i)**p`` for ``p = 0..mx``."""
    table = np.empty((x.shape[0], mx + 1), dtype=complex)
    table[:, 0] = 1.0
    if mx:
        table[:, 1:] = np.exp((2j * np.pi) * x)[:, None]
        np.cumprod(table[:, 1:], axis=1, out=table[:, 1:])
    return table


def _line_apply(table: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Values ``sum_j delta[j] * b_j(x)`` on the canonical frequency line.

    Coefficient ``j`` sits at frequency ``+j/2`` (even ``j``) or ``-(j+1)/2``
    (odd ``j``); negative frequencies are conjugate power lookups.
    """
    mx = table.shape[1] - 1
    pos = np.zeros(mx + 1, dtype=complex)
    neg = np.zeros(mx + 1, dtype=complex)
    pos[: (delta.shape[0] + 1) // 2] = delta[0::2]
    neg[1 : delta.shape[0] // 2 + 1] = delta[1::2]
    return table @ pos + np.conj(table @ np.conj(neg))


def _line_adjoint(table: np.ndarray, values: np.ndarray, m: int) -> np.ndarray:
    """Empirical coefficients ``sum_i conj(b_j(x_i)) * values[i]`` for ``j < m``."""
    width = m // 2 + 1
    sums_pos = np.conj(table[:, :width].T @ np.conj(values))
    sums_neg = table[:, :width].T @ values
    out = np.empty(m, dtype=complex)
    out[0::2] = sums_pos[: (m + 1) // 2]
    out[1::2] = sums_neg[1 : m // 2 + 1]
    return out


def doubling_schedule(n: int, order: float, basis_size: int) -> Schedule:
    """Level plan spending fewer than ``n`` function values.

    With ``offset = ceil(2*order+1)`` and ``k = floor(log2 n)``, level ``j``
    draws ``2^(j-1)`` samples for ``j > offset`` (none before) and estimates
    ``min(2^(j-1-offset), basis_size)`` coefficients, so the sample total is
    ``2^k - 2^offset < n`` once any level is active.
    """
    if n < 1:
        raise ValueError("budget n must be at least 1")
    if order < 0:
        raise ValueError("order must be nonnegative")
    offset = math.ceil(2 * order + 1)
    k = int(n).bit_length() - 1
    samples = tuple(0 if j <= offset else 2 ** (j - 1) for j in range(1, k + 1))
    coeffs = tuple(
        0 if j <= offset else min(2 ** (j - 1 - offset), basis_size)
        for j in range(1, k + 1)
    )
    return Schedule(samples, coeffs)


def approximate(
    f,
    basis: SpectralBasis,
    n: int,
    order: float,
    rng: RngStream,
    keep_levels: bool = False,
) -> Approximant:
    """Multilevel approximation of ``f`` from fewer than ``n`` point values."""
    schedule = doubling_schedule(n, order, basis.size)
    return multilevel_estimate(f, basis, schedule, rng, keep_levels=keep_levels)


def _epsilon_callable(epsilon) -> Callable[[int], float]:
    if isinstance(epsilon, Mapping):
        table = dict(epsilon)
        return lambda j: table[j]
    if isinstance(epsilon, (list, tuple, np.ndarray)):
        seq = list(epsilon)
        return lambda j: seq[j]
    return epsilon


def tolerance_schedule(epsilon, m: int) -> Schedule:
    """Level plan driven by projection error tolerances ``epsilon``.

    ``epsilon`` maps nonnegative integers to positive reals (callable,
    mapping or sequence; the value at 0 is required).  For ``m = 2^k`` the
    plan has ``k+1`` levels with ``m_j = 2^(j-1)`` and

        n_j = 2^j * ceil( epsilon(floor(2^(j-2))) / epsilon(2^(j-1)) ),

    which keeps the total below ``4*m*max_j ceil(eps(floor(2^(j-1)))/eps(2^j))``.
    """
    if m < 1 or (m & (m - 1)) != 0:
        raise ValueError(f"m must be a power of two, got {m}")
    eps = _epsilon_callable(epsilon)
    k = int(m).bit_length() - 1
    samples, coeffs = [], []
    for j in range(1, k + 2):
        lo = 2 ** (j - 2) if j >= 2 else 0  # floor(2^(j-2))
        num, den = float(eps(lo)), float(eps(2 ** (j - 1)))
        if num <= 0 or den <= 0:
            raise ValueError("epsilon values must be positive")
        samples.append(2**j * math.ceil(num / den))
        coeffs.append(2 ** (j - 1))
    return Schedule(tuple(samples), tuple(coeffs))


def approximate_weak(
    f,
    basis: SpectralBasis,
    epsilon,
    m: int,
    rng: RngStream,
    keep_levels: bool = False,
) -> Approximant:
    """Approximation under projection-error tolerances only.

    If ``||f - P_j f||_2^2 <= epsilon(j)`` for all ``j``, the output lies in
    the span of the first ``m`` basis functions and its mean squared L2 error
    is at most ``2 * epsilon(m)``.
    """
    if m > basis.size:
        raise ValueError(f"m {m} exceeds the basis size {basis.size}")
    schedule = tolerance_schedule(epsilon, m)
    return multilevel_estimate(f, basis, schedule, rng, keep_levels=keep_levels)


def write_schedule_csv(schedule: Schedule, path) -> None:
    """Write ``j, n_j, m_j`` rows (1-based ``j``) to ``path``."""
    lines = ["j,n_j,m_j"]
    for j, (n_j, m_j) in enumerate(zip(schedule.samples, schedule.coeffs), start=1):
        lines.append(f"{j},{n_j},{m_j}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
