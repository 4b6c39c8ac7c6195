"""Seeded random streams and samplers for the base and spectral measures.

All randomness flows through :class:`RngStream`, a value object naming one
deterministic sequence by a ``(seed, stream)`` pair.  Child streams are
derived by a fixed 64-bit mixing rule, so levels, replications and roles can
each own an independent stream while the whole experiment stays reproducible
from a single seed; the derivation rule and reference outputs are pinned by
the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "RngStream",
    "derive_stream",
    "as_generator",
    "sample_mu",
    "sample_mu_m",
    "rejection_sample",
]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _splitmix64(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_stream(stream: int, index: int) -> int:
    """Child stream id: ``splitmix64(stream * GOLDEN + splitmix64(index))``.

    ``GOLDEN`` is ``0x9E3779B97F4A7C15``; all arithmetic is modulo ``2**64``.
    """
    return _splitmix64((stream * _GOLDEN + _splitmix64(index & _MASK64)) & _MASK64)


@dataclass(frozen=True)
class RngStream:
    """Name of a reproducible random stream.

    Equal ``(seed, stream)`` pairs produce bit-identical sequences; distinct
    stream ids give statistically independent sequences.  The generator is
    PCG64 keyed by ``SeedSequence((seed, stream))``.  A stream is meant to be
    consumed by exactly one logical task; derive children for subtasks.
    """

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        return np.random.Generator(
            np.random.PCG64(
                np.random.SeedSequence((self.seed & _MASK64, self.stream & _MASK64))
            )
        )

    def child(self, index: int) -> "RngStream":
        """The ``index``-th child stream (see :func:`derive_stream`)."""
        return RngStream(self.seed, derive_stream(self.stream, index))


def as_generator(rng: RngStream | np.random.Generator) -> np.random.Generator:
    """Accept either a stream name or a live generator."""
    return rng.generator() if isinstance(rng, RngStream) else rng


def sample_mu(d: int, rng: RngStream | np.random.Generator, size: int | None = None):
    """Uniform point(s) on ``[0,1)^d``, the base measure of the torus."""
    if d < 1:
        raise ValueError("dimension must be at least 1")
    pts = as_generator(rng).random((1 if size is None else size, d))
    return pts[0] if size is None else pts


def sample_mu_m(basis, m: int, rng, size: int | None = None):
    """Point(s) distributed with density ``basis.density(m, .)`` against the base measure.

    For bases of plain exponentials the density is identically 1 and the draw
    short-circuits to a uniform sample.  Otherwise a mixture draw picks one of
    the first ``m`` basis functions uniformly and then samples each coordinate
    from the squared modulus of its univariate factor by rejection.
    """
    if not 1 <= m <= basis.size:
        raise IndexError(f"m {m} outside 1..{basis.size}")
    gen = as_generator(rng)
    n = 1 if size is None else size
    if basis.has_fourier_functions:
        pts = gen.random((n, basis.dimension))
        return pts[0] if size is None else pts

    idx = gen.integers(0, m, size=n)
    pts = np.empty((n, basis.dimension))
    coord_fns = basis._coordinate_functions()
    for c, fns in enumerate(coord_fns):
        if fns is None:
            pts[:, c] = gen.random(n)
            continue
        bounds = _coordinate_bounds(basis, c)
        kvals = basis.frequencies[idx, c]
        findex = np.array([_explicit_index(int(k)) for k in kvals])
        for i in np.unique(findex):
            mask = findex == i
            fn = fns[i]
            pts[mask, c] = _rejection_fill(
                lambda x: np.abs(fn(x)) ** 2, bounds[i], int(mask.sum()), gen, 1
            ).reshape(-1)
    return pts[0] if size is None else pts


def _explicit_index(k: int) -> int:
    return 2 * k if k > 0 else (-2 * k - 1 if k < 0 else 0)


def _coordinate_bounds(basis, c: int):
    spec = basis.spec
    factor = spec.factors[c] if spec.kind == "tensor" else spec
    if factor.density_bounds is None:
        raise ValueError("custom basis functions need density_bounds for sampling")
    return factor.density_bounds


def rejection_sample(
    density: Callable,
    bound: float,
    d: int,
    rng: RngStream | np.random.Generator,
    size: int | None = None,
):
    """Sample from a probability density on ``[0,1)^d`` dominated by ``bound``.

    Proposes uniform points and accepts each with probability
    ``density(x) / bound``; for a normalized density the expected number of
    proposals per accepted point is ``bound``.
    """
    if bound <= 0:
        raise ValueError("rejection bound must be positive")
    pts = _rejection_fill(density, bound, 1 if size is None else size, as_generator(rng), d)
    return pts[0] if size is None else pts


def _rejection_fill(density, bound, count, gen, d):
    out = np.empty((count, d))
    filled = 0
    while filled < count:
        need = count - filled
        proposal = gen.random((need, d))
        accept = gen.random(need) * bound <= np.asarray(
            density(proposal if d > 1 else proposal[:, 0])
        ).reshape(-1)
        taken = proposal[accept]
        out[filled : filled + taken.shape[0]] = taken
        filled += taken.shape[0]
    return out
