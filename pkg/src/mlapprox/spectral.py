"""Lattice weights, singular values and Fourier-type bases on the torus.

A spectral model pairs an ordered sequence of singular values with the
orthonormal family of functions realizing them.  For the periodic Sobolev
spaces the family is the Fourier system ``exp(2*pi*i*<k, x>)`` on ``[0,1)^d``
and the singular value attached to frequency ``k`` is the reciprocal of a
lattice weight, the norm of the (L2-normalized) exponential in the smoothness
space:

* mixed smoothness of integer order ``r``::

      weight(k)^2 = prod_j  sum_{a=0..r} (c*k_j)^(2a)

* isotropic smoothness of integer order ``r``::

      weight(k)^2 = sum_{|alpha|_1 <= r}  prod_j (c*k_j)^(2*alpha_j)

with ``c = 2*pi`` when the weight carries the angular derivative factors
(``angular=True``, the default) and ``c = 1`` otherwise.  Tensor products
multiply univariate weights coordinate by coordinate, and an explicit model
takes its singular values verbatim from a user-supplied nonincreasing
sequence (attached to the frequency line ``0, -1, 1, -2, 2, ...``).

Enumerating the lattice in order of increasing weight yields the singular
values in nonincreasing order.  Ties are broken by ``|k|_1`` and then by
plain lexicographic comparison of the integer vectors, so negative entries
precede positive ones; the resulting ordering is deterministic and the first
``N`` entries never change when ``N`` grows.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

MIXED = "mixed"
ISOTROPIC = "isotropic"
TENSOR = "tensor"
EXPLICIT = "explicit"

_TWO_PI = 2.0 * math.pi

__all__ = [
    "WeightSpec",
    "SpectralBasis",
    "mixed_sobolev",
    "isotropic_sobolev",
    "tensor_product",
    "explicit_sigma",
    "weight",
    "enumerate_basis",
    "preasymptotic_exponent",
    "parse_weight_spec",
    "write_basis_csv",
]


@dataclass(frozen=True)
class WeightSpec:
    """Description of a spectral model.

    ``kind`` is one of ``mixed``, ``isotropic``, ``tensor`` or ``explicit``.
    Sobolev kinds use ``r`` (nonnegative integer order), ``d`` and ``angular``;
    a tensor product lists univariate ``factors``; an explicit model carries
    the ``sigmas`` sequence and, optionally, custom basis functions with
    bounds on their squared modulus and a table of their integrals.
    """

    kind: str
    r: int = 0
    d: int = 1
    angular: bool = True
    factors: tuple["WeightSpec", ...] = ()
    sigmas: tuple[float, ...] = ()
    functions: tuple[Callable, ...] | None = None
    density_bounds: tuple[float, ...] | None = None
    integrals: tuple[complex, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind in (MIXED, ISOTROPIC):
            if not (isinstance(self.r, int) and self.r >= 0):
                raise ValueError("smoothness order r must be a nonnegative integer")
            if self.d < 1:
                raise ValueError("dimension d must be at least 1")
        elif self.kind == TENSOR:
            if not self.factors:
                raise ValueError("tensor product needs at least one factor")
            for f in self.factors:
                if f.kind == TENSOR:
                    raise ValueError("tensor factors must be univariate, not nested")
                if f.d != 1:
                    raise ValueError("tensor factors must be univariate")
            object.__setattr__(self, "d", len(self.factors))
        elif self.kind == EXPLICIT:
            s = np.asarray(self.sigmas, dtype=float)
            if s.size == 0:
                raise ValueError("explicit model needs a nonempty sigma sequence")
            if np.any(s <= 0):
                raise ValueError("explicit sigmas must be positive")
            if np.any(np.diff(s) > 0):
                raise ValueError("explicit sigmas must be nonincreasing")
            object.__setattr__(self, "sigmas", tuple(float(v) for v in s))
            object.__setattr__(self, "d", 1)
            if self.functions is not None and self.density_bounds is None:
                raise ValueError(
                    "custom basis functions need density_bounds (sup of |b_j|^2)"
                )
        else:
            raise ValueError(f"unknown weight kind {self.kind!r}")

    def describe(self) -> str:
        """Compact, parseable string form (inverse of :func:`parse_weight_spec`)."""
        if self.kind in (MIXED, ISOTROPIC):
            return f"{self.kind}:r={self.r},d={self.d},angular={int(self.angular)}"
        if self.kind == TENSOR:
            return "tensor:" + "|".join(f"({f.describe()})" for f in self.factors)
        return "explicit:" + ",".join(repr(v) for v in self.sigmas)


def mixed_sobolev(r: int, d: int, angular: bool = True) -> WeightSpec:
    """Dominating-mixed smoothness of order ``r`` on the ``d``-torus."""
    return WeightSpec(MIXED, r=r, d=d, angular=angular)


def isotropic_sobolev(r: int, d: int, angular: bool = True) -> WeightSpec:
    """Isotropic smoothness of order ``r`` on the ``d``-torus."""
    return WeightSpec(ISOTROPIC, r=r, d=d, angular=angular)


def tensor_product(factors: Sequence[WeightSpec]) -> WeightSpec:
    """Tensor product of univariate models, one factor per coordinate."""
    return WeightSpec(TENSOR, factors=tuple(factors))


def explicit_sigma(
    sigmas: Sequence[float],
    functions: Sequence[Callable] | None = None,
    density_bounds: Sequence[float] | None = None,
    integrals: Sequence[complex] | None = None,
) -> WeightSpec:
    """Model with singular values given verbatim.

    Without ``functions`` the basis evaluates as the univariate Fourier
    system in the canonical frequency order ``0, -1, 1, -2, 2, ...``.  Custom
    ``functions`` must be vectorized callables, orthonormal in L2 of the unit
    interval, with ``density_bounds[j] >= sup |functions[j]|^2``; their
    integrals against Lebesgue measure go into ``integrals``.
    """
    return WeightSpec(
        EXPLICIT,
        sigmas=tuple(float(v) for v in sigmas),
        functions=None if functions is None else tuple(functions),
        density_bounds=None if density_bounds is None else tuple(density_bounds),
        integrals=None if integrals is None else tuple(complex(v) for v in integrals),
    )


def preasymptotic_exponent(r: float, d: int) -> float:
    """Exponent ``r / (2 + ln d)`` governing moderate-sample error decay."""
    if r <= 0:
        raise ValueError("order r must be positive")
    if not (isinstance(d, (int, np.integer)) and d >= 1):
        raise ValueError("dimension d must be a positive integer")
    return r / (2.0 + math.log(d))


# --- weights -----------------------------------------------------------------


def _canonical_index(k: int) -> int:
    # frequency line 0, -1, 1, -2, 2, ... mapped to 0, 1, 2, 3, 4, ...
    if k == 0:
        return 0
    return 2 * k if k > 0 else -2 * k - 1


def _canonical_frequency(i: int) -> int:
    return (i + 1) // 2 * (-1 if i % 2 else 1) if i else 0


def _mixed_factor(kj: int, r: int, c: float) -> float:
    y = (c * kj) ** 2
    total, term = 1.0, 1.0
    for _ in range(r):
        term *= y
        total += term
    return total


def _isotropic_sq(k: tuple[int, ...], r: int, c: float) -> float:
    # h[t] accumulates the weight mass of multi-indices with |alpha|_1 = t.
    h = [0.0] * (r + 1)
    h[0] = 1.0
    for kj in k:
        y = (c * kj) ** 2
        new = [0.0] * (r + 1)
        for t in range(r + 1):
            term, pw = 0.0, 1.0
            for a in range(t + 1):
                term += pw * h[t - a]
                pw *= y
            new[t] = term
        h = new
    return sum(h)


def _weight(spec: WeightSpec, k: tuple[int, ...], oob_inf: bool = False) -> float:
    if spec.kind == MIXED:
        c = _TWO_PI if spec.angular else 1.0
        sq = 1.0
        for kj in k:
            sq *= _mixed_factor(kj, spec.r, c)
        return math.sqrt(sq)
    if spec.kind == ISOTROPIC:
        c = _TWO_PI if spec.angular else 1.0
        return math.sqrt(_isotropic_sq(k, spec.r, c))
    if spec.kind == TENSOR:
        w = 1.0
        for factor, kj in zip(spec.factors, k):
            w *= _weight(factor, (kj,), oob_inf=oob_inf)
        return w
    # explicit: weight of the j-th canonical frequency is 1/sigma(j)
    idx = _canonical_index(k[0])
    if idx >= len(spec.sigmas):
        if oob_inf:
            return math.inf
        raise ValueError(
            f"frequency {k[0]} lies outside the explicit sigma table "
            f"of length {len(spec.sigmas)}"
        )
    return 1.0 / spec.sigmas[idx]


def weight(spec: WeightSpec, k: Sequence[int]) -> float:
    """Lattice weight of frequency ``k``; the attached singular value is ``1/weight``."""
    kt = tuple(int(v) for v in np.asarray(k, dtype=np.int64).reshape(-1))
    if len(kt) != spec.d:
        raise ValueError(f"frequency has length {len(kt)}, expected {spec.d}")
    return _weight(spec, kt)


# --- enumeration -------------------------------------------------------------


def _sort_key(spec: WeightSpec, k: tuple[int, ...]):
    return (_weight(spec, k, oob_inf=True), sum(abs(v) for v in k), k)


def enumerate_basis(spec: WeightSpec, size: int) -> "SpectralBasis":
    """Materialize the ``size`` smallest-weight frequencies with their singular values.

    The lattice is explored best-first from the origin, stepping one unit
    outward in a single coordinate at a time; the weight never decreases
    along such a step, so the heap pops frequencies in exactly the global
    order (weight, |k|_1, lexicographic).  Explicit models are capped at the
    length of their sigma table.
    """
    if size < 1:
        raise ValueError("basis size must be at least 1")
    if spec.kind == EXPLICIT:
        n = min(size, len(spec.sigmas))
        freqs = np.array([[_canonical_frequency(i)] for i in range(n)], dtype=np.int64)
        return _make_basis(spec, freqs, np.asarray(spec.sigmas[:n], dtype=float))

    d = spec.d
    start = (0,) * d
    heap = [(*_sort_key(spec, start),)]
    seen = {start}
    freqs: list[tuple[int, ...]] = []
    sigmas: list[float] = []
    while heap and len(freqs) < size:
        w, _, k = heapq.heappop(heap)
        if not math.isfinite(w):
            break  # finite explicit factors exhausted
        freqs.append(k)
        sigmas.append(1.0 / w)
        for j in range(d):
            for step in ((1,) if k[j] > 0 else (-1,) if k[j] < 0 else (1, -1)):
                nxt = k[:j] + (k[j] + step,) + (k[j + 1:])
                if nxt not in seen:
                    seen.add(nxt)
                    heapq.heappush(heap, (*_sort_key(spec, nxt),))
    return _make_basis(
        spec, np.asarray(freqs, dtype=np.int64), np.asarray(sigmas, dtype=float)
    )


# --- materialized basis ------------------------------------------------------


def _freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def _make_basis(spec, freqs, sigmas) -> "SpectralBasis":
    return SpectralBasis(spec, _freeze(freqs), _freeze(sigmas))


@dataclass(frozen=True, eq=False)
class SpectralBasis:
    """Ordered singular value decomposition of an embedding, truncated to ``size``.

    ``frequencies[j]`` is the lattice frequency of the ``j``-th basis function
    (0-based, weight-sorted) and ``sigmas[j]`` its singular value.  Instances
    are immutable and safe to share across threads.
    """

    spec: WeightSpec
    frequencies: np.ndarray  # (size, d) int64
    sigmas: np.ndarray  # (size,) float64, nonincreasing

    @property
    def size(self) -> int:
        return int(self.sigmas.shape[0])

    @property
    def dimension(self) -> int:
        return int(self.frequencies.shape[1])

    def _coordinate_functions(self) -> list[tuple[Callable, ...] | None]:
        # per coordinate: None means Fourier exponentials, else custom callables
        spec = self.spec
        if spec.kind == TENSOR:
            return [f.functions if f.kind == EXPLICIT else None for f in spec.factors]
        if spec.kind == EXPLICIT:
            return [spec.functions]
        return [None] * spec.d

    @cached_property
    def has_fourier_functions(self) -> bool:
        """True when every basis function is a plain exponential (unit modulus)."""
        return all(fns is None for fns in self._coordinate_functions())

    @cached_property
    def is_canonical_line(self) -> bool:
        """True for univariate exponential bases in the order ``0, -1, 1, -2, 2, ...``.

        Estimators exploit this layout: powers of a single ``exp(2*pi*i*x)``
        cover the whole basis.  It holds for every univariate Sobolev model
        and for explicit models without custom functions.
        """
        if self.dimension != 1 or not self.has_fourier_functions:
            return False
        ks = self.frequencies[:, 0]
        expect = np.array([_canonical_frequency(i) for i in range(self.size)])
        return bool(np.array_equal(ks, expect))

    def points(self, x) -> np.ndarray:
        """Coerce ``x`` to an ``(n, d)`` point array on the torus."""
        pts = np.asarray(x, dtype=float)
        d = self.dimension
        if pts.ndim == 0 and d == 1:
            pts = pts.reshape(1, 1)
        elif pts.ndim == 1:
            pts = pts.reshape(-1, 1) if d == 1 else pts.reshape(1, -1)
        if pts.ndim != 2 or pts.shape[1] != d:
            raise ValueError(f"points must have {d} coordinates")
        return pts

    def is_single_point(self, x) -> bool:
        """True when ``x`` designates one point rather than a batch."""
        ndim = np.asarray(x).ndim
        return ndim == 0 if self.dimension == 1 else ndim <= 1

    def point_values(self, x, count: int | None = None) -> np.ndarray:
        """Values of the first ``count`` basis functions at points ``x``: ``(n, count)``."""
        pts = self.points(x)
        count = self.size if count is None else count
        if not 0 <= count <= self.size:
            raise IndexError(f"count {count} outside 0..{self.size}")
        out: np.ndarray | None = None
        for j, fns in enumerate(self._coordinate_functions()):
            kcol = self.frequencies[:count, j]
            col = (
                _fourier_columns(kcol, pts[:, j])
                if fns is None
                else _custom_columns(fns, kcol, pts[:, j])
            )
            out = col if out is None else out * col
        if out is None:  # count == 0
            out = np.empty((pts.shape[0], 0), dtype=complex)
        return out

    def evaluate(self, j: int, x):
        """Value of the ``j``-th (0-based) basis function at point(s) ``x``."""
        if not 0 <= j < self.size:
            raise IndexError(f"basis index {j} outside 0..{self.size - 1}")
        pts = self.points(x)
        val = np.ones(pts.shape[0], dtype=complex)
        for c, fns in enumerate(self._coordinate_functions()):
            k = int(self.frequencies[j, c])
            if fns is None:
                val *= np.exp(2j * np.pi * k * pts[:, c])
            else:
                val *= np.asarray(fns[_canonical_index(k)](pts[:, c]), dtype=complex)
        return complex(val[0]) if self.is_single_point(x) else val

    def density(self, m: int, x):
        """Sampling density ``(1/m) * sum_{j<m} |b_j|^2`` against the base measure.

        Identically 1 for bases of plain exponentials.
        """
        if not 1 <= m <= self.size:
            raise IndexError(f"m {m} outside 1..{self.size}")
        pts = self.points(x)
        if self.has_fourier_functions:
            vals = np.ones(pts.shape[0])
        else:
            vals = np.mean(np.abs(self.point_values(pts, m)) ** 2, axis=1)
        return float(vals[0]) if self.is_single_point(x) else vals


def _fourier_columns(kcol: np.ndarray, xcol: np.ndarray) -> np.ndarray:
    """Columns ``exp(2*pi*i*k*x)`` for integer frequencies ``kcol`` at points ``xcol``.

    Uses a cumulative power table of ``z = exp(2*pi*i*x)`` (so ``z^{-k}`` is a
    conjugate lookup) unless the frequencies are sparse and large, in which
    case direct exponentials are cheaper.
    """
    n, s = xcol.shape[0], kcol.shape[0]
    if s == 0:
        return np.empty((n, 0), dtype=complex)
    mx = int(np.max(np.abs(kcol)))
    if mx + 1 > 4 * max(s, 16):
        return np.exp((2j * np.pi) * np.outer(xcol, kcol))
    table = np.empty((n, mx + 1), dtype=complex)
    table[:, 0] = 1.0
    if mx:
        table[:, 1:] = np.exp((2j * np.pi) * xcol)[:, None]
        np.cumprod(table[:, 1:], axis=1, out=table[:, 1:])
    cols = table[:, np.abs(kcol)]
    neg = kcol < 0
    if neg.any():
        cols[:, neg] = np.conj(cols[:, neg])
    return cols


def _custom_columns(fns, kcol: np.ndarray, xcol: np.ndarray) -> np.ndarray:
    idx = np.array([_canonical_index(int(k)) for k in kcol])
    cols = np.empty((xcol.shape[0], kcol.shape[0]), dtype=complex)
    for i in np.unique(idx):
        cols[:, idx == i] = np.asarray(fns[i](xcol), dtype=complex)[:, None]
    return cols


# --- serialization -----------------------------------------------------------


def parse_weight_spec(text: str) -> WeightSpec:
    """Parse the compact string form produced by :meth:`WeightSpec.describe`.

    Examples: ``mixed:r=1,d=2``, ``isotropic:r=2,d=3,angular=0``,
    ``explicit:1,0.5,0.25``, ``tensor:(mixed:r=1,d=1)|(explicit:1,0.5)``.
    """
    text = text.strip()
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    if kind in (MIXED, ISOTROPIC, "iso"):
        kind = ISOTROPIC if kind.startswith("iso") else MIXED
        params = {"angular": "1"}
        for item in filter(None, (p.strip() for p in rest.split(","))):
            key, _, val = item.partition("=")
            params[key.strip()] = val.strip()
        try:
            return WeightSpec(
                kind,
                r=int(params["r"]),
                d=int(params["d"]),
                angular=params["angular"] not in ("0", "false", "False"),
            )
        except KeyError as e:
            raise ValueError(f"weight spec {text!r} is missing {e.args[0]!r}") from None
    if kind == EXPLICIT:
        return explicit_sigma([float(v) for v in rest.split(",") if v.strip()])
    if kind == TENSOR:
        depth, start, parts = 0, None, []
        for i, ch in enumerate(rest):
            if ch == "(":
                if depth == 0:
                    start = i + 1
                depth += 1
            elif ch == ")":
                depth -= 1
                if depth == 0:
                    parts.append(rest[start:i])
        if depth != 0 or not parts:
            raise ValueError(f"malformed tensor spec {text!r}")
        return tensor_product([parse_weight_spec(p) for p in parts])
    raise ValueError(f"unknown weight spec {text!r}")


def write_basis_csv(basis: SpectralBasis, path) -> None:
    """Write ``j, k_1..k_d, sigma`` rows (1-based ``j``) to ``path``."""
    d = basis.dimension
    lines = ["j," + ",".join(f"k_{c + 1}" for c in range(d)) + ",sigma"]
    for i in range(basis.size):
        ks = ",".join(str(int(v)) for v in basis.frequencies[i])
        lines.append(f"{i + 1},{ks},{float(basis.sigmas[i])!r}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
