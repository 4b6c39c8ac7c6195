"""Target functions as finite coefficient vectors in a spectral basis.

Every function here is a finite linear combination ``sum_j c_j b_j`` of the
basis returned by :func:`mlapprox.spectral.enumerate_basis`.  Because the
basis is L2-orthonormal, norms, projection errors and distances are exact
functionals of the coefficients (Parseval), so statistical experiments can
isolate the randomness of the estimators from any discretization error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampling import RngStream, as_generator
from .spectral import SpectralBasis, parse_weight_spec

__all__ = [
    "CoefficientFunction",
    "exact_l2_error",
    "hard_instance",
    "weak_instance",
    "random_unit_ball",
    "write_coefficients_csv",
    "read_coefficients_csv",
]


@dataclass(frozen=True, eq=False)
class CoefficientFunction:
    """A function ``sum_{j<s} coeffs[j] * b_j`` over a shared basis; immutable."""

    basis: SpectralBasis
    coeffs: np.ndarray  # (s,) complex128, s <= basis.size

    def __post_init__(self) -> None:
        c = np.array(self.coeffs, dtype=complex).reshape(-1)
        if c.shape[0] > self.basis.size:
            raise ValueError(
                f"{c.shape[0]} coefficients exceed the basis size {self.basis.size}"
            )
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def __len__(self) -> int:
        return int(self.coeffs.shape[0])

    def evaluate(self, x):
        """Pointwise value(s) ``sum_j c_j b_j(x)``."""
        pts = self.basis.points(x)
        if len(self) == 0:
            vals = np.zeros(pts.shape[0], dtype=complex)
        else:
            vals = self.basis.point_values(pts, len(self)) @ self.coeffs
        return complex(vals[0]) if self.basis.is_single_point(x) else vals

    __call__ = evaluate

    def l2_norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def native_norm(self) -> float:
        """Norm in the source space: ``sqrt(sum |c_j|^2 / sigma_j^2)``."""
        if len(self) == 0:
            return 0.0
        return float(np.linalg.norm(self.coeffs / self.basis.sigmas[: len(self)]))

    def project(self, m: int) -> "CoefficientFunction":
        """Orthogonal projection onto the span of the first ``m`` basis functions."""
        if not 0 <= m <= self.basis.size:
            raise ValueError(f"projection index {m} outside 0..{self.basis.size}")
        return CoefficientFunction(self.basis, self.coeffs[:m])

    def padded(self, length: int) -> np.ndarray:
        out = np.zeros(length, dtype=complex)
        out[: len(self)] = self.coeffs
        return out

    def __add__(self, other: "CoefficientFunction") -> "CoefficientFunction":
        _same_basis(self, other)
        n = max(len(self), len(other))
        return CoefficientFunction(self.basis, self.padded(n) + other.padded(n))

    def __sub__(self, other: "CoefficientFunction") -> "CoefficientFunction":
        _same_basis(self, other)
        n = max(len(self), len(other))
        return CoefficientFunction(self.basis, self.padded(n) - other.padded(n))

    def __mul__(self, scalar) -> "CoefficientFunction":
        return CoefficientFunction(self.basis, self.coeffs * complex(scalar))

    __rmul__ = __mul__


def _same_basis(f: CoefficientFunction, g: CoefficientFunction) -> None:
    if f.basis is not g.basis:
        raise ValueError("functions must share one basis instance")


def exact_l2_error(f: CoefficientFunction, g: CoefficientFunction) -> float:
    """Exact ``||f - g||_2`` by Parseval; missing coefficients count as zero."""
    _same_basis(f, g)
    n = max(len(f), len(g))
    return float(np.linalg.norm(f.padded(n) - g.padded(n)))


def hard_instance(basis: SpectralBasis, m: int) -> CoefficientFunction:
    """Unit-norm function invisible to the first ``m`` coefficients.

    Returns ``sigma(m+1) * b_{m+1}`` (1-based count ``m``).  Any approximation
    confined to the span of the first ``m`` basis functions makes an L2 error
    of at least ``sigma(m+1)`` on it.
    """
    if not 0 <= m < basis.size:
        raise ValueError(f"need m+1 <= basis size, got m={m}, size={basis.size}")
    coeffs = np.zeros(m + 1, dtype=complex)
    coeffs[m] = basis.sigmas[m]
    return CoefficientFunction(basis, coeffs)


def weak_instance(basis: SpectralBasis, s: int) -> CoefficientFunction:
    """Function whose projection tails meet the singular values exactly.

    With coefficients ``c_k = sqrt(sigma(k)^2 - sigma(k+1)^2)`` for ``k < s``
    and ``c_s = sigma(s)`` (1-based), the telescoping sum gives
    ``||f - P_m f||_2^2 = sigma(m+1)^2`` for every ``m < s``, although for
    slowly decaying spectra the function itself may lie far outside the unit
    ball of the source space.
    """
    if not 1 <= s <= basis.size:
        raise ValueError(f"truncation {s} outside 1..{basis.size}")
    sig = basis.sigmas
    coeffs = np.empty(s, dtype=complex)
    coeffs[: s - 1] = np.sqrt(sig[: s - 1] ** 2 - sig[1:s] ** 2)
    coeffs[s - 1] = sig[s - 1]
    return CoefficientFunction(basis, coeffs)


def random_unit_ball(
    basis: SpectralBasis, s: int, rng: RngStream | np.random.Generator
) -> CoefficientFunction:
    """Random function of unit source norm supported on the first ``s`` coefficients.

    Draws a complex vector uniformly from the unit sphere in dimension ``s``
    and scales the ``j``-th coordinate by ``sigma(j)``.
    """
    if not 1 <= s <= basis.size:
        raise ValueError(f"truncation {s} outside 1..{basis.size}")
    gen = as_generator(rng)
    v = gen.standard_normal(2 * s).view(complex)
    v /= np.linalg.norm(v)
    return CoefficientFunction(basis, basis.sigmas[:s] * v)


# --- CSV import/export -------------------------------------------------------


def write_coefficients_csv(f: CoefficientFunction, path, footer: str | None = None) -> None:
    """Write ``j, re, im`` rows (1-based ``j``) with a header naming the model."""
    lines = [f"# spec={f.basis.spec.describe()}", "j,re,im"]
    for i, c in enumerate(f.coeffs):
        lines.append(f"{i + 1},{float(c.real)!r},{float(c.imag)!r}")
    if footer is not None:
        lines.append(f"# {footer}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_coefficients_csv(path, basis: SpectralBasis) -> CoefficientFunction:
    """Read a coefficient CSV back against ``basis`` (model names must agree)."""
    coeffs: list[complex] = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line == "j,re,im":
                continue
            if line.startswith("#"):
                if line.startswith("# spec="):
                    named = parse_weight_spec(line[len("# spec="):])
                    if named != basis.spec:
                        raise ValueError(
                            f"coefficient file was written for {named.describe()!r}, "
                            f"not {basis.spec.describe()!r}"
                        )
                continue
            _, re_s, im_s = line.split(",")
            coeffs.append(complex(float(re_s), float(im_s)))
    return CoefficientFunction(basis, np.asarray(coeffs, dtype=complex))
