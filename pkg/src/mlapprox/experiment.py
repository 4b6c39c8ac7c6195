"""Replicated error estimation, convergence studies and CSV emission.

Replication ``i`` of an experiment with seed ``s`` runs on the stream
``RngStream(s).child(i)``; target functions that need randomness are drawn
from the reserved stream ``RngStream(s).child(-1)``.  Aggregation sums in
replication order, so results are byte-identical regardless of the number of
worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .functions import (
    CoefficientFunction,
    exact_l2_error,
    hard_instance,
    random_unit_ball,
    read_coefficients_csv,
    weak_instance,
)
from .integration import (
    direct_simulation,
    exact_integral,
    integration_bound,
    variance_reduced_integral,
)
from .multilevel import (
    approximate,
    approximate_weak,
    bound_constants,
    doubling_schedule,
    tolerance_schedule,
)
from .sampling import RngStream
from .spectral import WeightSpec, enumerate_basis, parse_weight_spec

__all__ = [
    "ExperimentConfig",
    "RunRecord",
    "estimate_mse",
    "estimate_integral_mse",
    "analytic_single_level_mse",
    "run_convergence",
    "write_records_csv",
    "read_config_file",
    "config_from_mapping",
    "TARGET_STREAM_INDEX",
]

TARGET_STREAM_INDEX = -1

ALGORITHMS = ("a_n_r", "q_m", "q_2n_r", "direct_simulation")
TARGETS = ("hard_instance", "weak_instance", "random_unit_ball")

CSV_HEADER = "n,R,mse_mean,mse_stderr,rmse,sigma_next,bound,evals_used"


def _replicate(one, R: int, threads: int) -> np.ndarray:
    errors = np.empty(R)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for i, err in zip(range(R), pool.map(one, range(R))):
                errors[i] = err
    else:
        for i in range(R):
            errors[i] = one(i)
    return errors


def _mean_stderr(errors: np.ndarray) -> tuple[float, float]:
    return float(errors.mean()), float(errors.std(ddof=1) / math.sqrt(len(errors)))


def estimate_mse(f, algorithm, R: int, seed: int, threads: int = 1):
    """Monte Carlo estimate of the mean squared L2 error of ``algorithm`` on ``f``.

    ``algorithm(f, rng)`` must return an object with a ``value`` coefficient
    function.  Returns ``(mean, stderr)`` of ``R`` independent squared errors,
    with ``stderr`` the sample standard deviation over ``sqrt(R)``.
    """
    if R < 2:
        raise ValueError("R must be at least 2")
    root = RngStream(seed)

    def one(i: int) -> float:
        return exact_l2_error(f, algorithm(f, root.child(i)).value) ** 2

    return _mean_stderr(_replicate(one, R, threads))


def estimate_integral_mse(f, algorithm, exact: complex, R: int, seed: int, threads: int = 1):
    """Like :func:`estimate_mse` for integral estimates, against the exact value."""
    if R < 2:
        raise ValueError("R must be at least 2")
    root = RngStream(seed)

    def one(i: int) -> float:
        return abs(exact - algorithm(f, root.child(i)).value) ** 2

    return _mean_stderr(_replicate(one, R, threads))


def analytic_single_level_mse(f: CoefficientFunction, m: int, n: int) -> float:
    """Exact mean squared error of a single level estimating ``m`` coefficients.

    For unit-modulus basis functions and uniform sampling the variance of each
    empirical coefficient is ``(||f||^2 - |c_j|^2) / n``, so

        E ||f - M f||_2^2
            = sum_{j<m} (||f||_2^2 - |c_j|^2)/n + sum_{j>=m} |c_j|^2 .
    """
    if not f.basis.has_fourier_functions:
        raise ValueError("closed form requires unit-modulus basis functions")
    if n < 1:
        raise ValueError("n must be at least 1")
    padded = f.padded(max(m, len(f)))
    sq = np.abs(padded) ** 2
    total = float(sq.sum())
    return float((m * total - sq[:m].sum()) / n + sq[m:].sum())


# --- experiment driver -------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    """One convergence experiment: model, algorithm, grid and reproducibility."""

    spec: WeightSpec
    algorithm: str
    grid: tuple[int, ...]
    replications: int
    seed: int = 0
    order: float = 1.0
    epsilon: str | tuple[float, ...] = "sigma2"
    target: str = "random_unit_ball"
    target_size: int = 0  # 0: pick min(basis_size, 512)
    basis_size: int = 0  # 0: derived from the grid
    out: str | None = None
    threads: int = 1

    def validate(self) -> None:
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm: unknown value {self.algorithm!r}")
        if len(self.grid) == 0:
            raise ValueError("n: grid must be nonempty")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("n: grid must be strictly increasing")
        if self.grid[0] < 1:
            raise ValueError("n: grid values must be positive")
        if self.replications < 2:
            raise ValueError("replications: need at least 2 for a standard error")
        if not (
            self.target in TARGETS or self.target.startswith("file:")
        ):
            raise ValueError(f"target: unknown value {self.target!r}")
        if self.order < 0:
            raise ValueError("r: order must be nonnegative")
        if self.threads < 1:
            raise ValueError("threads: must be at least 1")


@dataclass(frozen=True)
class RunRecord:
    """One grid point of a convergence study."""

    n: int
    R: int
    mse_mean: float
    mse_stderr: float
    rmse: float
    sigma_next: float
    bound: float
    evals_used: int


def _required_basis_size(config: ExperimentConfig) -> int:
    top = max(config.grid)
    if config.algorithm == "q_m":
        need = top + 1  # sigma(m+1) is reported
    elif config.algorithm == "direct_simulation":
        need = 1
    else:
        need = top + 1  # the bound column uses sigma(n)
    if config.target_size:
        need = max(need, config.target_size)
    return max(need, config.basis_size)


def _epsilon_for(config: ExperimentConfig, basis):
    eps = config.epsilon
    if isinstance(eps, tuple):
        return lambda j: eps[j]
    if eps == "sigma2":
        sig = basis.sigmas
        return lambda j: float(sig[j] ** 2) if j < basis.size else float(sig[-1] ** 2)
    if eps == "pow2":
        return lambda j: 2.0 ** (-j)
    if eps == "inv":
        return lambda j: 1.0 / (j + 1)
    if eps == "const":
        return lambda j: 1.0
    raise ValueError(f"epsilon: unknown table {eps!r}")


def _target_for(config: ExperimentConfig, basis, m_final: int) -> CoefficientFunction:
    size = config.target_size or min(basis.size, 512)
    if config.target == "hard_instance":
        return hard_instance(basis, min(m_final, basis.size - 1))
    if config.target == "weak_instance":
        return weak_instance(basis, size)
    if config.target == "random_unit_ball":
        return random_unit_ball(basis, size, RngStream(config.seed).child(TARGET_STREAM_INDEX))
    return read_coefficients_csv(config.target[len("file:"):], basis)


def _sigma_at(basis, index_1based: int) -> float:
    # sigma(j) in 1-based counting; NaN once the table is exhausted
    if 1 <= index_1based <= basis.size:
        return float(basis.sigmas[index_1based - 1])
    return math.nan


def run_convergence(config: ExperimentConfig) -> list[RunRecord]:
    """Run the configured study and return one record per grid value.

    Writes the records to ``config.out`` when set.  Deterministic given the
    config, including under ``threads > 1``.
    """
    config.validate()
    basis = enumerate_basis(config.spec, _required_basis_size(config))
    records = []
    for n in config.grid:
        records.append(_run_one(config, basis, n))
    if config.out is not None:
        write_records_csv(records, config.out)
    return records


def _run_one(config: ExperimentConfig, basis, n: int) -> RunRecord:
    R, seed, threads, order = config.replications, config.seed, config.threads, config.order
    if config.algorithm == "a_n_r":
        schedule = doubling_schedule(n, order, basis.size)
        f = _target_for(config, basis, schedule.final_coeffs)
        mean, stderr = estimate_mse(
            f, lambda g, rng: approximate(g, basis, n, order, rng), R, seed, threads
        )
        sigma_next = _sigma_at(basis, schedule.final_coeffs + 1)
        bound = bound_constants(order).error_factor * _sigma_at(basis, n)
        evals = schedule.total_samples
    elif config.algorithm == "q_m":
        eps = _epsilon_for(config, basis)
        schedule = tolerance_schedule(eps, n)
        f = _target_for(config, basis, schedule.final_coeffs)
        mean, stderr = estimate_mse(
            f, lambda g, rng: approximate_weak(g, basis, eps, n, rng), R, seed, threads
        )
        sigma_next = _sigma_at(basis, n + 1)
        bound = 2.0 * eps(n)
        evals = schedule.total_samples
    elif config.algorithm == "q_2n_r":
        schedule = doubling_schedule(n, order, basis.size)
        f = _target_for(config, basis, schedule.final_coeffs)
        exact = exact_integral(f)
        mean, stderr = estimate_integral_mse(
            f,
            lambda g, rng: variance_reduced_integral(g, basis, n, order, rng),
            exact,
            R,
            seed,
            threads,
        )
        sigma_next = _sigma_at(basis, schedule.final_coeffs + 1)
        bound = bound_constants(order).error_factor * _sigma_at(basis, n) / math.sqrt(n)
        evals = schedule.total_samples + n
    else:  # direct_simulation
        f = _target_for(config, basis, 0)
        exact = exact_integral(f)
        mean, stderr = estimate_integral_mse(
            f,
            lambda g, rng: direct_simulation(g, n, rng),
            exact,
            R,
            seed,
            threads,
        )
        sigma_next = math.nan
        bound = n**-0.5
        evals = n
    return RunRecord(
        n=n,
        R=R,
        mse_mean=mean,
        mse_stderr=stderr,
        rmse=math.sqrt(mean),
        sigma_next=sigma_next,
        bound=bound,
        evals_used=evals,
    )


def write_records_csv(records, path) -> None:
    """Write records under the fixed header, floats as shortest round-trip decimals."""
    lines = [CSV_HEADER]
    for r in records:
        lines.append(
            f"{r.n},{r.R},{r.mse_mean!r},{r.mse_stderr!r},{r.rmse!r},"
            f"{r.sigma_next!r},{r.bound!r},{r.evals_used}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# --- config files ------------------------------------------------------------

_CONFIG_KEYS = {
    "spec",
    "algorithm",
    "r",
    "epsilon",
    "n",
    "replications",
    "seed",
    "target",
    "target_size",
    "basis_size",
    "out",
    "threads",
}


def read_config_file(path) -> dict[str, str]:
    """Read a flat ``key = value`` config file (``#`` starts a comment)."""
    values: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if not sep or not key or not val:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = val
    return values


def config_from_mapping(values: dict[str, str]) -> ExperimentConfig:
    """Build a validated config from string key/values (file plus flag overrides)."""
    try:
        spec = parse_weight_spec(values["spec"])
    except KeyError:
        raise ValueError("spec: missing") from None
    if "algorithm" not in values:
        raise ValueError("algorithm: missing")
    if "n" not in values:
        raise ValueError("n: missing")
    try:
        grid = tuple(int(v) for v in values["n"].split(",") if v.strip())
    except ValueError:
        raise ValueError(f"n: not an integer list: {values['n']!r}") from None
    eps_raw = values.get("epsilon", "sigma2")
    epsilon: str | tuple[float, ...]
    if eps_raw in ("sigma2", "pow2", "inv", "const"):
        epsilon = eps_raw
    else:
        try:
            epsilon = tuple(float(v) for v in eps_raw.split(",") if v.strip())
        except ValueError:
            raise ValueError(f"epsilon: not a table or preset: {eps_raw!r}") from None

    def _int(key: str, default: int) -> int:
        try:
            return int(values.get(key, default))
        except ValueError:
            raise ValueError(f"{key}: not an integer: {values[key]!r}") from None

    try:
        order = float(values.get("r", 1.0))
    except ValueError:
        raise ValueError(f"r: not a number: {values['r']!r}") from None
    config = ExperimentConfig(
        spec=spec,
        algorithm=values["algorithm"],
        grid=grid,
        replications=_int("replications", 100),
        seed=_int("seed", 0),
        order=order,
        epsilon=epsilon,
        target=values.get("target", "random_unit_ball"),
        target_size=_int("target_size", 0),
        basis_size=_int("basis_size", 0),
        out=values.get("out"),
        threads=_int("threads", 1),
    )
    config.validate()
    return config
