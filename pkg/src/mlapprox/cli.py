"""Command line driver for schedules, bounds, spectra and experiments."""

from __future__ import annotations

import argparse
import sys

from .experiment import (
    config_from_mapping,
    read_config_file,
    run_convergence,
    estimate_integral_mse,
    write_records_csv,
)
from .functions import write_coefficients_csv
from .integration import (
    approximation_bound,
    direct_simulation,
    exact_integral,
    integration_bound,
    variance_reduced_integral,
)
from .multilevel import (
    bound_constants,
    doubling_schedule,
    tolerance_schedule,
    approximate,
)
from .sampling import RngStream
from .spectral import enumerate_basis, write_basis_csv


def _merged_values(args) -> dict[str, str]:
    values = read_config_file(args.config) if args.config else {}
    for key in ("spec", "algorithm", "n", "r", "epsilon", "target"):
        flag = getattr(args, key if key != "n" else "n_grid", None)
        if flag is not None:
            values[key] = str(flag)
    for key in ("seed", "threads", "out", "replications", "target_size", "basis_size"):
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = str(flag)
    spec = values.get("spec", "")
    if spec and ":" not in spec:
        # bare kind: assemble from --r/--d shortcut flags
        r = int(float(values.get("r", 1)))
        d = getattr(args, "d", None) or 1
        values["spec"] = f"{spec}:r={r},d={d}"
    return values


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(out, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def _cmd_schedule(args) -> int:
    if args.m is not None:
        values = _merged_values(args)
        values.setdefault("spec", "explicit:1.0")
        values.setdefault("algorithm", "q_m")
        values.setdefault("n", str(args.m))
        config = config_from_mapping(values)
        if isinstance(config.epsilon, tuple):
            eps = lambda j: config.epsilon[j]
        else:
            from .experiment import _epsilon_for

            basis = enumerate_basis(config.spec, max(args.m + 1, 2))
            eps = _epsilon_for(config, basis)
        schedule = tolerance_schedule(eps, args.m)
    elif args.n_grid is not None:
        n = int(args.n_grid)
        schedule = doubling_schedule(n, args.r if args.r is not None else 1.0, n)
    else:
        raise ValueError("schedule needs --n (with --r) or --m (with an epsilon table)")
    lines = ["j,n_j,m_j"]
    for j, (n_j, m_j) in enumerate(zip(schedule.samples, schedule.coeffs), start=1):
        lines.append(f"{j},{n_j},{m_j}")
    _emit("\n".join(lines), args.out)
    return 0


def _cmd_bound(args) -> int:
    r = args.r if args.r is not None else 1.0
    consts = bound_constants(r)
    lines = [
        f"order = {r!r}",
        f"level_offset = {consts.level_offset}",
        f"error_factor = {consts.error_factor!r}",
        f"level_factor = {consts.level_factor!r}",
        f"optimality_factor = {consts.optimality_factor!r}",
    ]
    if args.d is not None and args.n_grid is not None:
        n, d = int(args.n_grid), args.d
        lines.append(f"approximation_bound = {approximation_bound(n, r, d)!r}")
        lines.append(f"integration_bound = {integration_bound(n, r, d)!r}")
    _emit("\n".join(lines), args.out)
    return 0


def _cmd_sigma(args) -> int:
    values = _merged_values(args)
    if "spec" not in values:
        raise ValueError("sigma needs --spec (or a config file with one)")
    from .spectral import parse_weight_spec

    basis = enumerate_basis(parse_weight_spec(values["spec"]), args.N)
    if args.out is None:
        lines = ["j," + ",".join(f"k_{c+1}" for c in range(basis.dimension)) + ",sigma"]
        for i in range(basis.size):
            ks = ",".join(str(int(v)) for v in basis.frequencies[i])
            lines.append(f"{i+1},{ks},{float(basis.sigmas[i])!r}")
        _emit("\n".join(lines), None)
    else:
        write_basis_csv(basis, args.out)
    return 0


def _cmd_approx(args) -> int:
    values = _merged_values(args)
    values.setdefault("algorithm", "a_n_r")
    config = config_from_mapping(values)
    if len(config.grid) != 1:
        raise ValueError("approx runs a single n; give one value")
    n = config.grid[0]
    from .experiment import _required_basis_size, _target_for

    basis = enumerate_basis(config.spec, _required_basis_size(config))
    schedule = doubling_schedule(n, config.order, basis.size)
    f = _target_for(config, basis, schedule.final_coeffs)
    result = approximate(f, basis, n, config.order, RngStream(config.seed).child(0))
    if args.out is None:
        raise ValueError("approx needs --out for the coefficient CSV")
    write_coefficients_csv(result.value, args.out, footer=f"evals_used={result.evals_used}")
    return 0


def _cmd_integrate(args) -> int:
    values = _merged_values(args)
    values.setdefault("algorithm", "q_2n_r")
    config = config_from_mapping(values)
    from .experiment import _required_basis_size, _target_for

    basis = enumerate_basis(config.spec, _required_basis_size(config))
    lines = ["n,R,mse_q2n,stderr_q2n,mse_direct,stderr_direct,exact_re,exact_im"]
    for n in config.grid:
        schedule = doubling_schedule(n, config.order, basis.size)
        f = _target_for(config, basis, schedule.final_coeffs)
        exact = exact_integral(f)
        mse_q, se_q = estimate_integral_mse(
            f,
            lambda g, rng: variance_reduced_integral(g, basis, n, config.order, rng),
            exact,
            config.replications,
            config.seed,
            config.threads,
        )
        mse_s, se_s = estimate_integral_mse(
            f,
            lambda g, rng: direct_simulation(g, 2 * n, rng),
            exact,
            config.replications,
            config.seed,
            config.threads,
        )
        lines.append(
            f"{n},{config.replications},{mse_q!r},{se_q!r},{mse_s!r},{se_s!r},"
            f"{exact.real!r},{exact.imag!r}"
        )
    _emit("\n".join(lines), args.out)
    return 0


def _cmd_converge(args) -> int:
    values = _merged_values(args)
    config = config_from_mapping(values)
    records = run_convergence(config)
    if config.out is None:
        from .experiment import CSV_HEADER

        lines = [CSV_HEADER]
        for r in records:
            lines.append(
                f"{r.n},{r.R},{r.mse_mean!r},{r.mse_stderr!r},{r.rmse!r},"
                f"{r.sigma_next!r},{r.bound!r},{r.evals_used}"
            )
        _emit("\n".join(lines), args.out)
    return 0


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key=value config file")
    parser.add_argument("--seed", type=int, help="master seed")
    parser.add_argument("--threads", type=int, help="replication worker threads")
    parser.add_argument("--out", help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mlapprox",
        description="Multilevel approximation and integration experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schedule", help="print a level plan")
    p.add_argument("--n", dest="n_grid", type=int, help="sample budget")
    p.add_argument("--r", type=float, help="order of the doubling plan")
    p.add_argument("--m", type=int, help="coefficient count of the tolerance plan")
    p.add_argument("--epsilon", help="tolerance table (preset or comma list)")
    p.add_argument("--spec", help="weight spec (for epsilon preset 'sigma2')")
    _add_common(p)
    p.set_defaults(func=_cmd_schedule)

    p = sub.add_parser("bound", help="print explicit constants and error bounds")
    p.add_argument("--r", type=float, help="smoothness order")
    p.add_argument("--d", type=int, help="dimension")
    p.add_argument("--n", dest="n_grid", type=int, help="sample count")
    _add_common(p)
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("sigma", help="emit the leading singular values")
    p.add_argument("--spec", help="weight spec, e.g. mixed:r=1,d=2")
    p.add_argument("--r", type=int, help="shortcut: order for --spec mixed/iso")
    p.add_argument("--d", type=int, help="shortcut: dimension for --spec mixed/iso")
    p.add_argument("--N", type=int, required=True, help="number of singular values")
    _add_common(p)
    p.set_defaults(func=_cmd_sigma)

    p = sub.add_parser("approx", help="single approximation run, coefficients to CSV")
    p.add_argument("--spec", help="weight spec")
    p.add_argument("--r", type=float, help="order")
    p.add_argument("--n", dest="n_grid", type=int, help="sample budget")
    p.add_argument("--target", help="target function")
    p.add_argument("--target_size", type=int)
    p.add_argument("--basis_size", type=int)
    _add_common(p)
    p.set_defaults(func=_cmd_approx)

    p = sub.add_parser("integrate", help="replicated integration comparison")
    p.add_argument("--spec", help="weight spec")
    p.add_argument("--r", type=float, help="order")
    p.add_argument("--n", dest="n_grid", help="comma list of n values")
    p.add_argument("--target", help="target function")
    p.add_argument("--replications", type=int)
    p.add_argument("--target_size", type=int)
    _add_common(p)
    p.set_defaults(func=_cmd_integrate)

    p = sub.add_parser("converge", help="convergence study from a config file")
    p.add_argument("--spec", help="weight spec")
    p.add_argument("--algorithm", help="a_n_r | q_m | q_2n_r | direct_simulation")
    p.add_argument("--r", type=float, help="order")
    p.add_argument("--n", dest="n_grid", help="comma list of grid values")
    p.add_argument("--epsilon", help="tolerance table (preset or comma list)")
    p.add_argument("--target", help="target function")
    p.add_argument("--replications", type=int)
    p.add_argument("--target_size", type=int)
    p.add_argument("--basis_size", type=int)
    _add_common(p)
    p.set_defaults(func=_cmd_converge)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
