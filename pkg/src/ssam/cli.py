"""Command-line entry point.

Five subcommands: ``run`` (one optimizer run), ``compare`` (paired
averaging/no-averaging runs with a summary), ``validate`` (the property
suites), ``simulate`` (the Euler flow), and ``datagen`` (synthetic
teacher data to CSV).  Every command is deterministic given its flags;
resolved configuration is echoed into a sidecar file next to each trace
so no default stays hidden.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 validation failure.
"""

import argparse
import dataclasses
import hashlib
import sys

import numpy as np

from . import dynamics as dyn
from . import validate as val
from .chainlab import SelectionFunction, l1_distance
from .core import BoxConstraint, DataError, UsageError
from .dataio import (
    ExperimentConfig,
    _atomic_write,
    load_config,
    load_csv,
    save_config,
    standardize,
    synth_teacher,
    write_trace,
)
from .oracles import L1Oracle, QuadraticOracle
from .optimizer import run as run_method
from .relunet import NetArch, ReluSampleOracle

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_VALIDATION = 3

#: fixed generator for the built-in convex test problems, so the
#: problem instance does not move when the run seed changes
_PROBLEM_SEED = 20_240_101


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad flags; remap to the usage exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser():
    parser = _Parser(prog="ssam", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, *names):
        flags = {
            "method": dict(choices=("ssam", "sgd"), help="optimizer variant"),
            "oracle": dict(choices=("teacher", "quadratic", "l1", "csv"),
                           help="objective to optimize"),
            "data": dict(help="CSV file for the csv oracle"),
            "arch": dict(help="network architecture L,n,m"),
            "a": dict(type=float, help="averaging coefficient"),
            "beta": dict(type=float, help="gap regularization weight"),
            "tau0": dict(type=float, help="initial stepsize"),
            "schedule": dict(choices=("harmonic-paper", "constant-then-decay"),
                             help="stepsize law"),
            "iters": dict(type=int, help="iteration budget"),
            "seed": dict(type=int, help="run seed"),
            "box": dict(type=float, dest="half_width",
                        help="feasible box half-width"),
            "batch": dict(type=int, help="minibatch size"),
            "out": dict(help="output path"),
            "config": dict(help="config file; explicit flags override it"),
        }
        for name in names:
            p.add_argument(f"--{name}", **flags[name])

    p_run = sub.add_parser("run", parents=[], help="one optimizer run")
    add_common(p_run, "method", "oracle", "data", "arch", "a", "beta", "tau0",
               "schedule", "iters", "seed", "box", "batch", "out", "config")

    p_cmp = sub.add_parser("compare",
                           help="paired runs with and without averaging")
    add_common(p_cmp, "oracle", "data", "arch", "a", "beta", "tau0",
               "schedule", "iters", "seed", "box", "batch", "out", "config")

    p_val = sub.add_parser("validate", help="property suites")
    p_val.add_argument("--suite", choices=val.SUITES, action="append",
                       help="restrict to one suite (repeatable)")
    p_val.add_argument("--h", type=float, default=1e-4,
                       help="chain-rule quadrature step")
    p_val.add_argument("--seed", type=int, default=0, help="suite seed")
    p_val.add_argument("--out", help="also write the report to this path")

    p_sim = sub.add_parser("simulate", help="integrate the limiting flow")
    add_common(p_sim, "oracle", "a", "beta", "seed", "box", "out", "config")
    p_sim.add_argument("--T", type=float, default=50.0, help="flow horizon")
    p_sim.add_argument("--h", type=float, default=1e-3, help="Euler step")

    p_gen = sub.add_parser("datagen", help="write synthetic teacher data")
    add_common(p_gen, "arch", "seed", "out", "config")
    p_gen.add_argument("--n", type=int, dest="n_samples",
                       help="number of samples")

    return parser


def _resolve_config(args):
    """Start from the config file when given, then apply explicit flags."""
    base = load_config(args.config) if getattr(args, "config", None) else \
        ExperimentConfig()
    overrides = {}
    for field in dataclasses.fields(ExperimentConfig):
        value = getattr(args, field.name, None)
        if value is None:
            continue
        if field.name == "arch":
            try:
                value = tuple(int(v) for v in value.split(","))
            except ValueError:
                raise UsageError(
                    f"arch must be three integers L,n,m, got {value!r}") from None
        overrides[field.name] = value
    return dataclasses.replace(base, **overrides)


def _convex_instance(config):
    """The built-in quadratic or l1 test problem (fixed instance)."""
    rng = np.random.default_rng(_PROBLEM_SEED)
    if config.oracle == "quadratic":
        dim = 10
        A = rng.normal(size=(dim + 2, dim)) / np.sqrt(dim) + np.eye(dim + 2, dim)
        b = rng.normal(size=dim + 2) + 0.5
        return QuadraticOracle(A, b), BoxConstraint.cube(dim, config.half_width)
    dim = 10
    xstar = rng.uniform(-0.8, 0.8, dim)
    return L1Oracle(xstar), BoxConstraint.cube(dim, config.half_width)


def _build_problem(config):
    """Oracle and box for a config; data oracles standardize features."""
    if config.oracle in ("quadratic", "l1"):
        return _convex_instance(config)
    arch = NetArch(*config.arch)
    if config.oracle == "teacher":
        ds = synth_teacher(arch, config.n_samples, config.noise_std,
                           seed=config.seed)
    else:
        ds = standardize(load_csv(config.data))
        if ds.n != arch.n or ds.m != arch.m:
            raise UsageError(
                f"data has {ds.n} features / {ds.m} targets but arch "
                f"{config.arch} expects {arch.n} / {arch.m}")
    oracle = ReluSampleOracle(arch, ds.X, ds.Y, batch_size=config.batch,
                              half_width=config.half_width)
    return oracle, oracle.box()


def _config_hash(config):
    return hashlib.sha256(config.render().encode()).hexdigest()[:16]


def _execute(config, method, out_path):
    oracle, box = _build_problem(config)
    trace = run_method(method, oracle, box, config.algo_params(), config.iters,
                       meta={"config_sha256": _config_hash(config)})
    write_trace(out_path, trace)
    save_config(out_path + ".config",
                dataclasses.replace(config, method=method))
    return trace


def cmd_run(args):
    config = _resolve_config(args)
    out = args.out or f"trace_{config.method}.csv"
    _execute(config, config.method, out)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_compare(args):
    config = _resolve_config(args)
    stem = args.out or "compare"
    traces = {}
    for method in ("ssam", "sgd"):
        cfg = dataclasses.replace(config, method=method)
        traces[method] = _execute(cfg, method, f"{stem}_{method}.csv")
    lines = []
    for method in ("ssam", "sgd"):
        tr = traces[method]
        cfg = dataclasses.replace(config, method=method)
        lines.append(f"{method}.smoothed_loss = {tr.smoothed_loss()!r}")
        lines.append(f"{method}.tail_std = {tr.tail_std()!r}")
        lines.append(f"{method}.tail_variance = {tr.tail_std() ** 2!r}")
        lines.append(f"{method}.final_residual = {float(tr.residual[-1])!r}")
        lines.append(f"{method}.config_sha256 = {_config_hash(cfg)}")
    ratio = traces["ssam"].tail_std() / max(traces["sgd"].tail_std(), 1e-300)
    lines.append(f"tail_std_ratio = {ratio!r}")
    text = "\n".join(lines) + "\n"
    _atomic_write(f"{stem}_summary.txt", text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_validate(args):
    lines = []

    def emit(line):
        lines.append(line)
        print(line)

    ok = val.run_suites(names=args.suite, h=args.h, seed=args.seed, emit=emit)
    if args.out:
        _atomic_write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_simulate(args):
    config = _resolve_config(args)
    if config.oracle not in ("quadratic", "l1"):
        raise UsageError("simulate supports the quadratic and l1 oracles")
    oracle, box = _build_problem(config)
    if config.oracle == "quadratic":
        sel = SelectionFunction(f=oracle.f, g=oracle.grad, dim=box.dim)
    else:
        sel = l1_distance(oracle.xstar)
    rng = np.random.default_rng(config.seed)
    x0 = box.sample(rng)
    z0 = np.asarray(sel.g(x0))
    readings = dyn.integrate(x0, z0, sel, config.a, config.beta, box,
                             args.T, args.h)
    trace = dyn.readings_to_trace(readings, args.h,
                                  meta={"config_sha256": _config_hash(config)})
    out = args.out or "flow.csv"
    write_trace(out, trace)
    save_config(out + ".config", config)
    print(f"wrote {out} (final residual {readings[-1].speed:.3e})")
    return EXIT_OK


def cmd_datagen(args):
    config = _resolve_config(args)
    arch = NetArch(*config.arch)
    if arch.m != 1:
        raise UsageError("datagen writes a single target column; need m = 1")
    ds = synth_teacher(arch, config.n_samples, config.noise_std,
                       seed=config.seed)
    out = args.out or "teacher.csv"
    header = [f"x{i+1}" for i in range(ds.n)] + ["target"]
    lines = [";".join(header)]
    for i in range(len(ds)):
        row = ["%.17g" % v for v in ds.X[i]] + ["%.17g" % ds.Y[i, 0]]
        lines.append(";".join(row))
    _atomic_write(out, "\n".join(lines) + "\n")
    save_config(out + ".config", config)
    print(f"wrote {out} ({len(ds)} rows)")
    return EXIT_OK


_COMMANDS = {
    "run": cmd_run,
    "compare": cmd_compare,
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "datagen": cmd_datagen,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
