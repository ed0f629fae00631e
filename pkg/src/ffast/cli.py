"""Command-line entry point: decode, thresholds, sweep, verify, plan."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import density, harness, planner
from .decoder import DecoderConfig, full_pipeline
from .frontend import FrontendPlan, parse_key_values
from .spectrum import (
    ResourceLimitError,
    SparseSpectrum,
    ValueModel,
    example_spectrum,
    random_sparse_spectrum,
    read_signal_csv,
    read_spectrum_csv,
)

EXIT_OK, EXIT_INPUT, EXIT_STALLED = 0, 1, 2

log = logging.getLogger("ffast")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # usage errors exit 1, leaving 2 for a stalled decode
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in str(text).replace(" ", "").split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _shared(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="flat key=value file; command-line flags override it")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--mode", choices=("signal", "graph"), default="signal")
    p.add_argument("--out", type=Path, help="output file (default stdout)")


def _plan_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("plan")
    g.add_argument("--plan", type=Path, help="plan file written by the plan subcommand")
    g.add_argument("--factors", type=_int_list, help="pairwise co-prime stage sizes, e.g. 511,512,513")
    g.add_argument("--primes", type=_int_list, help="co-prime factors for cyclic-product stages")
    g.add_argument("--width", type=int, default=None, help="factors per cyclic-product stage")
    g.add_argument("--P", type=int, default=1, dest="P", help="length multiplier")


def _decoder_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("decoder")
    g.add_argument("--max-iterations", type=int, default=DecoderConfig.max_iterations)
    g.add_argument("--zero-energy-tol", type=float, default=DecoderConfig.zero_energy_tol)
    g.add_argument("--singleton-residual-tol", type=float, default=DecoderConfig.singleton_residual_tol)
    g.add_argument("--stage-order", choices=("ascending", "descending"), default="ascending")


def _value_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--values", choices=("unit-phase", "pm-constant"), default="unit-phase",
                   help="distribution of non-zero coefficients")
    p.add_argument("--amplitude", type=float, default=10.0, help="magnitude for pm-constant values")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="ffast", description="Sparse DFT recovery experiments.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decode", help="decode one signal and write its spectrum")
    _shared(p)
    _plan_args(p)
    _decoder_args(p)
    _value_args(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--example", action="store_true", help="the bundled 20-point example (plan 4,5)")
    src.add_argument("--spectrum", type=Path, help="spectrum CSV (location,re,im) to synthesize from")
    src.add_argument("--signal", type=Path, help="dense time signal CSV (index,re,im)")
    src.add_argument("--random", type=int, metavar="K", help="random K-sparse spectrum from --seed")
    p.add_argument("--summary", type=Path, help="summary CSV path (default: <out>.summary.csv)")

    p = sub.add_parser("thresholds", help="density-evolution thresholds for d = 2..9")
    _shared(p)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--trace", nargs=2, metavar=("D", "ETA"), help="write the p_j trace instead")
    p.add_argument("--iterations", type=int, default=density.DEFAULT_ITERATIONS)

    p = sub.add_parser("sweep", help="success rate versus k")
    _shared(p)
    _plan_args(p)
    _decoder_args(p)
    _value_args(p)
    p.add_argument("--ks", type=_int_list, help="comma-separated sparsity levels")

    p = sub.add_parser("verify", help="compare decodes of dense signals with the full DFT")
    _shared(p)
    _plan_args(p)
    _decoder_args(p)
    _value_args(p)
    p.add_argument("--k", type=int, default=0)

    p = sub.add_parser("plan", help="construct and print a front-end plan")
    _shared(p)
    _plan_args(p)
    p.add_argument("--delta", type=float, help="sparsity index; picks the regime")
    p.add_argument("--k", type=int, help="target sparsity")
    return ap


def _apply_config(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is None:
        return args
    try:
        kv = parse_key_values(args.config.read_text())
    except (OSError, ValueError) as exc:
        parser.error(f"cannot read config {args.config}: {exc}")
    sub = _subparser(parser, args.command)
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in kv.items():
        dest = key.replace("-", "_")
        if dest not in actions or dest in ("config", "help"):
            parser.error(f"unknown config key {key!r}")
        act = actions[dest]
        try:
            if isinstance(act, argparse._StoreTrueAction):
                value = raw.lower() in ("1", "true", "yes", "on")
            else:
                value = act.type(raw) if act.type else raw
        except (ValueError, argparse.ArgumentTypeError) as exc:
            parser.error(f"config key {key}: {exc}")
        if act.choices and value not in act.choices:
            parser.error(f"config key {key}: {value!r} not in {sorted(act.choices)}")
        defaults[dest] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _subparser(parser, name):
    for a in parser._actions:
        if isinstance(a, argparse._SubParsersAction):
            return a.choices[name]
    raise KeyError(name)


def _plan_from_args(args, default=None) -> FrontendPlan:
    if args.plan is not None:
        return FrontendPlan.loads(args.plan.read_text())
    if args.factors:
        return planner.plan_coprime(args.factors, args.P).plan
    if args.primes:
        width = args.width if args.width is not None else len(args.primes) - 1
        return planner.plan_less_sparse(args.primes, width, args.P).plan
    if default is not None:
        return default
    raise UsageError("no plan given: use --plan, --factors or --primes")


def _decoder_cfg(args) -> DecoderConfig:
    return DecoderConfig(
        max_iterations=args.max_iterations,
        zero_energy_tol=args.zero_energy_tol,
        singleton_residual_tol=args.singleton_residual_tol,
        stage_order=args.stage_order,
    )


def _value_model(args) -> ValueModel:
    return ValueModel(args.values, args.amplitude)


def _emit(args, text: str) -> None:
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text)


def cmd_decode(args) -> int:
    example_plan = FrontendPlan.from_sizes(20, [4, 5])
    plan = _plan_from_args(args, default=example_plan if args.example else None)
    if args.example:
        source = example_spectrum()
        if source.n != plan.n:
            raise UsageError(f"the example has n=20 but the plan has n={plan.n}")
    elif args.spectrum is not None:
        source = read_spectrum_csv(args.spectrum, plan.n)
    elif args.signal is not None:
        source = read_signal_csv(args.signal)
        if source.n != plan.n:
            raise UsageError(f"signal length {source.n} does not match plan n={plan.n}")
    elif args.random is not None:
        source = random_sparse_spectrum(plan.n, args.random, _value_model(args), args.seed)
    else:
        raise UsageError("no input: use --example, --spectrum, --signal or --random")
    report = full_pipeline(source, plan, _decoder_cfg(args))
    if args.out is not None:
        summary = args.summary or args.out.with_suffix(".summary.csv")
        report.write(args.out, summary)
    else:
        sys.stdout.write("location,re,im\n")
        for l, v in zip(report.spectrum.locations, report.spectrum.values):
            sys.stdout.write(f"{int(l)},{float(v.real)!r},{float(v.imag)!r}\n")
    sys.stderr.write("status,iterations,residual_bins,m\n" + report.summary_line() + "\n")
    if isinstance(source, SparseSpectrum):
        log.info("exact=%s", report.exact)
    return EXIT_OK if report.success else EXIT_STALLED


def cmd_thresholds(args) -> int:
    if args.trace:
        d, eta = int(args.trace[0]), float(args.trace[1])
        trace = density.density_trace(density.DensityEvolutionParams(eta, d, args.iterations))
        if args.out is None:
            sys.stdout.write("j,p_j\n" + "".join(f"{j},{float(p)!r}\n" for j, p in enumerate(trace)))
        else:
            density.write_trace_csv(args.out, trace)
        return EXIT_OK
    rows = density.threshold_table(range(2, 10), args.tol)
    _emit(args, "d,eta,d_eta\n" + "".join(f"{d},{eta:.4f},{d * eta:.4f}\n" for d, eta, _ in rows))
    return EXIT_OK


def cmd_sweep(args) -> int:
    if not args.ks:
        raise UsageError("sweep needs --ks")
    plan = _plan_from_args(args)
    rows = harness.sweep(plan, args.ks, args.trials, args.seed, args.mode, _value_model(args),
                         _decoder_cfg(args), args.jobs)
    for r in rows:
        sys.stderr.write(f"k={r.k} max_iterations={r.max_iterations}\n")
    _emit(args, harness.format_sweep(rows))
    return EXIT_OK


def cmd_verify(args) -> int:
    plan = _plan_from_args(args)
    rep = harness.verify(plan, args.k, args.trials, args.seed, _value_model(args), _decoder_cfg(args))
    _emit(args, rep.csv())
    return EXIT_OK


def cmd_plan(args) -> int:
    if args.delta is not None:
        if args.k is None:
            raise UsageError("--delta needs --k")
        design = planner.plan_for_delta(args.delta, args.k, args.P)
    elif args.factors:
        design = planner.plan_coprime(args.factors, args.P)
    elif args.primes:
        width = args.width if args.width is not None else len(args.primes) - 1
        design = planner.plan_less_sparse(args.primes, width, args.P)
    elif args.k is not None:
        design = planner.plan_very_sparse(args.k, args.P)
    else:
        raise UsageError("plan needs --delta/--k, --k, --factors or --primes")
    text = design.plan.dumps()
    text += f"# m={design.m}\n# k_capacity={design.k_capacity}\n# eta_threshold={design.eta_threshold}\n"
    _emit(args, text)
    return EXIT_OK


COMMANDS = {
    "decode": cmd_decode,
    "thresholds": cmd_thresholds,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "plan": cmd_plan,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = _apply_config(parser, argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if getattr(args, "trials", 1) < 1 or getattr(args, "jobs", 1) < 1:
        parser.error("--trials and --jobs must be >= 1")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ValueError, OSError, ResourceLimitError) as exc:
        sys.stderr.write(f"ffast {args.command}: error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
