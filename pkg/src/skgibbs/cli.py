"""Command-line surface: instance generation, sampling, diagnostics, and the
standalone walk / partition-function / oracle tools.

Exit codes: 0 success, 2 configuration error, 3 runtime abort.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .anneal import AnnealConfig, estimate_log_z
from .diagnostics import (coupled_wasserstein_stat, covariance_frobenius_stat,
                          magnetization_error_stat, wedge_concentration_stat)
from .instance import SkInstance
from .oracle import ExactTable, Wedge
from .pipeline import PipelineConfig, sample, write_samples
from .walk import run_walk

CONFIG_ERROR = 2
RUNTIME_ERROR = 3


class ConfigError(ValueError):
    pass


def _load_instance(args) -> SkInstance:
    if getattr(args, "instance", None):
        return SkInstance.load(args.instance)
    if args.n is None or args.beta is None:
        raise ConfigError("need --instance or both --n and --beta")
    return SkInstance.generate(args.n, args.beta, args.seed)


def _parse_tilt(spec: str, n: int) -> np.ndarray:
    if spec == "zeros":
        return np.zeros(n)
    vals = np.array([float(v) for v in spec.split(",")])
    if vals.size != n:
        raise ConfigError(f"tilt has {vals.size} entries, expected {n}")
    return vals


def _emit(obj, args) -> None:
    text = json.dumps(obj, indent=2, default=str)
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_gen(args) -> int:
    inst = SkInstance.generate(args.n, args.beta, args.seed)
    if args.out:
        inst.save(args.out)
    else:
        print(inst.to_json())
    return 0


def cmd_oracle(args) -> int:
    inst = _load_instance(args)
    y = _parse_tilt(args.tilt, inst.n)
    wedge = None
    if args.radius is not None:
        wedge = Wedge(center=np.ones(inst.n, dtype=np.int8),
                      radius=args.radius)
    table = ExactTable(inst, wedge)
    _emit(table.summary(y).to_dict(), args)
    return 0


def cmd_sample(args) -> int:
    if args.config:
        with open(args.config) as fh:
            cfg = PipelineConfig.from_json(fh.read())
    else:
        raise ConfigError("sample requires --config")
    if args.seed is not None:
        cfg.seed = args.seed
    samples, telemetry = sample(cfg)
    if args.out:
        write_samples(args.out, samples, cfg, fmt=args.format)
        with open(args.out + ".telemetry.json", "w") as fh:
            json.dump(telemetry, fh, indent=2, default=str)
    else:
        for row in samples:
            print(",".join(str(int(v)) for v in row))
    if len(samples) < cfg.num_samples:
        return RUNTIME_ERROR
    return 0


def cmd_walk(args) -> int:
    inst = _load_instance(args)
    y = _parse_tilt(args.tilt, inst.n)
    center = np.ones(inst.n, dtype=np.int8) if args.center is None else \
        np.array([int(v) for v in args.center.split(",")], dtype=np.int8)
    wedge = Wedge(center=center, radius=args.radius)
    out = run_walk(inst, y, wedge, center, args.steps, args.seed)
    _emit({"sigma": out.tolist()}, args)
    return 0


def cmd_estimate_z(args) -> int:
    inst = _load_instance(args)
    y = _parse_tilt(args.tilt, inst.n)
    wedge = Wedge(center=np.ones(inst.n, dtype=np.int8), radius=args.radius)
    cfg = AnnealConfig(wedge=wedge, samples_per_rung=args.samples,
                       repeats=args.repeats)
    logz, diag = estimate_log_z(inst, y, cfg, args.seed)
    _emit({"log_z": logz, "diagnostics": diag}, args)
    return 0


def cmd_diagnose(args) -> int:
    if args.which == "wedge":
        report = wedge_concentration_stat(args.t, args.n or 100,
                                          args.trials, args.seed)
    else:
        inst = _load_instance(args)
        if args.which == "covariance":
            report = covariance_frobenius_stat(inst, args.t, args.trials,
                                               args.seed)
        elif args.which == "magnetization":
            report = magnetization_error_stat(inst, args.t, args.trials,
                                              args.seed)
        elif args.which == "wasserstein":
            report = coupled_wasserstein_stat(inst, args.t, args.eta,
                                              args.trials, args.seed)
        else:
            raise ConfigError(f"unknown diagnostic {args.which!r}")
    _emit(report, args)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="skgibbs",
                                description=__doc__.strip().splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, instance=True):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", default=None)
        sp.add_argument("--format", choices=["json", "csv"], default="csv")
        if instance:
            sp.add_argument("--instance", default=None,
                            help="instance JSON file")
            sp.add_argument("--n", type=int, default=None)
            sp.add_argument("--beta", type=float, default=None)

    sp = sub.add_parser("gen", help="write a disorder instance file")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--beta", type=float, required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("oracle", help="exact enumeration summary")
    common(sp)
    sp.add_argument("--tilt", default="zeros")
    sp.add_argument("--radius", type=int, default=None)
    sp.set_defaults(func=cmd_oracle)

    sp = sub.add_parser("sample", help="run the full sampling pipeline")
    sp.add_argument("--config", required=False, default=None)
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--format", choices=["json", "csv"], default="csv")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("walk", help="standalone wedge-restricted walk")
    common(sp)
    sp.add_argument("--tilt", default="zeros")
    sp.add_argument("--radius", type=int, required=True)
    sp.add_argument("--center", default=None)
    sp.add_argument("--steps", type=int, required=True)
    sp.set_defaults(func=cmd_walk)

    sp = sub.add_parser("estimate-z", help="annealed partition estimate")
    common(sp)
    sp.add_argument("--tilt", default="zeros")
    sp.add_argument("--radius", type=int, required=True)
    sp.add_argument("--samples", type=int, default=1000)
    sp.add_argument("--repeats", type=int, default=32)
    sp.set_defaults(func=cmd_estimate_z)

    sp = sub.add_parser("diagnose", help="run one diagnostic statistic")
    sp.add_argument("which",
                    choices=["covariance", "magnetization", "wedge",
                             "wasserstein"])
    common(sp)
    sp.add_argument("--t", type=float, default=1.0)
    sp.add_argument("--eta", type=float, default=0.05)
    sp.add_argument("--trials", type=int, default=100)
    sp.set_defaults(func=cmd_diagnose)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return CONFIG_ERROR if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except (ConfigError, ValueError, KeyError, json.JSONDecodeError,
            FileNotFoundError, TypeError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return CONFIG_ERROR
    except Exception as e:
        print(f"runtime abort: {e}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
