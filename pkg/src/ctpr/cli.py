"""Command-line entry point: generate / validate / evaluate / inspect.

Exit codes: 0 success, 1 validation failure, 2 usage or format error,
3 I/O failure.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import replace

import numpy as np

from ctpr import analysis, dataset, evaluation
from ctpr.errors import ConfigError, FormatError, InputError
from ctpr.prior import PriorConfig, ood_config

DEFAULT_SEED = 42

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _default_seed() -> int:
    env = os.environ.get("CTP_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"CTP_SEED must be an integer, got {env!r}")
    return DEFAULT_SEED


def _load_config(args) -> PriorConfig:
    cfg = PriorConfig.load(args.config) if getattr(args, "config", None) else PriorConfig()
    if getattr(args, "ood", False):
        cfg = ood_config(cfg)
    if getattr(args, "hard_only", False):
        cfg = replace(cfg, intervention_mix=(1.0, 0.0, 0.0))
    return cfg


def cmd_generate(args) -> int:
    cfg = _load_config(args)
    seed = args.seed if args.seed is not None else _default_seed()
    workers = args.workers or (os.cpu_count() or 1)
    started = time.perf_counter()
    try:
        dataset.generate_corpus(cfg, seed, args.n, args.out, n_workers=workers)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    elapsed = time.perf_counter() - started
    with dataset.CorpusReader(args.out) as reader:
        diverged = 0
        for sample in reader:
            if not (np.isfinite(sample.obs.values).all() and np.isfinite(sample.int.values).all()):
                diverged += 1
    print(f"wrote {args.n} records to {args.out} in {elapsed:.1f}s "
          f"({args.n / elapsed:.0f}/s, workers={workers}, seed={seed})")
    print(f"divergence count: {diverged}")
    return EXIT_OK


def cmd_validate(args) -> int:
    with dataset.CorpusReader(args.input) as reader:
        report = analysis.corpus_stats(reader.iter_lenient())
    if args.json:
        print(report.to_json())
    else:
        print(report.render_table())
    if report.divergence_rate > 0 or report.n_unreadable > 0:
        return EXIT_VALIDATION
    return EXIT_OK


def _predictor_for(method: str, args, reader):
    if method == "var":
        return evaluation.var_predictor
    if method == "mean":
        return evaluation.mean_predictor
    if method == "oracle":
        if getattr(args, "shuffled_control", False):
            # the plain oracle ignores the spec; the control needs the
            # spec-sensitive re-simulating variant, which needs the config
            cfg = PriorConfig.load(args.config) if args.config else PriorConfig()
            if cfg.digest() != reader.config_digest:
                raise ConfigError(
                    "corpus was generated with a different config; pass it via --config"
                )
            return evaluation.resimulation_predictor(cfg)
        return evaluation.oracle_predictor
    raise ConfigError(f"unknown method {method!r}")


def cmd_evaluate(args) -> int:
    with dataset.CorpusReader(args.input) as reader:
        render = (lambda rep: rep.to_json()) if args.json else (lambda rep: rep.render_table())
        if args.method == "predictions-file":
            if not args.predictions:
                print("error: --predictions required for method=predictions-file", file=sys.stderr)
                return EXIT_USAGE
            report = evaluation.score_predictions_file(reader, args.predictions)
            print(render(report))
            return EXIT_OK
        predictor = _predictor_for(args.method, args, reader)
        if args.shuffled_control:
            rng = np.random.default_rng(args.seed if args.seed is not None else _default_seed())
            normal, shuffled = evaluation.shuffled_control(reader, predictor, rng)
            if args.json:
                print(normal.to_json())
                print(shuffled.to_json())
            else:
                print("== true intervention targets ==")
                print(normal.render_table())
                print()
                print("== shuffled intervention targets ==")
                print(shuffled.render_table())
        else:
            preds = evaluation.run_predictor(reader, predictor)
            print(render(evaluation.evaluate(reader, preds)))
    return EXIT_OK


def cmd_export(args) -> int:
    with dataset.CorpusReader(args.input) as reader:
        stop = args.stop if args.stop is not None else len(reader)
        try:
            with open(args.out, "w") as fh:
                for line in dataset.export_jsonl(reader, args.start, stop):
                    fh.write(line + "\n")
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
    print(f"wrote records [{args.start}, {stop}) to {args.out}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    with dataset.CorpusReader(args.input) as reader:
        sample = reader.read(args.index)
        spec = sample.intervention
        cls = analysis.classify_query(sample.tscm, spec, sample.query,
                                      regime_path=sample.obs.regime_path)
        print(f"record {args.index}: N={sample.tscm.n_vars} K={sample.tscm.max_lag} "
              f"T={sample.obs.seq_len} family={sample.tscm.family_tag} seed={sample.sample_seed}")
        print(f"intervention: kind={spec.kind} targets={list(spec.targets)} "
              f"times=[{spec.times[0]}..{spec.times[-1]}]")
        if spec.kind == "hard":
            print(f"  value c = {spec.value!r}")
        elif spec.kind == "soft":
            print(f"  shift = {[repr(s) for s in spec.shift]}")
        else:
            print(f"  profile = {spec.profile.kind}, params = {list(spec.profile.params)}")
        print(f"query: var={sample.query.query_var} time={sample.query.query_time} "
              f"target={sample.query.target_value!r} class={cls}")
        print("edges (lag: parent->child):")
        graphs = sample.tscm.graphs if sample.tscm.is_regime_switching else (sample.tscm.graph,)
        for ri, dag in enumerate(graphs):
            tag = f" regime {ri}" if len(graphs) > 1 else ""
            for k in range(dag.max_lag + 1):
                js, is_ = np.nonzero(dag.adjacency[k])
                edges = " ".join(f"{j}->{i}" for j, i in zip(js, is_))
                if edges:
                    print(f" {k}:{tag} {edges}")
        mechs = sample.tscm.mechanisms[0] if sample.tscm.is_regime_switching else sample.tscm.mechanisms
        print("mechanisms (regime 0):" if sample.tscm.is_regime_switching else "mechanisms:")
        for i, m in enumerate(mechs):
            print(f"  x{i}: {len(m.parents)} parents, bias {m.bias:.3f}, "
                  f"noise {sample.tscm.noise[i].family}({sample.tscm.noise[i].scale:.3f})")
        if spec.kind == "hard":
            t0 = spec.times[0]
            cell = sample.int.values[t0, spec.targets[0]]
            print(f"int series at first intervened cell (t={t0}, x{spec.targets[0]}): {cell!r}")
        if args.csv_out:
            with open(args.csv_out, "w") as fh:
                fh.write(dataset.paired_csv(sample))
            print(f"wrote {args.csv_out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ctpr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a corpus file")
    gen.add_argument("--config", help="prior config file (key = value lines)")
    gen.add_argument("--seed", type=int, default=None)
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--workers", type=int, default=0, help="0 = all cores")
    gen.add_argument("--out", required=True)
    gen.add_argument("--ood", action="store_true", help="out-of-distribution preset")
    gen.add_argument("--hard-only", action="store_true", dest="hard_only",
                     help="restrict the intervention mix to hard interventions")
    gen.set_defaults(func=cmd_generate)

    val = sub.add_parser("validate", help="print corpus statistics")
    val.add_argument("--in", dest="input", required=True)
    val.add_argument("--json", action="store_true")
    val.set_defaults(func=cmd_validate)

    ev = sub.add_parser("evaluate", help="run a baseline or score a predictions file")
    ev.add_argument("--in", dest="input", required=True)
    ev.add_argument("--method", required=True,
                    choices=["var", "mean", "oracle", "predictions-file"])
    ev.add_argument("--predictions", help="index,mean,std file (method=predictions-file)")
    ev.add_argument("--shuffled-control", action="store_true", dest="shuffled_control")
    ev.add_argument("--config", help="needed for --shuffled-control --method oracle")
    ev.add_argument("--seed", type=int, default=None, help="shuffle seed")
    ev.add_argument("--json", action="store_true", help="emit the report as JSON lines")
    ev.set_defaults(func=cmd_evaluate)

    exp = sub.add_parser("export", help="export records as JSON lines")
    exp.add_argument("--in", dest="input", required=True)
    exp.add_argument("--out", required=True)
    exp.add_argument("--start", type=int, default=0)
    exp.add_argument("--stop", type=int, default=None)
    exp.set_defaults(func=cmd_export)

    ins = sub.add_parser("inspect", help="dump one record")
    ins.add_argument("--in", dest="input", required=True)
    ins.add_argument("--index", type=int, required=True)
    ins.add_argument("--csv-out", dest="csv_out")
    ins.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
