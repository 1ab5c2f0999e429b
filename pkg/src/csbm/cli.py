"""Command-line entry point: ``csbm <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .analysis import AXES, phase_grid, write_phase_csv, write_phase_svg
from .community import MATCHERS, recover_k, recover_pair, recover_single, recover_two_stage, overlap
from .graph import read_edge_list
from .harness import (PIPELINES, ExperimentConfig, build_manifest, load_config, run_sweep,
                      summarize, write_csv, write_manifest, write_summary_csv)
from .matching import SearchConfig, map_match_with_labels, match_exhaustive, match_local_search
from .model import (ModelParams, Scaling, edge_joint_law, generate_family, read_family, read_labels,
                    write_family, write_labels)
from .perm import read_permutation, write_permutation
from .streams import derive

EXIT_NOT_RECOVERED = 3

SWEEP_HELP = """\
CSV columns (one row per point and trial, after a '#' schema line):
  point            index of the sweep point (product of the axes, last axis fastest)
  <axis names>     the value of each swept parameter
  trial            trial index within the point
  success          1 if the pipeline's target event happened
  matched          estimated permutation equals the true one (matching/recovery pipelines)
  exact            estimated labels equal the truth up to sign
  overlap          |sum sigma_hat * sigma| / n
  anchor_size      vertices with no agreeing pair under the true permutation
                   (isolated vertices of the intersection graph)
  connected        intersection graph connected (intersection-connectivity)
  components       number of components of the intersection graph
  matched_region   number of vertices i with pi_hat(i) = pi_star(i)
  value            pgf-validate: z-score of recursion vs simulation
  error            exception text for a failed trial, else empty
  wall_ms          only with --include-time (breaks byte-identical reruns)
"""


def _add_model_args(p: argparse.ArgumentParser, defaults: bool = True) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--n", type=int, default=100 if defaults else None)
    g.add_argument("--alpha", type=float, default=8.0 if defaults else None)
    g.add_argument("--beta", type=float, default=1.0 if defaults else None)
    g.add_argument("--s", type=float, default=0.5 if defaults else None)
    g.add_argument("--k", dest="k_graphs", type=int, default=2 if defaults else None,
                   help="number of graphs in the family")
    g.add_argument("--scaling", choices=[s.value for s in Scaling], default="log" if defaults else None,
                   help="log: p = alpha log(n)/n; raw: p = alpha")


def _params(args) -> ModelParams:
    return ModelParams(args.n, args.alpha, args.beta, args.s, args.k_graphs, Scaling(args.scaling))


def _write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# subcommands -------------------------------------------------------------------


def cmd_generate(args) -> int:
    params = _params(args)
    family = generate_family(params, derive(args.seed, "family"))
    out = write_family(family, args.out)
    _write_json({"command": "generate", "version": __version__, "seed": args.seed,
                 "params": params.to_dict()}, out / "manifest.json")
    print(f"wrote family to {out} ({family.g1.num_edges} edges in g1)")
    return 0


def cmd_match(args) -> int:
    family = read_family(args.family) if args.family else None
    if family is not None:
        g1, g2 = family.g1, family.g2
        truth = family.pi_star[0]
    else:
        if not (args.g1 and args.g2):
            raise SystemExit("match: give --family or both --g1 and --g2")
        g1, g2 = read_edge_list(args.g1), read_edge_list(args.g2)
        truth = None
    if args.truth:
        truth = read_permutation(args.truth)

    t0 = time.perf_counter()
    if args.solver == "exhaustive":
        pi = match_exhaustive(g1, g2, limit=args.limit)
    elif args.solver == "local":
        cfg = SearchConfig(restarts=args.restarts, max_moves=args.max_moves, init=args.init, seed=args.seed)
        pi = match_local_search(g1, g2, cfg)
    else:
        if args.labels:
            labels = read_labels(args.labels)
        elif family is not None:
            labels = family.labels
        else:
            raise SystemExit("match --solver map needs --labels or --family")
        if family is not None:
            params = family.params
        else:
            if None in (args.alpha, args.beta, args.s):
                raise SystemExit("match --solver map needs --alpha, --beta and --s (or --family)")
            params = ModelParams(g1.n, args.alpha, args.beta, args.s, 2, Scaling(args.scaling or "raw"))
        pi = map_match_with_labels(g1, g2, labels, edge_joint_law(params), derive(args.seed, "map"),
                                   limit=args.limit)
    ms = (time.perf_counter() - t0) * 1000.0
    if args.out:
        write_permutation(pi, args.out)
    record = {"solver": args.solver, "runtime_ms": round(ms, 3)}
    if truth is not None:
        record["recovered"] = pi == truth
        record["correct_fraction"] = float(np.mean(pi.mapping == truth.mapping))
    print(json.dumps(record, sort_keys=True))
    if truth is not None and not record["recovered"]:
        return EXIT_NOT_RECOVERED
    return 0


def cmd_recover(args) -> int:
    if args.family:
        family = read_family(args.family)
    else:
        family = generate_family(_params(args), derive(args.seed, "family"))
    seed = derive(args.seed, "recover")
    t0 = time.perf_counter()
    search = SearchConfig(seed=args.seed)
    if args.pipeline == "single":
        sigma_hat = recover_single(family.g1, family.params, seed=seed)
        ov = overlap(sigma_hat, family.labels)
        result = {"overlap": ov, "exact": ov == 1.0}
    else:
        runner = {"pair": recover_pair, "k": recover_k, "two-stage": recover_two_stage}[args.pipeline]
        res = runner(family, args.matcher, seed=seed, search=search)
        sigma_hat = res.sigma_hat
        result = {"overlap": res.overlap, "exact": res.exact, "matched": res.matched}
        if res.matched_region is not None:
            result["matched_region"] = res.matched_region
    result["runtime_ms"] = round((time.perf_counter() - t0) * 1000.0, 3)
    result["pipeline"] = args.pipeline
    if args.out:
        write_labels(sigma_hat, args.out)
    print(json.dumps(result, sort_keys=True))
    return 0


def _parse_fixed(items) -> dict:
    out = {}
    for item in items or []:
        key, _, val = item.partition("=")
        if key not in AXES or not val:
            raise SystemExit(f"--fixed expects name=value with name in {AXES}, got {item!r}")
        out[key] = float(val)
    return out


def cmd_phase(args) -> int:
    xs = np.linspace(args.x_range[0], args.x_range[1], args.resolution)
    ys = np.linspace(args.y_range[0], args.y_range[1], args.resolution)
    grid = phase_grid(args.x, xs, args.y, ys, _parse_fixed(args.fixed), k=args.k)
    write_phase_csv(grid, args.out)
    if args.svg:
        write_phase_svg(grid, args.svg)
    counts = {}
    for r in grid.regions().ravel():
        counts[r] = counts.get(r, 0) + 1
    print(json.dumps({"cells": int(grid.regions().size), "regions": counts}, sort_keys=True))
    return 0


def _parse_axis(text: str):
    name, _, vals = text.partition("=")
    if not vals:
        raise argparse.ArgumentTypeError("axis must look like name=v1,v2,...")
    return name, [float(v) for v in vals.split(",")]


def cmd_sweep(args) -> int:
    overrides = {
        "pipeline": args.pipeline, "trials": args.trials, "seed": args.seed, "threads": args.threads,
        "n": args.n, "alpha": args.alpha, "beta": args.beta, "s": args.s,
        "k_graphs": args.k_graphs, "scaling": args.scaling, "matcher": args.matcher,
        "output": args.out,
    }
    if args.axis:
        overrides["axes"] = args.axis
    if args.include_time:
        overrides["include_time"] = True
    if args.config:
        config = load_config(args.config, overrides)
    else:
        config = ExperimentConfig(**{k: v for k, v in overrides.items() if v is not None})
    if not config.output:
        raise SystemExit("sweep: give --out or [output] csv in the config file")
    records = run_sweep(config)
    write_csv(records, config, config.output)
    summaries = summarize(records)
    if args.summary:
        write_summary_csv(summaries, config, args.summary)
    manifest_path = args.manifest or str(config.output) + ".manifest.json"
    write_manifest(build_manifest(config, config.output), manifest_path)
    for s in summaries:
        coords = " ".join(f"{name}={v:g}" for (name, _), v in zip(config.axes, s.coords))
        print(f"point {s.point} {coords} rate={s.rate:.3f} "
              f"[{s.lower:.3f}, {s.upper:.3f}] n={s.trials} errors={s.errors}")
    return 0


def cmd_validate(args) -> int:
    from .validate import run_checks

    ok = True
    for name, passed, detail in run_checks(seed=args.seed, quick=not args.full):
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    print(f"backend: {kernels.BACKEND}")
    return 0 if ok else 1


# parser ------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="csbm", description="Correlated SBM simulation toolkit.")
    ap.add_argument("--version", action="version", version=f"csbm {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a correlated family and write it to a directory")
    _add_model_args(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="family directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("match", help="estimate the permutation aligning two graphs",
                       epilog=f"exit status: 0 recovered (or no truth given), {EXIT_NOT_RECOVERED} not recovered")
    p.add_argument("--family", help="family directory (supplies graphs, truth, labels)")
    p.add_argument("--g1", help="edge list of the first graph")
    p.add_argument("--g2", help="edge list of the second graph")
    p.add_argument("--truth", help="permutation file with the true alignment")
    p.add_argument("--labels", help="label file for --solver map")
    p.add_argument("--solver", choices=["exhaustive", "local", "map"], default="exhaustive")
    p.add_argument("--limit", type=int, default=9, help="largest n for exhaustive/map scans")
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--max-moves", type=int, default=None)
    p.add_argument("--init", choices=["profile", "degree", "identity"], default="profile")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--s", type=float)
    p.add_argument("--scaling", choices=[s.value for s in Scaling])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the permutation here")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("recover", help="recover communities from a family")
    p.add_argument("--family", help="family directory; otherwise one is generated from the model flags")
    _add_model_args(p)
    p.add_argument("--pipeline", choices=["single", "pair", "k", "two-stage"], default="pair")
    p.add_argument("--matcher", choices=list(MATCHERS), default="oracle")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the estimated labels here")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("phase", help="classify a parameter grid into recovery regions")
    p.add_argument("--x", choices=AXES, default="alpha")
    p.add_argument("--y", choices=AXES, default="beta")
    p.add_argument("--x-range", type=float, nargs=2, default=(0.0, 40.0))
    p.add_argument("--y-range", type=float, nargs=2, default=(0.0, 40.0))
    p.add_argument("--fixed", action="append", help="name=value for the third parameter, e.g. s=0.5")
    p.add_argument("--resolution", type=int, default=100)
    p.add_argument("--k", type=int, default=2, help="graph count for the k_union column")
    p.add_argument("--out", required=True, help="CSV path")
    p.add_argument("--svg", help="optional SVG heat map")
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("sweep", help="run a seeded Monte Carlo sweep",
                       formatter_class=argparse.RawDescriptionHelpFormatter, epilog=SWEEP_HELP)
    p.add_argument("--config", help="INI config file (see csbm.harness.load_config)")
    p.add_argument("--pipeline", choices=PIPELINES)
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--axis", action="append", type=_parse_axis, help="name=v1,v2,... (repeatable)")
    p.add_argument("--matcher", choices=list(MATCHERS))
    _add_model_args(p, defaults=False)
    p.add_argument("--out", help="record CSV path")
    p.add_argument("--summary", help="per-point summary CSV path")
    p.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
    p.add_argument("--include-time", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="run the built-in consistency checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--full", action="store_true", help="larger sample sizes")
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"csbm {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
