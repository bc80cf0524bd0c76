"""Command-line interface.

Subcommands: generate, perturb, align, baseline, evaluate, sweep. Config
files (JSON) carry algorithm parameters; flags carry file paths and the
seed override. Exit codes: 0 success, 1 usage error, 2 data error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import io as rio
from .core import (
    DegenerateConfigurationError,
    GraphFormatError,
    ObjectiveWeights,
    RigidAlignError,
    edge_overlap,
    node_overlap,
    overlap_fraction,
)
from .emloop import BootstrapSpec, EmConfig, PriorSpec, regular_align_baseline, rigid_align
from .experiments import SweepGrid, run_sweep
from .netalign import AlignerConfig
from .procrustes import rigidity_metric
from .synth import GenConfig, Gnp, PerturbConfig, PreferentialAttachment, generate, perturb

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


class ConfigError(Exception):
    pass


def _load_config(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return cfg


def _only_keys(d: dict, allowed, where: str):
    extra = set(d) - set(allowed)
    if extra:
        raise ConfigError(f"unknown {where} keys: {', '.join(sorted(extra))}")


def _gen_config(cfg: dict, seed=None) -> GenConfig:
    _only_keys(cfg, {"grid_extent", "dim", "occupancy_p", "model", "attach_order", "seed"},
               "generate config")
    model_cfg = dict(cfg.get("model", {"kind": "preferential_attachment"}))
    kind = model_cfg.pop("kind", "preferential_attachment")
    if kind == "preferential_attachment":
        _only_keys(model_cfg, {"m", "n0"}, "model")
        model = PreferentialAttachment(**model_cfg)
    elif kind == "gnp":
        _only_keys(model_cfg, {"p"}, "model")
        model = Gnp(**model_cfg)
    else:
        raise ConfigError(f"unknown model kind {kind!r}")
    try:
        return GenConfig(
            grid_extent=int(cfg.get("grid_extent", 10)),
            dim=int(cfg.get("dim", 3)),
            occupancy_p=float(cfg.get("occupancy_p", 0.5)),
            model=model,
            attach_order=cfg.get("attach_order", "random"),
            seed=int(cfg.get("seed", 0)) if seed is None else seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _perturb_config(cfg: dict, seed=None) -> PerturbConfig:
    _only_keys(cfg, {"theta_deg", "translation", "node_noise_scale",
                     "p_delete", "p_add", "seed"}, "perturb config")
    theta = cfg.get("theta_deg", 0.0)
    translation = cfg.get("translation", "random")
    if isinstance(translation, list):
        translation = tuple(translation)
    if isinstance(theta, list):
        theta = tuple(theta)
    try:
        return PerturbConfig(
            theta_deg=theta,
            translation=translation,
            node_noise_scale=float(cfg.get("node_noise_scale", 0.0)),
            p_delete=float(cfg.get("p_delete", 0.0)),
            p_add=float(cfg.get("p_add", 0.0)),
            seed=int(cfg.get("seed", 0)) if seed is None else seed,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _em_config(cfg: dict) -> EmConfig:
    _only_keys(cfg, {"weights", "prior", "bootstrap", "max_iters", "min_iters",
                     "overlap_tol", "tol_mode", "aligner"}, "alignment config")
    try:
        weights = ObjectiveWeights(**cfg.get("weights", {}))
        prior_cfg = dict(cfg.get("prior", {}))
        prior = PriorSpec(
            variant=prior_cfg.pop("variant", "knn"),
            k=int(prior_cfg.pop("k", 10)),
            epsilon=prior_cfg.pop("epsilon", None),
        )
        _only_keys(prior_cfg, set(), "prior")
        boot_cfg = dict(cfg.get("bootstrap", {}))
        variant = boot_cfg.pop("variant", "distance_profile")
        external = None
        if variant == "file":
            path = boot_cfg.pop("path", None)
            if path is None:
                raise ConfigError("bootstrap variant 'file' needs a 'path'")
            external = rio.read_prior(path)
            variant = "external"
        bootstrap = BootstrapSpec(
            variant=variant,
            bins=int(boot_cfg.pop("bins", 32)),
            k=int(boot_cfg.pop("k", 10)),
            prior=external,
        )
        _only_keys(boot_cfg, set(), "bootstrap")
        aligner = AlignerConfig(**cfg.get("aligner", {}))
        return EmConfig(
            weights=weights,
            prior=prior,
            bootstrap=bootstrap,
            max_iters=int(cfg.get("max_iters", 20)),
            min_iters=int(cfg.get("min_iters", 2)),
            overlap_tol=float(cfg.get("overlap_tol", 0.001)),
            tol_mode=cfg.get("tol_mode", "relative"),
            aligner=aligner,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad alignment config: {exc}") from exc


def _cmd_generate(args) -> int:
    cfg = _gen_config(_load_config(args.config), seed=args.seed)
    g = generate(cfg)
    rio.write_graph(g, args.out_edges, args.out_coords)
    print(f"generated graph: n={g.n}, edges={g.num_edges}", file=sys.stderr)
    return EXIT_OK


def _cmd_perturb(args) -> int:
    cfg = _perturb_config(_load_config(args.config), seed=args.seed)
    g = rio.read_graph(args.in_edges, args.in_coords)
    h, truth = perturb(g, cfg)
    rio.write_graph(h, args.out_edges, args.out_coords)
    rio.write_matching(truth, args.out_truth)
    print(f"perturbed graph: n={h.n}, edges={h.num_edges}", file=sys.stderr)
    return EXIT_OK


def _run_alignment(args, runner) -> int:
    cfg = _em_config(_load_config(args.config)) if args.config else EmConfig()
    a = rio.read_graph(args.a_edges, args.a_coords)
    b = rio.read_graph(args.b_edges, args.b_coords)
    truth = rio.read_matching(args.truth) if args.truth else None
    report = runner(a, b, cfg, truth=truth)
    rio.write_matching(report.best_matching, args.out_matching)
    if args.out_transform:
        rio.write_transform(report.best_transform, args.out_transform)
    if args.out_report:
        rio.write_report(report, args.out_report)
    last = report.iterations[-1]
    print(f"iterations={len(report.iterations)} converged={report.converged} "
          f"edge_overlap={last.edge_overlap} "
          f"overlap_fraction={last.overlap_fraction:.6g}", file=sys.stderr)
    return EXIT_OK


def _cmd_align(args) -> int:
    return _run_alignment(args, rigid_align)


def _cmd_baseline(args) -> int:
    return _run_alignment(args, regular_align_baseline)


def _cmd_evaluate(args) -> int:
    a = rio.read_graph(args.a_edges, args.a_coords)
    b = rio.read_graph(args.b_edges, args.b_coords)
    m = rio.read_matching(args.matching)
    print(f"matched {m.size}")
    print(f"edge_overlap {edge_overlap(a, b, m)}")
    print(f"overlap_fraction {overlap_fraction(a, b, m):.17g}")
    if args.truth:
        truth = rio.read_matching(args.truth)
        print(f"node_overlap {node_overlap(m, truth):.17g}")
    print(f"rigidity_residual {rigidity_metric(a, b, m):.17g}")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _load_config(args.config)
    _only_keys(cfg, {"gen", "align", "grid", "trials", "seed"}, "sweep config")
    gen_cfg = _gen_config(cfg.get("gen", {}))
    em_cfg = _em_config(cfg.get("align", {}))
    grid_cfg = dict(cfg.get("grid", {}))
    _only_keys(grid_cfg, {"edge_noise_pct", "node_noise_pct", "theta_deg"}, "grid")
    grid = SweepGrid(
        edge_noise_pct=tuple(grid_cfg.get("edge_noise_pct", SweepGrid.edge_noise_pct)),
        node_noise_pct=tuple(grid_cfg.get("node_noise_pct", SweepGrid.node_noise_pct)),
        theta_deg=tuple(grid_cfg.get("theta_deg", SweepGrid.theta_deg)),
    )
    trials = int(cfg.get("trials", 5))
    base_seed = int(cfg.get("seed", 0)) if args.seed is None else args.seed
    rows = run_sweep(gen_cfg, grid, trials, em_cfg, base_seed=base_seed,
                     jobs=args.jobs, out_dir=args.out_dir)
    n_err = sum(1 for r in rows if r.get("error"))
    print(f"sweep complete: {len(rows)} rows ({n_err} errors) -> {args.out_dir}",
          file=sys.stderr)
    return EXIT_OK


def _add_graph_pair_flags(p):
    p.add_argument("--a-edges", required=True)
    p.add_argument("--a-coords", required=True)
    p.add_argument("--b-edges", required=True)
    p.add_argument("--b-coords", required=True)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rigidalign",
                     description="Joint topological and rigid-body graph alignment")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a synthetic spatial graph")
    p.add_argument("--config", required=True)
    p.add_argument("--out-edges", required=True)
    p.add_argument("--out-coords", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("perturb", help="noise and relabel a graph, keeping ground truth")
    p.add_argument("--in-edges", required=True)
    p.add_argument("--in-coords", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--out-edges", required=True)
    p.add_argument("--out-coords", required=True)
    p.add_argument("--out-truth", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_perturb)

    for name, help_text, func in (
        ("align", "full alternating alignment", _cmd_align),
        ("baseline", "single-pass alignment from the bootstrap prior", _cmd_baseline),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_graph_pair_flags(p)
        p.add_argument("--config", default=None)
        p.add_argument("--truth", default=None)
        p.add_argument("--out-matching", required=True)
        p.add_argument("--out-transform", default=None)
        p.add_argument("--out-report", default=None)
        p.set_defaults(func=func)

    p = sub.add_parser("evaluate", help="score a matching against a graph pair")
    _add_graph_pair_flags(p)
    p.add_argument("--matching", required=True)
    p.add_argument("--truth", default=None)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("sweep", help="run the noise-sweep experiment grid")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (GraphFormatError, ConfigError, FileNotFoundError) as exc:
        print(f"rigidalign: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"rigidalign: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DegenerateConfigurationError, RigidAlignError, np.linalg.LinAlgError) as exc:
        print(f"rigidalign: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"rigidalign: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
