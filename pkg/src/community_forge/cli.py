"""Command-line front end.

Exit codes: 0 success/pass, 1 verification failed, 2 infeasible model,
64 usage or malformed input, 66 missing input file.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from . import equilibrium as eq
from . import filtering
from .errors import CommunityForgeError, ConstructionError, InvalidArgumentError, KernelValidationError
from .export import dumps, write_csv, write_json
from .geometry import Arc, torus_distance
from .kernels import KernelSpec
from .numerics import NumericsConfig
from .presets import CANONICAL
from .supply import supply_density

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INFEASIBLE = 2
EXIT_USAGE = 64
EXIT_NOINPUT = 66

SWEEP_PARAMS = ("c", "E_p", "E_q", "f.width", "g.width")
DEFAULT_FILTER_WIDTHS = (0.1, 0.2, 0.4)

log = logging.getLogger("community_forge")


class UsageError(Exception):
    pass


class MissingInput(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which is taken by "infeasible model"
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def load_schema(name: str) -> dict:
    text = resources.files("community_forge").joinpath("schemas").joinpath(f"{name}.schema.json").read_text()
    return json.loads(text)


def validate(obj: Any, name: str) -> None:
    jsonschema.validate(json.loads(dumps(obj)), load_schema(name))


def _read_json(path: Path) -> Any:
    if not path.is_file():
        raise MissingInput(f"cannot read {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed JSON ({exc})") from None


class RunConfig:
    def __init__(self, raw: dict[str, Any], args: argparse.Namespace):
        try:
            jsonschema.validate(raw, load_schema("config"))
        except jsonschema.ValidationError as exc:
            raise UsageError(f"invalid config: {exc.message}") from None
        try:
            self.params = eq.GlobalParams.from_dict(raw["params"])
            numerics = NumericsConfig.from_dict(raw.get("numerics"))
            if args.grid is not None:
                numerics = replace(numerics, y_grid_n=args.grid)
            if args.tol is not None:
                numerics = replace(numerics, tolerances=replace(numerics.tolerances, nash=args.tol))
        except (CommunityForgeError, TypeError) as exc:
            raise UsageError(f"invalid config: {exc}") from None
        self.numerics = numerics
        self.seed = args.seed if args.seed is not None else int(raw.get("seed", 0))
        self.output_dir = Path(args.out if args.out is not None else raw.get("output_dir", "out"))
        self.K = raw.get("K")
        self.n_agents = int(raw.get("n_agents", 200))
        self.filter_widths = tuple(raw.get("filter_widths", DEFAULT_FILTER_WIDTHS))
        self.raw = raw

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        if args.config is None:
            raw = {"params": CANONICAL.to_dict()}
        else:
            raw = _read_json(Path(args.config))
            if not isinstance(raw, dict):
                raise UsageError("config must be a JSON object")
        return cls(raw, args)


def structure_to_dict(structure: eq.CommunityStructure) -> dict[str, Any]:
    params = structure.params
    comms = []
    for k, c in enumerate(structure.communities):
        comms.append(
            {
                "index": k,
                "start": c.arc.start,
                "length": c.arc.length,
                "mid": c.mid,
                "alpha_C": c.alpha_C,
                "beta_C": c.beta_C,
                "total_d": c.utility.total_d,
                "total_s": c.utility.total_s,
                "total_formula": c.utility.total_formula,
            }
        )
    return {
        "K": structure.K,
        "arc_length": float(structure.arc_lengths[0]) if structure.equal_arcs else None,
        "max_interval_length": eq.max_interval_length(params),
        "params": params.to_dict(),
        "communities": comms,
    }


def load_structure(path: Path, cfg: RunConfig) -> eq.CommunityStructure:
    data = _read_json(path)
    try:
        jsonschema.validate(data, load_schema("structure"))
    except jsonschema.ValidationError as exc:
        raise UsageError(f"invalid structure file: {exc.message}") from None
    try:
        params = eq.GlobalParams.from_dict(data["params"])
        arcs = [Arc(float(c["start"]), float(c["length"]), params.L) for c in data["communities"]]
    except (CommunityForgeError, KeyError, TypeError) as exc:
        raise UsageError(f"invalid structure file: {exc}") from None
    return eq.build_structure(params, arcs, cfg.numerics)


def _structure_path(args, cfg: RunConfig) -> Path:
    return Path(args.structure) if args.structure else cfg.output_dir / "structure.json"


def cmd_construct(args, cfg: RunConfig) -> int:
    try:
        structure = eq.construct_covering(cfg.params, cfg.K, cfg.numerics)
    except ConstructionError as exc:
        diag = {"error": str(exc), "diagnosis": exc.diagnosis}
        write_json(cfg.output_dir / "diagnosis.json", diag)
        sys.stderr.write(dumps(diag))
        return EXIT_INFEASIBLE
    doc = structure_to_dict(structure)
    validate(doc, "structure")
    write_json(cfg.output_dir / "structure.json", doc)
    for k, c in enumerate(structure.communities):
        c.production.to_csv(cfg.output_dir / "communities" / f"community_{k:03d}_production.csv")
        c.utility.to_csv(cfg.output_dir / "communities" / f"community_{k:03d}_utility.csv")
    print(f"K={structure.K} arc_length={doc['arc_length']!r}")
    return EXIT_OK


def cmd_verify(args, cfg: RunConfig) -> int:
    structure = load_structure(_structure_path(args, cfg), cfg)
    n = args.n_agents if args.n_agents is not None else cfg.n_agents
    report = eq.verify_nash(structure, n, cfg.numerics.tolerances.nash, cfg.seed)
    doc = report.to_dict()
    validate(doc, "nash_report")
    write_json(cfg.output_dir / "nash_report.json", doc)
    print(f"{'PASS' if report.passed else 'FAIL'} max_relative_gain={report.max_relative_gain!r}")
    return EXIT_OK if report.passed else EXIT_FAIL


def _set_param(params: eq.GlobalParams, name: str, value: float) -> eq.GlobalParams:
    if name in ("c", "E_p", "E_q"):
        return params.replace(**{name: value})
    kernel = name.split(".")[0]
    spec: KernelSpec = getattr(params, kernel)
    return params.replace(**{kernel: KernelSpec(spec.family, spec.amplitude, value)})


def sweep_row(params: eq.GlobalParams, numerics: NumericsConfig) -> dict[str, Any]:
    """One sweep step; a single community stands in for its K rotated copies."""
    bound = eq.max_interval_length(params)
    row = {"max_interval_length": bound, "K": 0, "arc_length": float("nan"), "total_utility": float("nan"),
           "expert_delta_total": float("nan"), "t_C": float("nan"), "feasible": False}
    if params.peak_margin <= 0:
        return row
    K = eq.covering_count(params)
    comm = eq.build_community(Arc(-params.L, 2.0 * params.L / K, params.L), params, numerics)
    if not comm.production.fully_gated:
        return row
    plan = filtering.expert_routing_plan(comm, params)
    row.update(K=K, arc_length=comm.arc.length, total_utility=K * comm.utility.total_s,
               expert_delta_total=K * plan.delta_total, t_C=plan.t_C, feasible=True)
    return row


def cmd_sweep(args, cfg: RunConfig) -> int:
    if args.param not in SWEEP_PARAMS:
        raise UsageError(f"unknown sweep parameter {args.param!r}; choose from {', '.join(SWEEP_PARAMS)}")
    if args.steps < 1:
        raise UsageError("--steps must be >= 1")
    values = [args.start] if args.start == args.stop else list(np.linspace(args.start, args.stop, args.steps))
    header = ["value", "max_interval_length", "K", "arc_length", "total_utility", "expert_delta_total", "t_C", "feasible"]
    rows = []
    for v in values:
        try:
            params = _set_param(cfg.params, args.param, float(v))
        except CommunityForgeError as exc:
            raise UsageError(f"sweep value {v!r} rejected: {exc}") from None
        row = sweep_row(params, cfg.numerics)
        rows.append([float(v)] + [row[h] for h in header[1:]])
    write_csv(cfg.output_dir / f"sweep_{args.param}.csv", header, rows)
    print(f"{len(rows)} rows")
    return EXIT_OK


def _pick_community(structure: eq.CommunityStructure, index: int) -> eq.CommunityState:
    if not 0 <= index < structure.K:
        raise UsageError(f"--community must be in [0, {structure.K - 1}]")
    return structure.communities[index]


def cmd_filter_analysis(args, cfg: RunConfig) -> int:
    structure = load_structure(_structure_path(args, cfg), cfg)
    params = structure.params
    comm = _pick_community(structure, args.community)
    L = params.L
    n = cfg.numerics.y_grid_n + 1
    agents = []
    for w in cfg.filter_widths:
        h = KernelSpec("gaussian", 1.0, float(w))
        agent = filtering.optimal_filter_agent(comm, h, n, cfg.numerics)
        agents.append({"h": h.to_dict(), "agent": agent, "distance_to_mid": torus_distance(agent, comm.mid, L),
                       "grid_step": comm.arc.length / (n - 1)})
    tf = filtering.make_threshold_filter(comm, params.f)
    thr = filtering.filtered_total_utility(comm, tf)
    allpass = comm.utility.total_s
    rel = abs(thr - allpass) / abs(allpass) if allpass else abs(thr)
    plan = filtering.expert_routing_plan(comm, params)
    plan_doc = plan.to_dict()
    validate(plan_doc, "expert_plan")
    doc = {
        "community": args.community,
        "mid": comm.mid,
        "optimal_filter_agents": agents,
        "threshold": {"t0": tf.t, "degenerate": tf.degenerate, "total_threshold": thr,
                      "total_allpass": allpass, "relative_difference": rel},
        "expert_plan": plan_doc,
    }
    validate(doc, "filter_analysis")
    write_json(cfg.output_dir / "filter_analysis.json", doc)
    plan.to_csv(cfg.output_dir / "expert_gains.csv")
    print(f"threshold_vs_allpass={rel!r} expert_delta_total={plan.delta_total!r}")
    return EXIT_OK


def cmd_profile(args, cfg: RunConfig) -> int:
    path = _structure_path(args, cfg)
    if args.structure or path.is_file():
        structure = load_structure(path, cfg)
    else:
        try:
            structure = eq.construct_covering(cfg.params, cfg.K, cfg.numerics)
        except ConstructionError as exc:
            sys.stderr.write(dumps({"error": str(exc), "diagnosis": exc.diagnosis}))
            return EXIT_INFEASIBLE
    comm = _pick_community(structure, args.community)
    out = cfg.output_dir
    comm.demand.to_csv(out / "profile_demand.csv")
    comm.production.to_csv(out / "profile_production.csv")
    comm.utility.to_csv(out / "profile_utility.csv")
    supply_density(comm.production, numerics=cfg.numerics).to_csv(out / "profile_supply.csv")
    print(f"profiles written to {out}")
    return EXIT_OK


COMMANDS = {
    "construct": cmd_construct,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "filter-analysis": cmd_filter_analysis,
    "profile": cmd_profile,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (default: built-in canonical parameters)")
    common.add_argument("--out", help="output directory (default: config output_dir or ./out)")
    common.add_argument("--seed", type=int, help="seed for sampled agents")
    common.add_argument("--grid", type=int, help="producer grid size per community")
    common.add_argument("--tol", type=float, help="Nash deviation tolerance")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="community-forge", description="Information communities on a ring.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("construct", parents=[common], help="build the covering equilibrium")
    p = sub.add_parser("verify", parents=[common], help="best-response check of a structure")
    p.add_argument("--structure", help="structure.json (default: <out>/structure.json)")
    p.add_argument("--n-agents", type=int)
    p = sub.add_parser("sweep", parents=[common], help="sweep one parameter")
    p.add_argument("--param", required=True)
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--steps", type=int, default=20)
    for name in ("filter-analysis", "profile"):
        p = sub.add_parser(name, parents=[common])
        p.add_argument("--structure", help="structure.json (default: <out>/structure.json)")
        p.add_argument("--community", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = RunConfig.from_args(args)
        return COMMANDS[args.command](args, cfg)
    except MissingInput as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOINPUT
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (KernelValidationError, InvalidArgumentError) as exc:
        # parameters that parse but are not admissible for the model
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
