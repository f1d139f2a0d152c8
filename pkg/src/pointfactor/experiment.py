"""Reproducible experiments: config schema, per-run pipeline, summaries.

One config file fully determines a run.  Per-run seeds derive from the
master seed, every artifact writer is deterministic, and timestamps live
only in the manifest, so re-running a config reproduces the data
artifacts byte for byte.
"""

from __future__ import annotations

import concurrent.futures
import datetime
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__, analysis, fileio, forest, mnnmatch
from .clumping import ClumpingParams, build_hierarchy, enclosure_stats
from .degeneracy import Degeneracies
from .metric import BOX, DISK, TORUS, KINDS, MetricWindow
from .pointgen import (
    POISSON_ALGORITHM,
    PointConfiguration,
    check_non_equidistant,
    derive_seeds,
    enrich_descending_chains,
    perturbed_lattice,
    sample_poisson,
)

CONSTRUCTIONS = ("tree", "dfs", "msf", "clump-match", "mnn-match")
PROCESS_TYPES = ("poisson", "lattice", "enriched", "fixed")
STAGES = ("gen", "build", "analyze")

OUTPUT_ROOT_ENV = "POINTFACTOR_OUT"


class ConfigError(ValueError):
    """Raised when an experiment config fails validation."""


@dataclass
class WindowSpec:
    kind: str = TORUS
    dimension: int = 2
    extent: float = 10.0

    def build(self) -> MetricWindow:
        return MetricWindow(self.kind, self.dimension, float(self.extent))


@dataclass
class ProcessSpec:
    type: str = "poisson"
    intensity: float = 1.0
    chain_length: int = 5
    ratio: float = 0.5
    points: list | None = None


@dataclass
class AnalysisSpec:
    verify: bool = True
    non_equidistance: bool = False
    transports: list = field(default_factory=list)
    transport_cells: int = 4
    tail_radii: list = field(default_factory=list)
    chains: bool = False
    chain_pair_cap: int = 32
    enclosure: bool = False
    enclosure_levels: list = field(default_factory=lambda: [1, 2, 3, 4])
    enclosure_probe_radius: float = 1.0


@dataclass
class ExperimentConfig:
    window: WindowSpec = field(default_factory=WindowSpec)
    process: ProcessSpec = field(default_factory=ProcessSpec)
    constructions: list = field(default_factory=lambda: ["mnn-match"])
    analyses: AnalysisSpec = field(default_factory=AnalysisSpec)
    # pool for the leader election's third-point distance: the full
    # configuration or the contested member set
    tree_pool: str = "full"
    master_seed: int = 0
    runs: int = 1
    out_dir: str | None = None

    # -- validation ----------------------------------------------------

    def validate(self) -> None:
        if self.window.kind not in KINDS:
            raise ConfigError(f"unknown window kind {self.window.kind!r}")
        try:
            self.window.build()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.process.type not in PROCESS_TYPES:
            raise ConfigError(f"unknown process type {self.process.type!r}")
        if self.process.type in ("poisson", "enriched") and not self.process.intensity > 0:
            raise ConfigError("intensity must be strictly positive")
        if self.process.type == "lattice":
            if self.window.kind != TORUS:
                raise ConfigError("the lattice process requires a torus window")
            if self.window.extent != int(self.window.extent):
                raise ConfigError("the lattice process needs an integer torus side")
            if self.window.dimension not in (1, 2, 3):
                raise ConfigError("the lattice process supports d in {1, 2, 3}")
            if self.window.dimension == 2 and self.window.extent > 64:
                raise ConfigError("2-d lattices support sides up to 64")
        if self.tree_pool not in ("full", "members"):
            raise ConfigError("tree_pool must be 'full' or 'members'")
        if self.process.type == "enriched" and self.process.chain_length < 2:
            raise ConfigError("chain_length must be at least 2")
        if self.process.type == "enriched" and not 0 < self.process.ratio < 1:
            raise ConfigError("ratio must lie strictly between 0 and 1")
        if self.process.type == "fixed" and not self.process.points:
            raise ConfigError("the fixed process needs a points list")
        for c in self.constructions:
            if c not in CONSTRUCTIONS:
                raise ConfigError(
                    f"unknown construction {c!r}; choose from {CONSTRUCTIONS}"
                )
        for t in self.analyses.transports:
            if t not in analysis.TRANSPORT_RULES:
                raise ConfigError(
                    f"unknown transport rule {t!r}; choose from {analysis.TRANSPORT_RULES}"
                )
        if self.analyses.transports and self.window.kind != TORUS:
            raise ConfigError("mass transport analyses require a torus window")
        if list(self.analyses.tail_radii) != sorted(float(r) for r in self.analyses.tail_radii):
            raise ConfigError("tail_radii must be sorted ascending")
        if self.runs < 1:
            raise ConfigError("seed count (runs) must be at least 1")

    # -- (de)serialization ---------------------------------------------

    def to_dict(self) -> dict:
        return {
            "window": asdict(self.window),
            "process": {k: v for k, v in asdict(self.process).items() if v is not None},
            "constructions": list(self.constructions),
            "analyses": asdict(self.analyses),
            "tree_pool": self.tree_pool,
            "seeds": {"master": self.master_seed, "runs": self.runs},
            "output": {"directory": self.out_dir},
        }

    @staticmethod
    def from_dict(data: dict) -> "ExperimentConfig":
        window = WindowSpec(**data.get("window", {}))
        process = ProcessSpec(**data.get("process", {}))
        analyses = AnalysisSpec(**data.get("analyses", {}))
        seeds = data.get("seeds", {})
        output = data.get("output", {}) or {}
        cfg = ExperimentConfig(
            window=window,
            process=process,
            constructions=list(data.get("constructions", [])),
            analyses=analyses,
            tree_pool=data.get("tree_pool", "full"),
            master_seed=int(seeds.get("master", 0)),
            runs=int(seeds.get("runs", 1)),
            out_dir=output.get("directory"),
        )
        return cfg

    def config_hash(self) -> str:
        payload = self.to_dict()
        payload["output"] = {}  # the destination does not alter the data
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


def load_config(path) -> ExperimentConfig:
    try:
        data = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} is not a mapping")
    try:
        cfg = ExperimentConfig.from_dict(data)
    except TypeError as exc:
        raise ConfigError(f"bad config field: {exc}") from exc
    cfg.validate()
    return cfg


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=True))


# ----------------------------------------------------------------------
# Per-run pipeline
# ----------------------------------------------------------------------

def generate_points(config: ExperimentConfig, seed: int) -> PointConfiguration:
    window = config.window.build()
    p = config.process
    if p.type == "poisson":
        return sample_poisson(window, p.intensity, seed)
    if p.type == "lattice":
        return perturbed_lattice(window.dimension, int(window.extent), seed)
    if p.type == "enriched":
        base_seed, chain_seed = derive_seeds(seed, 2)
        base = sample_poisson(window, p.intensity, base_seed)
        return enrich_descending_chains(base, p.chain_length, p.ratio, chain_seed)
    if p.type == "fixed":
        return PointConfiguration(window, np.array(p.points, dtype=float))
    raise ConfigError(f"unknown process type {p.type!r}")


def _needs_hierarchy(constructions) -> bool:
    return any(c in constructions for c in ("tree", "dfs", "clump-match"))


def execute_run(config: ExperimentConfig, run_index: int, seed: int, out_root, stages) -> dict:
    """Run the requested stages for one seed, writing artifacts into
    ``out_root/run_XXXX``.  Returns the run's summary record."""
    run_dir = Path(out_root) / f"run_{run_index:04d}"
    run_dir.mkdir(parents=True, exist_ok=True)
    window = config.window.build()
    deg = Degeneracies()
    failures: list[str] = []
    report: dict = {"run": run_index, "seed": seed}

    if "gen" in stages:
        cfg = generate_points(config, seed)
        fileio.write_points(cfg, run_dir / "points.csv")
    else:
        points_file = run_dir / "points.csv"
        if not points_file.exists():
            raise ConfigError(f"{points_file} missing; run the gen stage first")
        cfg = fileio.read_points(points_file, window, rng_seed=seed)
    report["n_points"] = cfg.n
    # hard box boundaries break translation invariance; flag it in reports
    report["boundary_caveat"] = window.kind == BOX

    built: dict = {}
    if "build" in stages or "analyze" in stages:
        wanted = set(config.constructions)
        hierarchy = None
        if _needs_hierarchy(wanted):
            hierarchy = build_hierarchy(cfg, degeneracies=deg)
            built["hierarchy"] = hierarchy
        tree = roots = None
        if "tree" in wanted or "dfs" in wanted:
            tree, roots = forest.build_one_ended_tree(
                cfg, hierarchy, pool=config.tree_pool, degeneracies=deg, return_roots=True
            )
            built["tree"], built["roots"] = tree, roots
        if "dfs" in wanted and cfg.n:
            built["dfs"] = forest.dfs_order(tree, cfg, roots[0], degeneracies=deg)
        if "msf" in wanted:
            built["msf"] = forest.minimal_spanning_forest(cfg, degeneracies=deg)
        if "clump-match" in wanted:
            built["clump-match"] = forest.clump_greedy_matching(cfg, hierarchy, degeneracies=deg)
        if "mnn-match" in wanted:
            built["mnn-match"] = mnnmatch.iterated_mnn_matching(cfg, degeneracies=deg)

    if "build" in stages:
        if "hierarchy" in built:
            fileio.write_hierarchy(built["hierarchy"], run_dir / "hierarchy.csv")
            fileio.write_cutters(built["hierarchy"], run_dir / "cutters.csv")
        if "tree" in built:
            fileio.write_graph(built["tree"], run_dir / "tree.csv")
        if "dfs" in built:
            fileio.write_ordering(built["dfs"], run_dir / "dfs_order.csv")
        if "msf" in built:
            fileio.write_graph(built["msf"], run_dir / "msf.csv")
        if "clump-match" in built:
            fileio.write_matching(built["clump-match"], run_dir / "clump_match.csv")
        if "mnn-match" in built:
            fileio.write_matching(built["mnn-match"].matching, run_dir / "mnn_match.csv")
            fileio.write_mnn_rounds(built["mnn-match"], cfg, run_dir / "mnn_rounds.csv")

    if "analyze" in stages:
        _analyze_run(config, cfg, built, run_dir, report, failures, deg)

    report["degeneracies"] = deg.as_dict()
    report["failures"] = failures
    manifest = {
        "run": run_index,
        "seed": seed,
        "config_hash": config.config_hash(),
        "version": __version__,
        "poisson_algorithm": POISSON_ALGORITHM,
        "stages": sorted(stages),
        "degeneracies": deg.as_dict(),
        "generated_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    fileio.write_json(manifest, run_dir / "manifest.json")
    return report


def _analyze_run(config, cfg, built, run_dir, report, failures, deg) -> None:
    spec = config.analyses
    reports: dict = {}

    if spec.verify:
        if "tree" in built:
            g = analysis.verify_graph(built["tree"])
            single_top = built["hierarchy"].top_is_single_clump()
            expected_components = max(1, len(built["roots"])) if cfg.n else 0
            tree_ok = (
                g.acyclic
                and g.component_count == expected_components
                and len(built["tree"].edges) == cfg.n - expected_components
            )
            if cfg.n == 0:
                tree_ok = not built["tree"].edges
            reports["tree"] = {
                "connected": g.connected,
                "acyclic": g.acyclic,
                "components": g.component_count,
                "edges": len(built["tree"].edges),
                "max_degree": g.max_degree,
                "single_top_clump": single_top,
            }
            if not tree_ok:
                failures.append("tree-check")
        if "dfs" in built:
            order = built["dfs"]
            ok = sorted(order) == list(range(cfg.n))
            path = forest.ordering_path_graph(order, cfg.n)
            pg = analysis.verify_graph(path)
            ok = ok and pg.max_degree <= 2
            reports["dfs"] = {"is_permutation": ok, "path_max_degree": pg.max_degree}
            if not ok:
                failures.append("dfs-check")
        if "msf" in built:
            g = analysis.verify_graph(built["msf"])
            reports["msf"] = {
                "connected": g.connected,
                "acyclic": g.acyclic,
                "components": g.component_count,
                "max_degree": g.max_degree,
            }
        for name in ("clump-match", "mnn-match"):
            if name in built:
                matching = built[name].matching if name == "mnn-match" else built[name]
                m = analysis.verify_matching(matching, cfg.n)
                reports[name] = {
                    "perfect_up_to_parity": m.perfect_up_to_parity,
                    "unmatched": m.unmatched,
                }
                if name == "mnn-match":
                    reports[name]["rounds"] = built[name].rounds
                if not m.perfect_up_to_parity:
                    failures.append(f"parity:{name}")

    if spec.non_equidistance:
        neq = check_non_equidistant(cfg)
        reports["non_equidistance"] = {
            "holds": neq.holds,
            "witness": list(neq.witness) if neq.witness else None,
        }

    if spec.transports:
        hierarchy = built.get("hierarchy")
        rows = {}
        for rule in spec.transports:
            bal = analysis.mass_transport_balance(
                cfg, rule, spec.transport_cells, hierarchy=hierarchy, degeneracies=deg
            )
            rows[rule] = {
                "total_out": bal.total_out,
                "total_in": bal.total_in,
                "per_cell": bal.per_cell,
            }
        reports["transport"] = rows

    if spec.tail_radii:
        for name, fname in (("mnn-match", "survival_mnn.csv"), ("clump-match", "survival_clump.csv")):
            if name in built:
                matching = built[name].matching if name == "mnn-match" else built[name]
                table = analysis.edge_length_tail(matching, cfg, spec.tail_radii)
                fileio.write_survival(table, run_dir / fname)
                reports.setdefault("tail", {})[name] = [[r, f] for r, f in table]

    if spec.chains:
        chain = mnnmatch.find_descending_chains(cfg, spec.chain_pair_cap)
        fileio.write_chain_report(chain, run_dir / "chains.json")
        reports["chains"] = {"length": chain.length, "lower_bound": chain.lower_bound}

    if spec.enclosure:
        rows = enclosure_stats(
            [cfg], levels=tuple(spec.enclosure_levels), probe_radius=spec.enclosure_probe_radius
        )
        reports["enclosure"] = rows

    report["reports"] = reports
    fileio.write_json(reports, run_dir / "reports.json")


# ----------------------------------------------------------------------
# Ensemble driver
# ----------------------------------------------------------------------

@dataclass
class ExperimentOutcome:
    exit_code: int
    out_dir: str
    summary: dict


def _worker(args):
    config_dict, run_index, seed, out_root, stages = args
    config = ExperimentConfig.from_dict(config_dict)
    return execute_run(config, run_index, seed, out_root, stages)


def run_experiment(
    config: ExperimentConfig,
    stages=("gen", "build", "analyze"),
    jobs: int = 1,
    out_dir=None,
) -> ExperimentOutcome:
    """Run the whole ensemble and aggregate a summary.

    Exit code is 0 when every hard invariant held in every run, 1
    otherwise.  Config errors surface as :class:`ConfigError` before any
    file is written.
    """
    config.validate()
    out_root = Path(out_dir or config.out_dir or "out")
    stages = tuple(stages)
    for s in stages:
        if s not in STAGES:
            raise ConfigError(f"unknown stage {s!r}")
    out_root.mkdir(parents=True, exist_ok=True)
    seeds = derive_seeds(config.master_seed, config.runs)
    if jobs > 1:
        tasks = [
            (config.to_dict(), i, seeds[i], str(out_root), stages)
            for i in range(config.runs)
        ]
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            run_reports = list(pool.map(_worker, tasks))
    else:
        run_reports = [
            execute_run(config, i, seeds[i], out_root, stages) for i in range(config.runs)
        ]
    summary = _summarize(config, run_reports)
    if "analyze" in stages:
        fileio.write_json(summary, out_root / "summary.json")
    exit_code = 0 if summary["failure_count"] == 0 else 1
    return ExperimentOutcome(exit_code=exit_code, out_dir=str(out_root), summary=summary)


def _summarize(config: ExperimentConfig, run_reports: list[dict]) -> dict:
    failures = [f for r in run_reports for f in r.get("failures", [])]
    counts = [r["n_points"] for r in run_reports]
    deg_total = Degeneracies()
    for r in run_reports:
        d = r.get("degeneracies", {})
        deg_total.merge(Degeneracies(**d))
    summary: dict = {
        "config_hash": config.config_hash(),
        "master_seed": config.master_seed,
        "runs": len(run_reports),
        "mean_points": float(np.mean(counts)) if counts else 0.0,
        "failure_count": len(failures),
        "failures": failures,
        "degeneracies": deg_total.as_dict(),
        "boundary_caveat": config.window.kind == BOX,
    }
    rounds = [
        r["reports"]["mnn-match"]["rounds"]
        for r in run_reports
        if "reports" in r and "mnn-match" in r.get("reports", {})
    ]
    if rounds:
        summary["mnn_rounds_mean"] = float(np.mean(rounds))
    tree_max_deg = [
        r["reports"]["tree"]["max_degree"]
        for r in run_reports
        if "reports" in r and "tree" in r.get("reports", {})
    ]
    if tree_max_deg:
        summary["tree_max_degree"] = int(max(tree_max_deg))
    # average the survival curves across runs
    tails: dict[str, list] = {}
    for r in run_reports:
        for name, table in r.get("reports", {}).get("tail", {}).items():
            tails.setdefault(name, []).append(table)
    if tails:
        summary["tail"] = {
            name: [
                [tables[0][i][0], float(np.mean([t[i][1] for t in tables]))]
                for i in range(len(tables[0]))
            ]
            for name, tables in tails.items()
        }
    # merge the per-run enclosure rows
    enc_rows: dict[int, dict] = {}
    for r in run_reports:
        for row in r.get("reports", {}).get("enclosure", []):
            agg = enc_rows.setdefault(
                row["level"],
                {"level": row["level"], "runs": 0, "enclosed": 0.0, "intersected": 0.0, "skipped": False},
            )
            agg["skipped"] = agg["skipped"] or row["skipped"]
            if row["runs"]:
                agg["runs"] += row["runs"]
                agg["enclosed"] += row["enclosed_fraction"] * row["runs"]
                agg["intersected"] += row["intersect_fraction"] * row["runs"]
    if enc_rows:
        summary["enclosure"] = [
            {
                "level": k,
                "runs": v["runs"],
                "enclosed_fraction": v["enclosed"] / v["runs"] if v["runs"] else None,
                "intersect_fraction": v["intersected"] / v["runs"] if v["runs"] else None,
                "skipped": v["skipped"],
            }
            for k, v in sorted(enc_rows.items())
        ]
    return summary


# ----------------------------------------------------------------------
# Brute-force comparison suite (the `oracle` subcommand)
# ----------------------------------------------------------------------

def run_oracle_suite(master_seed: int = 0, trials: int = 25) -> dict:
    """Compare fast constructions against their brute-force counterparts
    on small random instances.  Returns per-check pass counts."""
    from .clumping import partition_by_pairwise_separation
    from .forest import minimal_spanning_forest, msf_cycle_oracle
    from .mnnmatch import find_descending_chains, longest_descending_chain_exhaustive

    seeds = derive_seeds(master_seed, trials * 3)
    results = {}

    windows = [
        MetricWindow("box", 2, 10.0),
        MetricWindow(TORUS, 2, 10.0),
        MetricWindow("box", 1, 10.0),
        MetricWindow(DISK, 2, 2.0),
    ]
    ok = 0
    for t in range(trials):
        rng = np.random.default_rng(seeds[t])
        w = windows[t % len(windows)]
        n = int(rng.integers(2, 10))
        cfg = PointConfiguration(w, w.sample_uniform(rng, n))
        greedy = minimal_spanning_forest(cfg)
        oracle = msf_cycle_oracle(cfg)
        ok += int(sorted(greedy.edges) == sorted(oracle.edges))
    results["msf_vs_cycle_oracle"] = {"passed": ok, "trials": trials}

    ok = 0
    for t in range(trials):
        rng = np.random.default_rng(seeds[trials + t])
        w = MetricWindow(TORUS, 2, 7.0)
        n = int(rng.integers(5, 40))
        cfg = PointConfiguration(w, w.sample_uniform(rng, n))
        params = ClumpingParams.default_for(w)
        h = build_hierarchy(cfg, params)
        oracle = partition_by_pairwise_separation(cfg, params)
        good = all(
            np.array_equal(h.labels[k], oracle[k]) for k in range(1, params.k_max + 1)
        )
        ok += int(good)
    results["hierarchy_vs_separation_oracle"] = {"passed": ok, "trials": trials}

    ok = 0
    for t in range(trials):
        rng = np.random.default_rng(seeds[2 * trials + t])
        w = MetricWindow("box", 2, 10.0)
        n = int(rng.integers(2, 9))
        cfg = PointConfiguration(w, w.sample_uniform(rng, n))
        dp = find_descending_chains(cfg, pair_cap=None)
        ex = longest_descending_chain_exhaustive(cfg)
        ok += int(dp.length == ex)
    results["chain_dp_vs_exhaustive"] = {"passed": ok, "trials": trials}

    results["ok"] = all(v["passed"] == v["trials"] for v in results.values() if isinstance(v, dict))
    return results
