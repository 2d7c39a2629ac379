"""Seeded benchmark grid over (instance, algorithm, iteration target, replicate).

Per-run randomness depends only on (master_seed, instance, replicate): every
algorithm in a replicate sees the same instance, the same oracle noise stream
and the same reporting sample. Changing the algorithm list therefore leaves
the other algorithms' results unchanged.

Outputs written by :func:`write_outputs`:

``runs.csv``
    one row per run, deterministic given config and master seed.
``timings.csv``
    wall-clock seconds per run (kept apart so ``runs.csv`` is reproducible).
``summary.csv`` / ``table.md``
    aggregates per (instance, algorithm, N).
``metadata.txt``
    the resolved configuration.
"""

import configparser
import csv
import io
import math
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import NamedTuple

import numpy as np

from . import algos
from .composite import BallIndicator, BoxIndicator
from .problems import PRESET_NAMES, make_oracle
from .rng import derive_seed, make_rng

ALGORITHMS = ("RSA", "DA", "S-1C", "S-Max1C", "M-1C", "M-Max1C")
RUN_COLUMNS = ("algorithm", "instance", "N", "seed", "obj", "std", "obj_last", "status")


class ConfigError(ValueError):
    pass


def _split(text):
    return [t.strip() for t in text.replace("\n", ",").split(",") if t.strip()]


@dataclass
class BenchConfig:
    """Benchmark grid. See :func:`parse_config` for the file format."""

    instances: list = field(default_factory=lambda: ["C1"])
    algorithms: list = field(default_factory=lambda: list(ALGORITHMS))
    iteration_targets: list = field(default_factory=lambda: [200, 1000])
    seeds: int = 30
    report_T: int = 10_000
    master_seed: int = 0
    workers: int = 1
    m_count: int = 10_000
    lambda_C: float = 10.0
    rsa_C: float = 0.1
    da_C: float = 10.0
    rsa_diameter_factor: float = 1.0
    prox_tol: float = 0.0

    def validate(self):
        if self.seeds < 1:
            raise ConfigError("seeds must be >= 1")
        if not self.iteration_targets or min(self.iteration_targets) < 2:
            raise ConfigError("iteration targets must be >= 2")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {a!r}; choose from {', '.join(ALGORITHMS)}")
        for name in self.instances:
            if name not in PRESET_NAMES:
                raise ConfigError(f"unknown instance {name!r}; choose from {', '.join(PRESET_NAMES)}")
        for a in self.algorithms:
            if a.startswith("M-") and min(self.iteration_targets) < 4:
                raise ConfigError("two-stage methods need iteration targets >= 4")
        if self.report_T < 2 or self.m_count < 1 or self.workers < 1:
            raise ConfigError("report_T >= 2, m_count >= 1 and workers >= 1 required")
        return self

    def to_text(self):
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                v = ", ".join(str(t) for t in v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


def parse_config(text):
    """Parse ``key = value`` lines (``#`` comments, list values comma separated).

    Keys: instances, algorithms, iteration_targets, seeds, report_T,
    master_seed, workers, m_count, lambda_C, rsa_C, da_C,
    rsa_diameter_factor, prox_tol (0 selects the solver default).
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), delimiters=("=",))
    cp.optionxform = str
    try:
        cp.read_string("[bench]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    sec = cp["bench"]
    cfg = BenchConfig()
    kinds = {f.name: f for f in fields(BenchConfig)}
    for key, raw in sec.items():
        if key not in kinds:
            raise ConfigError(f"unknown config key {key!r}")
        default = getattr(cfg, key)
        try:
            if isinstance(default, list):
                items = _split(raw)
                value = [int(t) for t in items] if key == "iteration_targets" else items
            elif isinstance(default, int):
                value = int(raw)
            else:
                value = float(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {raw!r}") from exc
        setattr(cfg, key, value)
    return cfg.validate()


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())


class BenchRow(NamedTuple):
    algorithm: str
    instance: str
    N: int
    seed: int
    obj: float
    std: float
    cpu_s: float
    obj_last: float = math.nan
    status: str = "ok"


def domain_radius(h):
    """Largest distance from the canonical start point to the feasible set."""
    if isinstance(h, BallIndicator):
        return h.radius
    if isinstance(h, BoxIndicator):
        return 0.5 * float(np.linalg.norm(h.upper - h.lower))
    raise ConfigError("benchmarks need a bounded feasible set")


def replicate_seed(master_seed, instance, replicate):
    return derive_seed(master_seed, "bench", instance, replicate)


def run_algorithm(name, oracle, N, D, M, seed, cfg):
    """Execute one algorithm with its default stepsize rule for N total iterations."""
    tol = cfg.prox_tol if cfg.prox_tol > 0 else None
    if name == "RSA":
        gamma = algos.rsa_gamma(D * cfg.rsa_diameter_factor, M, N, cfg.rsa_C)
        return algos.run_rsa(oracle, None, gamma, N, rng_seed=seed)
    if name == "DA":
        return algos.run_da(oracle, None, cfg.da_C, D, M, N, rng_seed=seed)
    B = "powers" if name.endswith("Max1C") else "single"
    if name.startswith("S-"):
        lam = algos.stepsize(algos.StepsizeRule("practical", D, M, cfg.lambda_C), N, 1)
        return algos.run_smax1c(oracle, None, lam, N, B, rng_seed=seed, tol=tol)
    I = N // 2
    lam = algos.stepsize(algos.StepsizeRule("practical", D, M, cfg.lambda_C), I, 2)
    return algos.run_mmax1c(oracle, None, lam, I, 2, B, rng_seed=seed, tol=tol)


def run_replicate(cfg, instance, replicate):
    """All (algorithm, N) cells of one replicate; failures become rows with status 'failed: ...'."""
    seed = replicate_seed(cfg.master_seed, instance, replicate)
    oracle = make_oracle(instance, seed)
    D = domain_radius(oracle.h)
    M = algos.estimate_m(oracle, count=cfg.m_count, rng_seed=seed)
    xis = oracle.draw(make_rng(seed, "report"), cfg.report_T)
    rows = []
    for name in cfg.algorithms:
        for N in cfg.iteration_targets:
            try:
                res = run_algorithm(name, oracle, N, D, M, seed, cfg)
                vals = np.asarray(oracle.values(res.averaged_iterate, xis))
                last = float(np.mean(oracle.values(res.last_iterate, xis)))
                obj, std = float(vals.mean()), float(vals.std(ddof=1))
                if not math.isfinite(obj):
                    raise FloatingPointError("non-finite objective estimate")
                rows.append(BenchRow(name, instance, N, seed, obj, std, res.wall_time, last))
            except Exception as exc:  # recorded, grid continues
                msg = f"failed: {type(exc).__name__}: {exc}".replace("\n", " ")
                rows.append(BenchRow(name, instance, N, seed, math.nan, math.nan, 0.0,
                                     math.nan, msg))
    return rows


def _algo_rank(name):
    return ALGORITHMS.index(name) if name in ALGORITHMS else len(ALGORITHMS)


def _order_key(row):
    return (row.instance, _algo_rank(row.algorithm), row.algorithm, row.N, row.seed)


def run_bench(cfg, workers=None):
    """Run the full grid and return rows sorted by (instance, algorithm, N, seed)."""
    cfg.validate()
    workers = cfg.workers if workers is None else workers
    tasks = [(inst, r) for inst in cfg.instances for r in range(cfg.seeds)]
    rows = []
    if workers <= 1:
        for inst, r in tasks:
            rows.extend(run_replicate(cfg, inst, r))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_replicate, cfg, inst, r) for inst, r in tasks]
            for fut in futures:
                rows.extend(fut.result())
    return sorted(rows, key=_order_key)


# --------------------------------------------------------------------------
# output
# --------------------------------------------------------------------------

def _fmt(x):
    return repr(float(x))


def runs_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUN_COLUMNS)
    for r in rows:
        w.writerow([r.algorithm, r.instance, r.N, r.seed, _fmt(r.obj), _fmt(r.std),
                    _fmt(r.obj_last), r.status])
    return buf.getvalue()


def timings_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("algorithm", "instance", "N", "seed", "cpu_s"))
    for r in rows:
        w.writerow([r.algorithm, r.instance, r.N, r.seed, f"{r.cpu_s:.6f}"])
    return buf.getvalue()


def read_rows(directory):
    """Rows from ``runs.csv`` joined with ``timings.csv`` when present."""
    timings = {}
    tpath = os.path.join(directory, "timings.csv")
    if os.path.exists(tpath):
        with open(tpath, newline="") as fh:
            for rec in csv.DictReader(fh):
                key = (rec["algorithm"], rec["instance"], int(rec["N"]), int(rec["seed"]))
                timings[key] = float(rec["cpu_s"])
    rows = []
    with open(os.path.join(directory, "runs.csv"), newline="") as fh:
        for rec in csv.DictReader(fh):
            key = (rec["algorithm"], rec["instance"], int(rec["N"]), int(rec["seed"]))
            rows.append(BenchRow(rec["algorithm"], rec["instance"], int(rec["N"]),
                                 int(rec["seed"]), float(rec["obj"]), float(rec["std"]),
                                 timings.get(key, math.nan), float(rec["obj_last"]),
                                 rec["status"]))
    return rows


class Summary(NamedTuple):
    instance: str
    algorithm: str
    N: int
    runs: int
    failed: int
    obj_mean: float
    obj_se: float
    std_mean: float
    cpu_mean: float


def summarize(rows):
    groups = defaultdict(list)
    for r in rows:
        groups[(r.instance, r.algorithm, r.N)].append(r)
    out = []
    for (inst, algo, N), rs in groups.items():
        ok = [r for r in rs if r.status == "ok"]
        objs = np.array([r.obj for r in ok])
        se = float(objs.std(ddof=1) / math.sqrt(objs.size)) if objs.size > 1 else math.nan
        out.append(Summary(
            inst, algo, N, len(rs), len(rs) - len(ok),
            float(objs.mean()) if objs.size else math.nan, se,
            float(np.mean([r.std for r in ok])) if ok else math.nan,
            float(np.mean([r.cpu_s for r in ok])) if ok else math.nan,
        ))
    return sorted(out, key=lambda s: (s.instance, _algo_rank(s.algorithm), s.algorithm, s.N))


def summary_csv(summaries):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(Summary._fields)
    for s in summaries:
        w.writerow([s.instance, s.algorithm, s.N, s.runs, s.failed, _fmt(s.obj_mean),
                    _fmt(s.obj_se), _fmt(s.std_mean), f"{s.cpu_mean:.3f}"])
    return buf.getvalue()


def render_table(rows):
    """Return (markdown, per-run CSV, aggregated CSV).

    The markdown holds one table per instance with mean Obj, mean per-run Std
    and mean CPU seconds per (algorithm, N); the lowest mean Obj for each N is
    set in bold.
    """
    if not rows:
        raise ValueError("no rows to render")
    summaries = summarize(rows)
    by_inst = defaultdict(list)
    for s in summaries:
        by_inst[s.instance].append(s)
    parts = []
    for inst, ss in by_inst.items():
        best = {}
        for s in ss:
            if math.isfinite(s.obj_mean) and s.obj_mean < best.get(s.N, math.inf):
                best[s.N] = s.obj_mean
        parts.append(f"### {inst}\n")
        parts.append("| ALG. | N | Obj | Std | CPU | runs | failed |")
        parts.append("|---|---|---|---|---|---|---|")
        for s in ss:
            obj = f"{s.obj_mean:.3f}"
            if s.obj_mean == best.get(s.N):
                obj = f"**{obj}**"
            parts.append(f"| {s.algorithm} | {s.N} | {obj} | {s.std_mean:.2f} | "
                         f"{s.cpu_mean:.1f} | {s.runs} | {s.failed} |")
        parts.append("")
    return "\n".join(parts), runs_csv(rows), summary_csv(summaries)


def write_outputs(rows, out_dir, cfg=None):
    os.makedirs(out_dir, exist_ok=True)
    md, per_run, agg = render_table(rows)
    outputs = {"runs.csv": per_run, "timings.csv": timings_csv(rows),
               "summary.csv": agg, "table.md": md}
    if cfg is not None:
        outputs["metadata.txt"] = (
            "# resolved benchmark configuration\n" + cfg.to_text()
            + "instance_sharing = instances, oracle noise and reporting samples are shared "
              "across algorithms within a replicate\n"
        )
    for name, text in outputs.items():
        with open(os.path.join(out_dir, name), "w", newline="") as fh:
            fh.write(text)
    return outputs


def all_ok(rows):
    return all(r.status == "ok" for r in rows)
