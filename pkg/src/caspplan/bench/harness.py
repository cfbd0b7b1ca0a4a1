"""
Benchmark harness: run the planner over generated instances and tabulate.

Two protocols mirror the usual experiment layouts: ``fixed`` runs a single
horizon per family (``FIXED_HORIZON``), ``cumulative`` deepens from 0 up to the
maximum horizon and reports the accumulated time.  Unsolved instances show
``-`` in the table.  The JSON archive keeps timings under ``time`` keys only, so
that two runs can be compared with those keys removed.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from ..driver import DEFAULT_MAX_STEPS, PlannerConfig, plan
from ..pddl import ground, parse_domain, parse_problem
from ..validator import format_plan, simulate
from .domains import FAMILIES, FIXED_HORIZON, InstanceSpec, generate_instance

SCHEMA = 1
PROTOCOLS = ("fixed", "cumulative")
MISSING = "-"


@dataclass(frozen=True)
class BenchConfig:
    protocol: str = "fixed"
    timeout: float = 600.0
    max_steps: int = DEFAULT_MAX_STEPS
    jobs: int = 1

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if not self.timeout > 0 or self.jobs < 1:
            raise ValueError("timeout and jobs must be positive")


def planner_config(family: str, bc: BenchConfig) -> PlannerConfig:
    if bc.protocol == "fixed":
        return PlannerConfig(fixed_step=FIXED_HORIZON[family], timeout=bc.timeout)
    return PlannerConfig(max_steps=bc.max_steps, timeout=bc.timeout)


def run_instance(spec: InstanceSpec, bc: BenchConfig) -> dict:
    domain_text, problem_text = generate_instance(spec)
    dom = parse_domain(domain_text, source=f"{spec.name}-domain")
    g = ground(dom, parse_problem(problem_text, dom, source=spec.name))
    cfg = planner_config(spec.family, bc)
    res = plan(g, cfg)
    row = {"family": spec.family, "k": spec.scale, "instance": spec.name,
           "protocol": bc.protocol, "status": res.status, "horizon": res.horizon,
           "plan": None, "revalidated": None, "stats": res.to_json(timings=False)["stats"],
           "time": round(res.stats["time"]["total"], 3) if res.found else None}
    if res.found:
        row["plan"] = format_plan(res.plan)
        half = (cfg.granularity or 0.1) / 2
        row["revalidated"] = simulate(g, res.plan, half, cfg.tol).valid
    return row


def _run(args):
    return run_instance(*args)


def run_harness(families, scales, bc: BenchConfig | None = None) -> list:
    """One row per (family, k), sorted by family then k."""
    bc = bc or BenchConfig()
    for f in families:
        if f not in FAMILIES:
            raise ValueError(f"unknown family {f!r}")
    specs = [InstanceSpec(f, k) for f in families for k in scales]
    jobs = [(s, bc) for s in specs]
    if bc.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=bc.jobs) as ex:
            rows = list(ex.map(_run, jobs))
    else:
        rows = [_run(j) for j in jobs]
    return sorted(rows, key=lambda r: (r["family"], r["k"]))


def render_table(rows: list) -> str:
    """Families as rows, scales as columns, wall time in seconds or ``-``."""
    if not rows:
        return ""
    scales = sorted({r["k"] for r in rows})
    families = sorted({r["family"] for r in rows})
    cell = {(r["family"], r["k"]): r for r in rows}
    width = max(len(f) for f in families)
    head = " " * width + "".join(f"{k:>10}" for k in scales)
    lines = [head]
    for f in families:
        parts = []
        for k in scales:
            r = cell.get((f, k))
            parts.append(f"{r['time']:>10.2f}" if r and r["time"] is not None else f"{MISSING:>10}")
        lines.append(f"{f:<{width}}" + "".join(parts))
    return "\n".join(lines) + "\n"


def results_json(rows: list, bc: BenchConfig) -> dict:
    return {"schema": SCHEMA, "protocol": bc.protocol, "timeout": bc.timeout, "results": rows}


def strip_timings(obj):
    """Copy of a results document without any ``time`` entries."""
    if isinstance(obj, dict):
        return {k: strip_timings(v) for k, v in obj.items() if k != "time"}
    if isinstance(obj, list):
        return [strip_timings(v) for v in obj]
    return obj


def write_results(rows: list, bc: BenchConfig, out: str, plans_dir: str | None = None) -> None:
    with open(out, "w", encoding="utf-8") as fh:
        json.dump(results_json(rows, bc), fh, indent=2, sort_keys=True)
        fh.write("\n")
    if plans_dir:
        os.makedirs(plans_dir, exist_ok=True)
        for r in rows:
            if r["plan"] is not None:
                with open(os.path.join(plans_dir, f"{r['instance']}.plan"), "w",
                          encoding="utf-8") as fh:
                    fh.write(r["plan"])
