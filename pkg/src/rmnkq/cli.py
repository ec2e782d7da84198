"""Experiment runner: instance generation, runs, hyperparameter sweeps, reports, connectivity.

Every subcommand reads one JSON experiment spec (``--spec``) and writes into
an output directory (``--out`` or the spec's ``out``). Exit codes: 0 on
success, 1 if any cell failed or a refusal occurred, 2 for an invalid spec.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import platform
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from datetime import datetime, timezone
from importlib import metadata
from itertools import product
from pathlib import Path

import jsonschema
import numpy as np

from .analysis import (
    THRESHOLD,
    cached_exact_front,
    connectivity_sweep,
    lower_median,
    resolve_epistasis,
    write_connectivity_csv,
)
from .errors import RmnkError
from .evolutionary import GaConfig, nsga2_run, nsga3_run
from .landscape import RmnkConfig, dumps, load
from .qmoo import QmooHyperparams, optimize
from .trace import TRACE_COLUMNS, read_trace

log = logging.getLogger("rmnkq")

EXIT_OK, EXIT_FAILED, EXIT_SPEC = 0, 1, 2
NORMALIZE_MAX_N = 20

_count_or_npf = {
    "oneOf": [
        {"type": "integer", "minimum": 1},
        {"type": "string", "pattern": r"^[0-9]*\.?[0-9]+N_pf$"},
    ]
}
_int_list = {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1}
_num_list = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_grid = {
    "type": "object",
    "properties": {
        "n_vars": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "n_objectives": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
        "epistasis": {
            "type": "array",
            "items": {"oneOf": [{"type": "integer", "minimum": 0}, {"enum": ["N/2", "N-1"]}]},
            "minItems": 1,
        },
        "rho": _num_list,
        "seeds": _int_list,
    },
    "required": ["n_vars", "n_objectives", "epistasis"],
    "additionalProperties": False,
}
_algorithm = {
    "type": "object",
    "properties": {
        "name": {"enum": ["qmoo", "nsga2", "nsga3"]},
        "label": {"type": "string", "pattern": r"^[A-Za-z0-9_.+-]+$"},
        "n_shots": {"type": "integer", "minimum": 1},
        "n_most_prob": _count_or_npf,
        "layers": {"type": "integer", "minimum": 1},
        "use_archive": {"type": "boolean"},
        "use_substitution": {"type": "boolean"},
        "population_size": _count_or_npf,
        "crossover_probability": {"type": "number", "minimum": 0, "maximum": 1},
        "mutation_rate": {"type": "number", "minimum": 0, "maximum": 1},
        "divisions_outer": {"type": "integer", "minimum": 1},
    },
    "required": ["name"],
    "additionalProperties": False,
}
SPEC_SCHEMA = {
    "type": "object",
    "properties": {
        "out": {"type": "string"},
        "instances": {
            "type": "object",
            "properties": {
                "grid": _grid,
                "files": {"type": "array", "items": {"type": "string"}, "minItems": 1},
            },
            "minProperties": 1,
            "additionalProperties": False,
        },
        "algorithms": {"type": "array", "items": _algorithm, "minItems": 1},
        "seeds": _int_list,
        "budget": {
            "type": "object",
            "properties": {
                "max_evaluations": {"type": "integer", "minimum": 1},
                "max_iterations": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "threshold": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "normalize_max_n": {"type": "integer", "minimum": 1, "maximum": 26},
        "sweep": {
            "type": "object",
            "properties": {
                "n_shots": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
                "n_most_prob": {"type": "array", "items": _count_or_npf, "minItems": 1},
                "stop_at_threshold": {"type": "boolean"},
            },
            "required": ["n_shots", "n_most_prob"],
            "additionalProperties": False,
        },
        "report": {
            "type": "object",
            "properties": {
                "runs": {"type": "array", "items": {"type": "string"}, "minItems": 1},
                "svg": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "analyze": {
            "type": "object",
            "properties": {"grid": _grid, "seeds": _int_list},
            "required": ["grid", "seeds"],
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}
_REQUIRED = {
    "generate": ["instances"],
    "run": ["instances", "algorithms", "seeds"],
    "sweep": ["instances", "seeds", "sweep"],
    "report": [],
    "analyze": ["analyze"],
}


_QMOO_KEYS = {"n_shots", "n_most_prob", "layers", "use_archive", "use_substitution"}
_GA_KEYS = {"population_size", "crossover_probability", "mutation_rate", "divisions_outer"}


class SpecError(RmnkError):
    """Invalid experiment spec; maps to exit code 2."""


# -- spec handling ---------------------------------------------------------------


def load_spec(path, command: str) -> dict:
    """Parse and validate a spec file, raising :class:`SpecError` with the failing path."""
    path = Path(path)
    try:
        spec = json.loads(path.read_text())
    except OSError as exc:
        raise SpecError(f"cannot read spec {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecError(f"{path}: invalid JSON at byte {exc.pos}: {exc.msg}") from exc
    validator = jsonschema.Draft202012Validator(SPEC_SCHEMA)
    errors = sorted(validator.iter_errors(spec), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        where = "/".join(map(str, e.absolute_path)) or "<root>"
        raise SpecError(f"{path}: at {where}: {e.message}")
    missing = [k for k in _REQUIRED[command] if k not in spec]
    if missing:
        raise SpecError(f"{path}: '{command}' needs the key(s) {', '.join(missing)}")
    for i, block in enumerate(spec.get("algorithms", [])):
        allowed = _QMOO_KEYS if block["name"] == "qmoo" else _GA_KEYS
        extra = sorted(set(block) - allowed - {"name", "label"})
        if extra:
            raise SpecError(f"{path}: at algorithms/{i}: {block['name']} does not take {', '.join(extra)}")
    return spec


def spec_hash(spec: dict) -> str:
    return hashlib.sha256(json.dumps(spec, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


def _versions() -> dict:
    out = {"python": platform.python_version(), "numpy": np.__version__}
    for dist in ("scipy", "jsonschema", "artifact"):
        try:
            out[dist] = metadata.version(dist)
        except metadata.PackageNotFoundError:
            out[dist] = None
    return out


def instance_name(config: RmnkConfig) -> str:
    return f"rmnk_N{config.n_vars}_M{config.n_objectives}_K{config.epistasis}_rho{config.rho!r}_s{config.seed}.json"


def grid_configs(grid: dict, seed_offset: int = 0) -> list[RmnkConfig]:
    """Cross product of an instance grid; ``rho`` defaults to ``[0.0]`` and seeds to ``[0]``."""
    configs = []
    for m, n, k, rho, seed in product(
        grid["n_objectives"], grid["n_vars"], grid["epistasis"], grid.get("rho", [0.0]), grid.get("seeds", [0])
    ):
        configs.append(RmnkConfig(n, m, resolve_epistasis(k, n), float(rho), seed + seed_offset))
    return configs


def _write_manifest(out: Path, command: str, spec: dict, seed_offset: int, started: float, cells: list[dict]) -> Path:
    manifest = {
        "command": command,
        "spec_sha256": spec_hash(spec),
        "seed_offset": seed_offset,
        "versions": _versions(),
        "started_utc": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "wall_time_s": time.time() - started,
        "n_cells": len(cells),
        "n_failed": sum(c["status"] != "ok" for c in cells),
        "cells": cells,
    }
    path = out / f"{command}_manifest.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return path


def _map(fn, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))


# -- instances ---------------------------------------------------------------------


def _materialize_instances(spec: dict, out: Path, seed_offset: int, force: bool | None) -> list[Path]:
    """Instance files referenced by the spec; grid instances are generated into ``out/instances``.

    ``force=None`` reuses existing files that match; ``False`` refuses to touch
    them; ``True`` overwrites.
    """
    block = spec["instances"]
    paths = []
    for name in block.get("files", []):
        p = Path(name)
        if not p.exists():
            raise SpecError(f"instance file {p} does not exist")
        paths.append(p)
    if "grid" in block:
        configs = grid_configs(block["grid"], seed_offset)
        target = out / "instances"
        target.mkdir(parents=True, exist_ok=True)
        planned = [(target / instance_name(c), c) for c in configs]
        if force is False:
            clash = [str(p) for p, _ in planned if p.exists()]
            if clash:
                raise FileExistsError(f"{len(clash)} instance file(s) exist, e.g. {clash[0]}; use --force")
        from .landscape import generate

        for p, config in planned:
            text = dumps(generate(config))
            if force or not p.exists():
                p.write_text(text)
            elif p.read_text() != text:
                raise SpecError(f"{p} exists with different content; use --force")
            paths.append(p)
    return paths


def _front_info(landscape, out: Path, max_n: int) -> tuple[float | None, int | None]:
    if landscape.n_vars > max_n:
        return None, None
    ef = cached_exact_front(landscape, out / "fronts")
    return ef.hv_ideal, ef.n_pf


_NPF = re.compile(r"^([0-9]*\.?[0-9]+)N_pf$")


def resolve_count(value, n_pf: int | None, even: bool = False) -> int:
    """Integers pass through; ``"<f>N_pf"`` becomes ``round(f * N_pf)`` (at least 1, or 2 and even)."""
    if isinstance(value, int):
        return value
    match = _NPF.match(str(value))
    if not match:
        raise SpecError(f"cannot interpret count {value!r}")
    if n_pf is None:
        raise SpecError(f"{value!r} needs the exact front; raise normalize_max_n or use an integer")
    count = int(round(float(match.group(1)) * n_pf))
    if even:
        return max(2, count + (count % 2))
    return max(1, count)


def algorithm_label(block: dict) -> str:
    if "label" in block:
        return block["label"]
    name = block["name"]
    if name == "qmoo":
        arch = "+archive" if block.get("use_archive", True) else ""
        sub = "+substitution" if block.get("use_substitution", True) else ""
        return f"qmoo{arch}{sub}_shots{block.get('n_shots', 1024)}_mp{block.get('n_most_prob', 20)}"
    return f"{name}_pop{block.get('population_size', 'auto')}"


# -- cell execution (top-level so that worker processes can pickle it) -------------


def run_cell(job: dict) -> dict:
    """Run one (instance, algorithm, seed) cell and write its trace; never raises."""
    result = {"trace": job["trace_path"], "instance": job["instance_path"], "label": job["label"], "seed": job["seed"]}
    try:
        landscape = load(job["instance_path"])
        block = dict(job["algorithm"])
        name = block.pop("name")
        block.pop("label", None)
        budget = job["budget"]
        if name == "qmoo":
            hp = QmooHyperparams(
                seed=job["seed"],
                max_iterations=budget.get("max_iterations", 10**9 if "max_evaluations" in budget else 300),
                max_evaluations=budget.get("max_evaluations"),
                stop_hv=job.get("stop_hv"),
                **block,
            )
            trace = optimize(landscape, hp)
        else:
            config = GaConfig(
                seed=job["seed"],
                max_evaluations=budget.get("max_evaluations", 100_000),
                stop_hv=job.get("stop_hv"),
                **block,
            )
            trace = (nsga2_run if name == "nsga2" else nsga3_run)(landscape, config)
        trace.settings = {**trace.settings, "label": job["label"], "instance": landscape.config.to_dict(), "hv_ideal": job["hv_ideal"]}
        path = Path(job["trace_path"])
        path.parent.mkdir(parents=True, exist_ok=True)
        trace.write(path, hv_ideal=job["hv_ideal"])
        result.update(status="ok", final_hv=trace.final_hv, fevals=trace.total_fevals)
    except Exception as exc:  # isolate the failure to this cell
        result.update(status="failed", error=f"{type(exc).__name__}: {exc}")
    return result


def _jobs(spec, paths, out, seed_offset, algorithms, subdir, stop_threshold=None) -> list[dict]:
    max_n = spec.get("normalize_max_n", NORMALIZE_MAX_N)
    budget = spec.get("budget", {})
    jobs = []
    for path in paths:
        landscape = load(path)
        hv_ideal, n_pf = _front_info(landscape, out, max_n)
        for block in algorithms:
            resolved = dict(block)
            for key, even in (("n_most_prob", False), ("population_size", True)):
                if key in resolved:
                    resolved[key] = resolve_count(resolved[key], n_pf, even)
            label = algorithm_label(block)
            for seed in spec["seeds"]:
                seed = seed + seed_offset
                jobs.append(
                    {
                        "instance_path": str(path),
                        "algorithm": resolved,
                        "label": label,
                        "seed": seed,
                        "budget": budget,
                        "hv_ideal": hv_ideal,
                        "n_pf": n_pf,
                        "stop_hv": None if stop_threshold is None or hv_ideal is None else stop_threshold * hv_ideal,
                        "trace_path": str(out / subdir / landscape.instance_id / label / f"seed{seed}.csv"),
                        "instance_config": landscape.config.to_dict(),
                        "instance_id": landscape.instance_id,
                    }
                )
    return jobs


# -- subcommands ---------------------------------------------------------------------


def cmd_generate(spec: dict, out: Path, workers: int = 1, force: bool = False, seed_offset: int = 0) -> int:
    if "grid" not in spec["instances"]:
        raise SpecError("generate needs instances.grid")
    paths = _materialize_instances({"instances": {"grid": spec["instances"]["grid"]}}, out, seed_offset, force)
    for p in paths:
        load(p)
    log.info("wrote %d instance file(s) to %s", len(paths), out / "instances")
    return EXIT_OK


def cmd_run(spec: dict, out: Path, workers: int = 1, force: bool = False, seed_offset: int = 0) -> int:
    started = time.time()
    paths = _materialize_instances(spec, out, seed_offset, None if not force else True)
    jobs = _jobs(spec, paths, out, seed_offset, spec["algorithms"], "traces")
    results = _map(run_cell, jobs, workers)
    for r in results:
        if r["status"] != "ok":
            log.error("cell %s seed %s failed: %s", r["label"], r["seed"], r["error"])
    _write_manifest(out, "run", spec, seed_offset, started, results)
    return EXIT_FAILED if any(r["status"] != "ok" for r in results) else EXIT_OK


SWEEP_COLUMNS = (
    "instance_id",
    "n_vars",
    "n_objectives",
    "epistasis",
    "rho",
    "n_shots",
    "n_most_prob",
    "n_most_prob_value",
    "collapsed_to",
    "runs",
    "successes",
    "success_rate",
    "median_iterations",
    "median_fevals",
)


def sweep_cells(n_shots_grid, n_most_prob_grid, n_pf: int) -> list[dict]:
    """Grid cells with their effective ``n_most_prob``.

    A cell with fewer shots than its candidate count is represented by the
    ``1.0N_pf`` setting at the same shot count.
    """
    cells = []
    for shots, mp in product(n_shots_grid, n_most_prob_grid):
        value = resolve_count(mp, n_pf)
        collapsed = ""
        if shots < value:
            value, collapsed = resolve_count("1.0N_pf", n_pf), "1.0N_pf"
        cells.append({"n_shots": shots, "n_most_prob": str(mp), "n_most_prob_value": value, "collapsed_to": collapsed})
    return cells


def threshold_stats(traces: list, threshold: float) -> dict:
    """Success rate and lower medians of iterations/evaluations to ``threshold``; censored runs count as infinity."""
    its, fes = [], []
    for t in traces:
        hits = np.flatnonzero(np.asarray(t.hv_norm) >= threshold)
        its.append(float(t.iteration[hits[0]]) if hits.size else np.inf)
        fes.append(float(t.fevals[hits[0]]) if hits.size else np.inf)
    successes = int(np.isfinite(its).sum())
    return {
        "runs": len(traces),
        "successes": successes,
        "success_rate": successes / len(traces) if traces else 0.0,
        "median_iterations": lower_median(its) if traces else np.inf,
        "median_fevals": lower_median(fes) if traces else np.inf,
    }


def best_settings(rows: list[dict]) -> list[dict]:
    """Per instance, the cell with the fewest median evaluations among those with success rate >= 0.5."""
    best: dict[str, dict] = {}
    for row in rows:
        if row["success_rate"] < 0.5:
            continue
        key = row["instance_id"]
        if key not in best or (row["median_fevals"], row["median_iterations"]) < (best[key]["median_fevals"], best[key]["median_iterations"]):
            best[key] = row
    return list(best.values())


def _write_rows(path: Path, columns, rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for row in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def cmd_sweep(spec: dict, out: Path, workers: int = 1, force: bool = False, seed_offset: int = 0) -> int:
    started = time.time()
    threshold = spec.get("threshold", THRESHOLD)
    grid = spec["sweep"]
    stop = threshold if grid.get("stop_at_threshold", True) else None
    base = next((a for a in spec.get("algorithms", []) if a["name"] == "qmoo"), {"name": "qmoo"})
    paths = _materialize_instances(spec, out, seed_offset, None if not force else True)
    jobs, cell_of_job = [], []
    cells_by_instance = {}
    for path in paths:
        landscape = load(path)
        if landscape.n_vars > 26:
            raise SpecError(f"sweep needs exact fronts; {path} has N={landscape.n_vars}")
        _, n_pf = _front_info(landscape, out, 26)
        cells = sweep_cells(grid["n_shots"], grid["n_most_prob"], n_pf)
        cells_by_instance[str(path)] = (landscape, cells)
        unique = {}
        for cell in cells:
            unique.setdefault((cell["n_shots"], cell["n_most_prob_value"]), cell)
        for (shots, mp), _ in unique.items():
            block = {
                **{k: v for k, v in base.items() if k != "label"},
                "n_shots": shots,
                "n_most_prob": mp,
                "label": f"sweep_shots{shots}_mp{mp}",
            }
            sub_spec = {**spec, "normalize_max_n": 26}
            new = _jobs(sub_spec, [path], out, seed_offset, [block], "sweep", stop_threshold=stop)
            jobs.extend(new)
            cell_of_job.extend([(str(path), shots, mp)] * len(new))
    results = _map(run_cell, jobs, workers)
    failed = [r for r in results if r["status"] != "ok"]
    for r in failed:
        log.error("cell %s seed %s failed: %s", r["label"], r["seed"], r["error"])
    traces: dict[tuple, list] = {}
    for key, r in zip(cell_of_job, results):
        if r["status"] == "ok":
            traces.setdefault(key, []).append(read_trace(r["trace"]))
    rows = []
    for path, (landscape, cells) in cells_by_instance.items():
        cfg = landscape.config
        for cell in cells:
            stats = threshold_stats(traces.get((path, cell["n_shots"], cell["n_most_prob_value"]), []), threshold)
            rows.append(
                {
                    "instance_id": landscape.instance_id,
                    "n_vars": cfg.n_vars,
                    "n_objectives": cfg.n_objectives,
                    "epistasis": cfg.epistasis,
                    "rho": cfg.rho,
                    **cell,
                    **stats,
                }
            )
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "sweep.csv", SWEEP_COLUMNS, rows)
    _write_rows(out / "sweep_best.csv", SWEEP_COLUMNS, best_settings(rows))
    _write_manifest(out, "sweep", spec, seed_offset, started, results)
    return EXIT_FAILED if failed else EXIT_OK


# -- report --------------------------------------------------------------------------

REPORT_COLUMNS = (
    "n_objectives",
    "n_vars",
    "epistasis",
    "algorithm",
    "runs",
    "median_final_hv",
    "median_final_hv_norm",
    "eval_cap",
    "median_hv_norm_at_cap",
)
CURVE_COLUMNS = ("n_objectives", "n_vars", "epistasis", "algorithm", "axis", "x", "median_hv", "median_hv_norm")
MAX_CURVE_POINTS = 400


def _value_at(xs: np.ndarray, ys: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Carry-forward step function: last ``y`` with ``x <= grid``, 0 before the first record."""
    pos = np.searchsorted(xs, grid, side="right") - 1
    return np.where(pos >= 0, ys[np.clip(pos, 0, None)], 0.0)


def collect_traces(run_dirs) -> tuple[list, list[str]]:
    """Traces with sidecars under ``run_dirs`` plus the manifest-listed traces that are missing."""
    found, missing = [], []
    seen = set()
    for d in map(Path, run_dirs):
        for manifest in sorted(d.glob("*_manifest.json")):
            for cell in json.loads(manifest.read_text()).get("cells", []):
                if cell.get("status") != "ok" or not Path(cell["trace"]).exists():
                    missing.append(cell["trace"])
        for path in sorted(d.rglob("*.csv")):
            sidecar = path.with_suffix(".params.json")
            with path.open() as fh:
                header = fh.readline().strip().split(",")
            if tuple(header) != TRACE_COLUMNS:
                continue
            if not sidecar.exists():
                missing.append(str(path))
                continue
            if path.resolve() in seen:
                continue
            seen.add(path.resolve())
            found.append(read_trace(path))
    return found, sorted(set(missing))


def _group_key(t) -> tuple:
    inst = t.meta.get("settings", {}).get("instance", {})
    label = t.meta.get("settings", {}).get("label", t.meta.get("algorithm", "?"))
    return inst.get("n_objectives"), inst.get("n_vars"), inst.get("epistasis"), label


def report_tables(traces: list) -> tuple[list[dict], list[dict]]:
    """Summary rows per (M, N, K, algorithm) and median convergence curves."""
    groups: dict[tuple, list] = {}
    for t in traces:
        groups.setdefault(_group_key(t), []).append(t)
    # evaluation cap per (M, N, K): the smallest over algorithms of the largest evaluation count reached
    caps: dict[tuple, int] = {}
    for key, ts in groups.items():
        reach = max(int(t.fevals[-1]) for t in ts)
        caps[key[:3]] = min(caps.get(key[:3], reach), reach)
    summary, curves = [], []
    for key in sorted(groups, key=lambda k: tuple(str(v) for v in k)):
        ts = groups[key]
        m, n, k, label = key
        norm_ok = all(t.hv_norm is not None for t in ts)
        cap = caps[key[:3]]
        at_cap = [float(_value_at(t.fevals, t.hv_norm, np.array([cap]))[0]) for t in ts] if norm_ok else []
        summary.append(
            {
                "n_objectives": m,
                "n_vars": n,
                "epistasis": k,
                "algorithm": label,
                "runs": len(ts),
                "median_final_hv": lower_median([t.hv[-1] for t in ts]),
                "median_final_hv_norm": lower_median([t.hv_norm[-1] for t in ts]) if norm_ok else "",
                "eval_cap": cap,
                "median_hv_norm_at_cap": lower_median(at_cap) if norm_ok else "",
            }
        )
        for axis in ("iter", "fevals"):
            xs_all = np.unique(np.concatenate([t.iteration if axis == "iter" else t.fevals for t in ts]))
            if xs_all.size > MAX_CURVE_POINTS:
                xs_all = xs_all[np.unique(np.linspace(0, xs_all.size - 1, MAX_CURVE_POINTS).astype(int))]
            hv = np.array([_value_at(t.iteration if axis == "iter" else t.fevals, t.hv, xs_all) for t in ts])
            med_hv = [lower_median(col) for col in hv.T]
            if norm_ok:
                hn = np.array([_value_at(t.iteration if axis == "iter" else t.fevals, t.hv_norm, xs_all) for t in ts])
                med_norm = [lower_median(col) for col in hn.T]
            else:
                med_norm = [""] * xs_all.size
            for x, a, b in zip(xs_all, med_hv, med_norm):
                curves.append(
                    {"n_objectives": m, "n_vars": n, "epistasis": k, "algorithm": label, "axis": axis, "x": int(x), "median_hv": a, "median_hv_norm": b}
                )
    return summary, curves


def _write_svg(curves: list[dict], out: Path) -> list[Path]:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    settings = sorted({(c["n_objectives"], c["n_vars"], c["epistasis"]) for c in curves}, key=str)
    for m, n, k in settings:
        fig, axes = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
        for ax, axis in zip(axes, ("iter", "fevals")):
            rows = [c for c in curves if (c["n_objectives"], c["n_vars"], c["epistasis"], c["axis"]) == (m, n, k, axis)]
            for label in sorted({c["algorithm"] for c in rows}):
                pts = [c for c in rows if c["algorithm"] == label]
                y = [c["median_hv_norm"] if c["median_hv_norm"] != "" else c["median_hv"] for c in pts]
                ax.step([c["x"] for c in pts], y, where="post", label=label)
            ax.set_xlabel("iterations" if axis == "iter" else "function evaluations")
            if axis == "fevals":
                ax.set_xscale("symlog")
        axes[0].set_ylabel("HV / HV_ideal")
        axes[0].legend(fontsize=7)
        fig.suptitle(f"M={m} N={n} K={k}")
        path = out / f"curves_M{m}_N{n}_K{k}.svg"
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(path)
    return written


def cmd_report(spec: dict, out: Path, workers: int = 1, force: bool = False, seed_offset: int = 0) -> int:
    block = spec.get("report", {})
    run_dirs = block.get("runs", [str(out)])
    traces, missing = collect_traces(run_dirs)
    summary, curves = report_tables(traces)
    out.mkdir(parents=True, exist_ok=True)
    _write_rows(out / "report_summary.csv", REPORT_COLUMNS, summary)
    _write_rows(out / "report_curves.csv", CURVE_COLUMNS, curves)
    (out / "report_missing.txt").write_text("".join(f"{m}\n" for m in missing))
    for m in missing:
        log.warning("missing trace: %s", m)
    if block.get("svg"):
        try:
            _write_svg(curves, out)
        except ImportError:
            log.warning("matplotlib is not installed; skipping SVG output")
    log.info("report: %d trace(s), %d group(s)", len(traces), len(summary))
    return EXIT_FAILED if missing else EXIT_OK


def _analyze_cell(job) -> dict:
    grid, seeds = job
    try:
        return {"status": "ok", "rows": [asdict(r) for r in connectivity_sweep(grid, seeds)]}
    except Exception as exc:
        return {"status": "failed", "error": f"{type(exc).__name__}: {exc}", "cell": grid}


def cmd_analyze(spec: dict, out: Path, workers: int = 1, force: bool = False, seed_offset: int = 0) -> int:
    started = time.time()
    grid = spec["analyze"]["grid"]
    seeds = [s + seed_offset for s in spec["analyze"]["seeds"]]
    jobs = [
        ({"n_objectives": [m], "n_vars": [n], "epistasis": [k], "rho": [rho]}, seeds)
        for m, n, k, rho in product(grid["n_objectives"], grid["n_vars"], grid["epistasis"], grid.get("rho", [0.0]))
    ]
    results = _map(_analyze_cell, jobs, workers)
    from .analysis import ConnectivityRow

    rows = [ConnectivityRow(**r) for res in results if res["status"] == "ok" for r in res["rows"]]
    out.mkdir(parents=True, exist_ok=True)
    write_connectivity_csv(rows, out / "connectivity.csv")
    cells = [{"trace": str(out / "connectivity.csv"), **{k: v for k, v in r.items() if k != "rows"}} for r in results]
    _write_manifest(out, "analyze", spec, seed_offset, started, cells)
    return EXIT_FAILED if any(r["status"] != "ok" for r in results) else EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "report": cmd_report,
    "analyze": cmd_analyze,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rmnkq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "generate": "write RMNK instance files for an instance grid",
        "run": "run every (instance, algorithm, seed) cell and write traces",
        "sweep": "QMOO shots x candidates grid with threshold statistics",
        "report": "aggregate traces into summary tables and curves",
        "analyze": "bit-flip connectivity of exact Pareto sets over a grid",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--spec", required=True, type=Path, help="JSON experiment spec")
        p.add_argument("--out", type=Path, help="output directory (overrides the spec's 'out')")
        p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
        p.add_argument("--force", action="store_true", help="overwrite existing instance files")
        p.add_argument("--seed-offset", type=int, default=0, help="added to every seed in the spec")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    try:
        spec = load_spec(args.spec, args.command)
        out = args.out or Path(spec.get("out", "rmnkq-out"))
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](spec, out, workers=max(1, args.workers), force=args.force, seed_offset=args.seed_offset)
    except SpecError as exc:
        log.error("%s", exc)
        return EXIT_SPEC
    except FileExistsError as exc:
        log.error("%s", exc)
        return EXIT_FAILED
    except RmnkError as exc:
        log.error("%s", exc)
        return EXIT_SPEC


if __name__ == "__main__":
    sys.exit(main())
