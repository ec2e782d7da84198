"""Per-run convergence traces shared by QMOO and the evolutionary baselines."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

TRACE_COLUMNS = ("iter", "fevals", "hv", "hv_norm", "elapsed_ms")


@dataclass
class IterationRecord:
    iteration: int
    fevals: int
    hv: float
    objective: float
    params: list[float] | None = None
    elapsed_ms: float = 0.0


@dataclass
class RunTrace:
    """Everything recorded about one optimization run.

    ``hv`` in each record is the hypervolume reported at that iteration:
    the archive's hypervolume when an archive is used, otherwise the
    hypervolume of the iteration's own non-dominated set.
    """

    algorithm: str
    instance_id: str
    seed: int
    settings: dict = field(default_factory=dict)
    records: list[IterationRecord] = field(default_factory=list)
    solutions: list[int] = field(default_factory=list)
    front: np.ndarray | None = None
    budget_exhausted: bool = False
    cache_hits: int = 0
    reevaluations: int = 0
    final_population: np.ndarray | None = None

    @property
    def hv(self) -> np.ndarray:
        return np.array([r.hv for r in self.records])

    @property
    def fevals(self) -> np.ndarray:
        return np.array([r.fevals for r in self.records], dtype=np.int64)

    @property
    def iterations(self) -> np.ndarray:
        return np.array([r.iteration for r in self.records], dtype=np.int64)

    @property
    def final_hv(self) -> float:
        return self.records[-1].hv if self.records else 0.0

    @property
    def best_hv(self) -> float:
        return max((r.hv for r in self.records), default=0.0)

    @property
    def total_fevals(self) -> int:
        return self.records[-1].fevals if self.records else 0

    def csv_text(self, hv_ideal: float | None = None, timing: bool = False) -> str:
        """CSV with columns ``iter,fevals,hv,hv_norm,elapsed_ms``.

        ``hv_norm`` is blank without ``hv_ideal``; ``elapsed_ms`` is blank
        unless ``timing`` is set, which keeps default output reproducible.
        """
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for r in self.records:
            norm = "" if not hv_ideal else repr(float(r.hv / hv_ideal))
            w.writerow([r.iteration, r.fevals, repr(float(r.hv)), norm, f"{r.elapsed_ms:.3f}" if timing else ""])
        return buf.getvalue()

    def params_json(self) -> str:
        payload = {
            "algorithm": self.algorithm,
            "instance_id": self.instance_id,
            "seed": self.seed,
            "settings": self.settings,
            "budget_exhausted": self.budget_exhausted,
            "cache_hits": self.cache_hits,
            "reevaluations": self.reevaluations,
            "params": [r.params for r in self.records],
            "solutions": list(map(int, self.solutions)),
            "front": [] if self.front is None else np.asarray(self.front).tolist(),
        }
        return json.dumps(payload, indent=1, sort_keys=True) + "\n"

    def write(self, path, hv_ideal: float | None = None, timing: bool = False) -> Path:
        """Write ``<path>`` (CSV) and the ``<stem>.params.json`` sidecar."""
        path = Path(path)
        path.write_text(self.csv_text(hv_ideal, timing))
        path.with_suffix(".params.json").write_text(self.params_json())
        return path


@dataclass
class TraceTable:
    """A trace read back from CSV."""

    iteration: np.ndarray
    fevals: np.ndarray
    hv: np.ndarray
    hv_norm: np.ndarray | None
    meta: dict = field(default_factory=dict)


def read_trace(path) -> TraceTable:
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    norm = [r["hv_norm"] for r in rows]
    meta_path = path.with_suffix(".params.json")
    meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
    meta.pop("params", None)
    return TraceTable(
        iteration=np.array([int(r["iter"]) for r in rows], dtype=np.int64),
        fevals=np.array([int(r["fevals"]) for r in rows], dtype=np.int64),
        hv=np.array([float(r["hv"]) for r in rows]),
        hv_norm=np.array([float(v) for v in norm]) if norm and all(norm) else None,
        meta=meta,
    )


def record_dict(record: IterationRecord) -> dict:
    return asdict(record)
