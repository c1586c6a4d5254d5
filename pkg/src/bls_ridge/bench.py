"""Incremental-training runs with per-step accuracy, timing and flop predictions."""

from __future__ import annotations

import json
import statistics
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset
from .flops import FlopModel, flops_init, flops_per_update
from .network import BlsConfig, BlsNetwork
from .solvers import SOLVERS

__all__ = [
    "Step",
    "Schedule",
    "PRESETS",
    "load_schedule",
    "StepRecord",
    "RunReport",
    "RunError",
    "ScheduleMismatchError",
    "run",
    "compare",
    "format_comparison",
]


class RunError(RuntimeError):
    """A run failed; the message names the step."""


class ScheduleMismatchError(ValueError):
    """Reports being compared were produced by different schedules."""


@dataclass(frozen=True)
class Step:
    """One growth step.

    With ``add_feature_nodes > 0`` a feature group is added together with
    ``add_corresponding_enh`` nodes reading only it and ``add_extra_enh``
    nodes over all features.  Otherwise ``add_extra_enh`` enhancement nodes
    are added alone.
    """

    add_feature_nodes: int = 0
    add_corresponding_enh: int = 0
    add_extra_enh: int = 0

    def __post_init__(self):
        vals = (self.add_feature_nodes, self.add_corresponding_enh, self.add_extra_enh)
        if any(int(v) != v or v < 0 for v in vals):
            raise ValueError(f"step counts must be non-negative integers, got {vals}")
        if not any(vals):
            raise ValueError("a step must add at least one node")
        if self.add_feature_nodes == 0 and self.add_corresponding_enh:
            raise ValueError("corresponding enhancement nodes need added feature nodes")

    @property
    def q(self) -> int:
        return self.add_feature_nodes + self.add_corresponding_enh + self.add_extra_enh


@dataclass(frozen=True)
class Schedule:
    """Initial architecture and growth steps."""

    feature_groups: int
    feature_group_size: int
    enhancement_groups: int
    enhancement_group_size: int
    steps: tuple[Step, ...] = ()

    def __post_init__(self):
        vals = (self.feature_groups, self.feature_group_size,
                self.enhancement_groups, self.enhancement_group_size)
        if any(int(v) != v or v < 0 for v in vals):
            raise ValueError(f"schedule counts must be non-negative integers, got {vals}")
        if self.feature_groups < 1 or self.feature_group_size < 1:
            raise ValueError("the initial network needs at least one feature node")
        object.__setattr__(self, "steps", tuple(
            s if isinstance(s, Step) else Step(**s) for s in self.steps))

    @property
    def initial_nodes(self) -> int:
        return (self.feature_groups * self.feature_group_size
                + self.enhancement_groups * self.enhancement_group_size)

    @property
    def total_nodes(self) -> int:
        return self.initial_nodes + sum(s.q for s in self.steps)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["steps"] = [asdict(s) for s in self.steps]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Schedule":
        d = dict(d)
        d["steps"] = tuple(Step(**s) for s in d.get("steps", ()))
        return cls(**d)


PRESETS = {
    # 10 x 6 feature and 3000 enhancement nodes, then four steps of
    # 10 feature + 750 corresponding + 1250 extra enhancement nodes.
    "mnist": Schedule(10, 6, 1, 3000, (Step(10, 750, 1250),) * 4),
    "small": Schedule(5, 4, 1, 200, (Step(4, 50, 100), Step(0, 0, 150), Step(4, 50, 100))),
}


def load_schedule(spec: str) -> Schedule:
    """Read ``preset:NAME`` or a JSON schedule file."""
    if spec.startswith("preset:"):
        name = spec.split(":", 1)[1]
        try:
            return PRESETS[name]
        except KeyError:
            raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    with open(spec) as fh:
        return Schedule.from_dict(json.load(fh))


@dataclass
class StepRecord:
    step: int
    feature_nodes: int
    enhancement_nodes: int
    q: int
    train_accuracy: float
    test_accuracy: float
    additional_time_sec: float
    accumulative_time_sec: float
    step_time_sec: float
    predicted_flops: float
    predicted_flops_exact: str


@dataclass
class RunReport:
    """Per-step results with the configuration that produced them.

    ``additional_time_sec`` is the median solver time of the step (node
    generation excluded); ``step_time_sec`` is the median wall time of the
    whole step.  ``accumulative_time_sec`` sums ``additional_time_sec``.
    """

    config: dict
    schedule: dict
    steps: list[StepRecord] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"config": self.config, "schedule": self.schedule,
                "steps": [asdict(s) for s in self.steps]}

    def to_json(self, path=None) -> str:
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        return cls(d["config"], d["schedule"], [StepRecord(**s) for s in d["steps"]])

    @classmethod
    def load(cls, path) -> "RunReport":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_table(self) -> str:
        c = self.config
        head = (f"solver={c.get('solver')} lambda={c.get('lam')} seed={c.get('seed')} "
                f"scale={c.get('scale')} l={c.get('l_train')}")
        rows = [["step", "features", "enh", "q", "train%", "test%", "update s", "accum s",
                 "step s", "flops"]]
        for s in self.steps:
            rows.append([str(s.step), str(s.feature_nodes), str(s.enhancement_nodes), str(s.q),
                         f"{100 * s.train_accuracy:.2f}", f"{100 * s.test_accuracy:.2f}",
                         f"{s.additional_time_sec:.3f}", f"{s.accumulative_time_sec:.3f}",
                         f"{s.step_time_sec:.3f}", f"{s.predicted_flops:.3e}"])
        return head + "\n" + _align(rows)


def _align(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(v.rjust(w) for v, w in zip(r, widths)) for r in rows)


def _accuracy(scores: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(np.argmax(scores, axis=1) == labels))


def _one_run(config: BlsConfig, schedule: Schedule, train: Dataset, test: Dataset | None,
             evaluate: bool):
    """Run the schedule once; returns per-step (update s, step s, train acc, test acc, sizes)."""
    out = []
    sch = schedule
    t0 = time.perf_counter()
    try:
        net = BlsNetwork.build(train.X, train.Y, sch.feature_groups, sch.feature_group_size,
                               sch.enhancement_groups, sch.enhancement_group_size, config,
                               capacity=sch.total_nodes)
    except Exception as exc:
        raise RunError(f"initial step: {exc}") from exc
    steps = [None, *sch.steps]
    for i, st in enumerate(steps):
        if st is not None:
            t0 = time.perf_counter()
            try:
                if st.add_feature_nodes:
                    net.add_feature_nodes(st.add_feature_nodes, st.add_corresponding_enh,
                                          st.add_extra_enh)
                else:
                    net.add_enhancement_nodes(st.add_extra_enh)
            except Exception as exc:
                raise RunError(f"step {i} ({st}): {exc}") from exc
        wall = time.perf_counter() - t0
        acc_tr = acc_te = float("nan")
        if evaluate:
            acc_tr = _accuracy(net.solver.A @ net.solver.W, train.labels)
            if test is not None:
                acc_te = float(np.mean(net.classify(test.X) == test.labels))
        out.append((net.last_update_seconds, wall, acc_tr, acc_te,
                    net.n_feature_nodes, net.n_enhancement_nodes))
    del net
    return out


def run(config: BlsConfig, schedule: Schedule, train: Dataset, test: Dataset | None = None,
        reps: int = 5, dataset_name: str = "") -> RunReport:
    """Execute ``schedule`` ``reps`` times and report median timings.

    Accuracies come from the first repetition; later repetitions only time.
    The process should have the CPU to itself while timing.
    """
    if reps < 1:
        raise ValueError(f"reps must be at least 1, got {reps}")
    if config.solver not in SOLVERS:
        raise ValueError(f"unknown solver {config.solver!r}")
    runs = [_one_run(config, schedule, train, test, evaluate=(r == 0)) for r in range(reps)]
    first = runs[0]
    l, c = train.X.shape[0], train.Y.shape[1]
    report = RunReport(
        config={**asdict(config), "reps": reps, "dataset": dataset_name,
                "l_train": l, "l_test": 0 if test is None else test.X.shape[0]},
        schedule=schedule.to_dict(),
    )
    accum = 0.0
    k_prev = 0
    for i, row in enumerate(first):
        upd = statistics.median(r[i][0] for r in runs)
        wall = statistics.median(r[i][1] for r in runs)
        accum += upd
        nf, ne = row[4], row[5]
        k = nf + ne
        if i == 0:
            flops = flops_init(FlopModel(1, k, l, c), config.solver)
            q = k
        else:
            q = k - k_prev
            flops = flops_per_update(FlopModel(q, k_prev, l, c), config.solver)
        k_prev = k
        report.steps.append(StepRecord(
            step=i, feature_nodes=nf, enhancement_nodes=ne, q=q,
            train_accuracy=row[2], test_accuracy=row[3],
            additional_time_sec=upd, accumulative_time_sec=accum, step_time_sec=wall,
            predicted_flops=float(flops), predicted_flops_exact=str(flops),
        ))
    return report


def _shape_key(report: RunReport):
    return [(s.feature_nodes, s.enhancement_nodes) for s in report.steps], \
        report.config.get("l_train")


def compare(reports: list[RunReport]) -> list[dict]:
    """Line up reports step by step with speedups relative to the first.

    Speedup is ``time_first / time_other`` for both solver time and step time.

    Raises
    ------
    ScheduleMismatchError
        If the reports do not share node counts per step and training size.
    """
    if len(reports) < 2:
        raise ValueError("compare needs at least two reports")
    key = _shape_key(reports[0])
    for r in reports[1:]:
        if _shape_key(r) != key:
            raise ScheduleMismatchError(
                f"schedules differ: {reports[0].config.get('solver')} vs {r.config.get('solver')}"
            )
    base = reports[0]
    rows = []
    for i, s0 in enumerate(base.steps):
        row = {"step": i, "feature_nodes": s0.feature_nodes,
               "enhancement_nodes": s0.enhancement_nodes, "runs": []}
        for r in reports:
            s = r.steps[i]
            row["runs"].append({
                "solver": r.config.get("solver"), "lam": r.config.get("lam"),
                "test_accuracy": s.test_accuracy,
                "additional_time_sec": s.additional_time_sec,
                "speedup": _ratio(s0.additional_time_sec, s.additional_time_sec),
                "step_speedup": _ratio(s0.step_time_sec, s.step_time_sec),
            })
        rows.append(row)
    return rows


def _ratio(a: float, b: float) -> float:
    return a / b if b > 0 else float("inf")


def format_comparison(rows: list[dict]) -> str:
    head = ["step", "nodes"]
    for run_ in rows[0]["runs"]:
        tag = f"{run_['solver']}@{run_['lam']:g}"
        head += [f"{tag} test%", f"{tag} s", f"{tag} speedup"]
    table = [head]
    for row in rows:
        line = [str(row["step"]), f"{row['feature_nodes']}/{row['enhancement_nodes']}"]
        for run_ in row["runs"]:
            line += [f"{100 * run_['test_accuracy']:.2f}", f"{run_['additional_time_sec']:.3f}",
                     f"{run_['speedup']:.2f}"]
        table.append(line)
    return _align(table)
