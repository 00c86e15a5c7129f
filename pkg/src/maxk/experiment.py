"""Experiment grids over (environment, objective, seed) and comparison reports."""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from maxk.bandit import FIXTURES, load_env
from maxk.errors import ConfigError, NumericalFailure, ReportError
from maxk.stats import wilcoxon_signed_rank
from maxk.trainer import OBJECTIVES, TrainConfig, run_training

log = logging.getLogger(__name__)

OVERRIDE_KEYS = (
    "n", "k", "lr", "beta", "epsilon", "ppo_iters", "steps", "clamp_delta",
    "binarize_threshold", "offpolicy_normalize", "baseline_decay",
)


@dataclass
class ExperimentSpec:
    environments: list[str]
    objectives: list[str]
    seeds: list[int]
    config: dict = field(default_factory=dict)
    output: str = "results"

    def __post_init__(self):
        for name in ("environments", "objectives", "seeds"):
            if not getattr(self, name):
                raise ConfigError(f"experiment spec needs a nonempty {name!r} list")
        bad = [o for o in self.objectives if o not in OBJECTIVES]
        if bad:
            raise ConfigError(
                f"unknown objective(s) {bad}; valid choices: {', '.join(OBJECTIVES)}"
            )
        extra = set(self.config) - set(OVERRIDE_KEYS)
        if extra:
            raise ConfigError(f"unknown config overrides {sorted(extra)}; allowed: {OVERRIDE_KEYS}")

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentSpec":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read experiment spec {path}: {exc}") from exc
        if not isinstance(doc, dict):
            raise ConfigError("experiment spec must be a JSON object")
        unknown = set(doc) - {"environments", "objectives", "seeds", "config", "output"}
        if unknown:
            raise ConfigError(f"unknown experiment spec keys: {sorted(unknown)}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def cells(self) -> list[tuple[str, str, int]]:
        return [(e, o, int(s)) for e in self.environments for o in self.objectives
                for s in self.seeds]


def env_key(name_or_path: str) -> str:
    return name_or_path if name_or_path in FIXTURES else Path(name_or_path).stem


def run_id(env: str, objective: str, seed: int) -> str:
    return f"{env_key(env)}__{objective}__seed{seed}"


def _run_cell(env_name: str, objective: str, seed: int, overrides: dict, out: str) -> dict:
    env = load_env(env_name)
    config = TrainConfig(objective=objective, seed=seed, **overrides)
    rid = run_id(env_name, objective, seed)
    out_dir = Path(out)
    entry = {"env": env_key(env_name), "objective": objective, "seed": seed,
             "config": asdict(config)}
    try:
        trace = run_training(env, config)
    except NumericalFailure as exc:
        # exc.state carries the offending policy state and the partial trace
        (out_dir / "runs" / f"{rid}.failure.json").write_text(
            json.dumps({"error": str(exc), "state": exc.state}, indent=1, default=str)
        )
        entry["failure"] = str(exc)
        entry["final_metrics"] = None
        return entry
    trace.write_csv(out_dir / "traces" / f"{rid}.csv")
    trace.write_json(out_dir / "runs" / f"{rid}.json")
    final = trace.final
    entry["failure"] = None
    entry["final_metrics"] = {
        "exact_max_at_1": final.exact_max_at_1,
        "exact_max_at_k": final.exact_max_at_k,
        "entropy": final.entropy,
        "kl_to_init": final.kl_to_init,
        "initial_entropy": trace.records[0].entropy,
    }
    return entry


def run_grid(spec: ExperimentSpec, out: str | Path | None = None, jobs: int = 1) -> dict:
    """Run every cell and write traces plus ``summary.json``; returns the summary."""
    out_dir = Path(out if out is not None else spec.output)
    (out_dir / "traces").mkdir(parents=True, exist_ok=True)
    (out_dir / "runs").mkdir(parents=True, exist_ok=True)
    for e in spec.environments:
        load_env(e)  # config errors surface before any run starts
    TrainConfig(**spec.config)
    cells = spec.cells()
    args = [(e, o, s, spec.config, str(out_dir)) for e, o, s in cells]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(_run_cell, *zip(*args)))
    else:
        entries = [_run_cell(*a) for a in args]
    # cells() is already ordered by (environment, objective, seed)
    summary = {run_id(e, o, s): entry for (e, o, s), entry in zip(cells, entries)}
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True))
    return summary


# --- reporting -----------------------------------------------------------

@dataclass
class CellStats:
    env: str
    objective: str
    seeds: list[int]
    finals: list[float]
    p_value: float | None = None
    rank: int = 0

    @property
    def mean(self) -> float:
        return float(np.mean(self.finals))

    @property
    def std(self) -> float:
        return float(np.std(self.finals, ddof=1)) if len(self.finals) > 1 else 0.0


@dataclass
class ComparisonReport:
    cells: list[CellStats]
    notes: list[str]
    alternative: str = "two-sided"
    metric: str = "exact_max_at_k"

    def to_markdown(self) -> str:
        lines = [f"Final {self.metric}: mean ± std over seeds; p = Wilcoxon signed-rank "
                 f"({self.alternative}) vs the best method in the environment.", ""]
        lines.append("| environment | objective | mean | std | seeds | p vs best |")
        lines.append("|---|---|---|---|---|---|")
        for c in self.cells:
            p = "best" if c.rank == 1 else ("-" if c.p_value is None else f"{c.p_value:.4g}")
            lines.append(f"| {c.env} | {c.objective} | {c.mean:.4f} | {c.std:.4f} | "
                         f"{len(c.seeds)} | {p} |")
        if self.notes:
            lines.append("")
            lines.extend(f"- {n}" for n in self.notes)
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["environment", "objective", "mean", "std", "num_seeds", "rank", "p_vs_best"])
        for c in self.cells:
            w.writerow([c.env, c.objective, repr(c.mean), repr(c.std), len(c.seeds), c.rank,
                        "" if c.p_value is None else repr(c.p_value)])
        return buf.getvalue()


def load_summaries(paths) -> dict:
    merged: dict = {}
    for path in paths:
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ReportError(f"cannot read summary {path}: {exc}") from exc
        merged.update(doc)
    return merged


def build_report(summary: dict, metric: str = "exact_max_at_k",
                 alternative: str = "two-sided") -> ComparisonReport:
    """Per-environment table of final metrics with Wilcoxon p-values vs the best method."""
    by_cell: dict[tuple[str, str], dict[int, float]] = {}
    notes = []
    for rid in sorted(summary):
        entry = summary[rid]
        if entry.get("final_metrics") is None:
            notes.append(f"{rid} failed ({entry.get('failure')}); excluded")
            continue
        key = (entry["env"], entry["objective"])
        by_cell.setdefault(key, {})[int(entry["seed"])] = float(entry["final_metrics"][metric])

    cells = []
    for env in sorted({e for e, _ in by_cell}):
        group = [CellStats(env, o, sorted(v), [v[s] for s in sorted(v)])
                 for (e, o), v in sorted(by_cell.items()) if e == env]
        seed_sets = {tuple(c.seeds) for c in group}
        if len(seed_sets) > 1:
            raise ReportError(f"environment {env!r}: methods were run on different seeds")
        group.sort(key=lambda c: (-c.mean, c.objective))
        for rank, c in enumerate(group, start=1):
            c.rank = rank
        best = group[0]
        if len(group) == 1:
            notes.append(f"{env}: single method, no p-values")
        elif len(best.seeds) < 2:
            notes.append(f"{env}: fewer than two seeds, no p-values")
        else:
            for c in group[1:]:
                c.p_value = wilcoxon_signed_rank(best.finals, c.finals, alternative)
        cells.extend(group)
    if not cells:
        raise ReportError("no successful runs to report")
    return ComparisonReport(cells, notes, alternative, metric)


def write_svg(trace_csvs: list[Path], path: Path, metric: str = "exact_max_at_k") -> None:
    """Minimal line chart of one metric against step, one polyline per trace."""
    series = []
    for p in trace_csvs:
        with open(p) as fh:
            rows = list(csv.DictReader(fh))
        series.append((p.stem, [float(r[metric]) for r in rows]))
    width, height, pad = 640, 400, 40
    steps = max((len(s) for _, s in series), default=1)
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
             f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
             'fill="none" stroke="#888"/>']
    for idx, (name, ys) in enumerate(series):
        pts = " ".join(
            f"{pad + (width - 2 * pad) * i / max(steps - 1, 1):.1f},"
            f"{height - pad - (height - 2 * pad) * y:.1f}"
            for i, y in enumerate(ys)
        )
        parts.append(f'<polyline fill="none" stroke="{palette[idx % len(palette)]}" '
                     f'stroke-width="1" points="{pts}"><title>{name}</title></polyline>')
    parts.append("</svg>")
    path.write_text("\n".join(parts))
