"""Benchmark harness: seeded targets, replicated runs, aligned reports.

Targets come in three regimes of increasing mismatch: ``reconstruction``
renders the generator itself at a hidden latent, ``semi_specified`` renders
a same-family twin with independently drawn weights, and ``misspecified``
builds a pattern from an unrelated family.  Replica seeds derive from the
experiment seed by hashing, so per-optimizer results never depend on list
order or on which other optimizers ran.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from inspire.criteria import CriterionWeights, FeatureStackConfig
from inspire.generators import (
    GeneratorRegistry,
    SmoothnessDiscriminator,
    ToyGenerator,
    default_registry,
    generate,
    make_toy,
)
from inspire.images import ImageBuffer
from inspire.optimizers import (
    RetrievalProblem,
    RunTrace,
    minimum_budget,
    run_optimizer,
)

REGIMES = ("reconstruction", "semi_specified", "misspecified")

WORKERS_ENV_VAR = "INSPIRE_WORKERS"


class ExperimentError(RuntimeError):
    """A replica failed; the message carries the completed-run inventory."""


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary labeled parts."""
    h = hashlib.sha256("|".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big") % (2**63)


@dataclass(frozen=True)
class ExperimentSpec:
    """One benchmark: a regime, a generator, optimizers, budget, replicas."""

    regime: str
    generator_id: str
    optimizers: tuple[str, ...]
    criterion: str
    budget_units: int
    replicas: int
    seed: int

    def __post_init__(self) -> None:
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}; expected one of {REGIMES}")
        if not self.optimizers:
            raise ValueError("optimizers list must be non-empty")
        object.__setattr__(self, "optimizers", tuple(self.optimizers))
        if self.replicas < 1:
            raise ValueError(f"replicas must be >= 1, got {self.replicas}")
        if self.budget_units < 1:
            raise ValueError(f"budget_units must be >= 1, got {self.budget_units}")

    def validate_budget(self, problem_dim: int) -> None:
        for name in self.optimizers:
            need = minimum_budget(name, problem_dim)
            if self.budget_units < need:
                raise ValueError(
                    f"budget {self.budget_units} below minimum {need} for {name!r}"
                )

    def to_json(self) -> dict:
        return {
            "regime": self.regime,
            "generator": self.generator_id,
            "optimizers": list(self.optimizers),
            "criterion": self.criterion,
            "budget_units": self.budget_units,
            "replicas": self.replicas,
            "seed": self.seed,
        }

    @staticmethod
    def from_json(obj: dict) -> "ExperimentSpec":
        return ExperimentSpec(
            regime=str(obj["regime"]),
            generator_id=str(obj["generator"]),
            optimizers=tuple(obj["optimizers"]),
            criterion=str(obj["criterion"]),
            budget_units=int(obj["budget_units"]),
            replicas=int(obj["replicas"]),
            seed=int(obj["seed"]),
        )


def _shell_latent(rng: np.random.Generator, gen: ToyGenerator) -> np.ndarray:
    """Hidden latent on the prior shell, class blocks one-hot when present."""
    d = gen.latent_dim
    z = rng.standard_normal(d)
    z *= np.sqrt(d) / np.linalg.norm(z)
    if not gen.class_groups:
        return z
    blocks = [z]
    for size in gen.class_groups:
        block = np.zeros(size)
        block[int(rng.integers(size))] = 1.0
        blocks.append(block)
    return np.concatenate(blocks)


def _pattern_image(rng: np.random.Generator, side: int) -> np.ndarray:
    """Seeded stripes or checkerboard; a family none of the toys render."""
    kind = rng.integers(4)
    period = int(rng.choice([4, 8, 16]))
    color_a = rng.uniform(-1.0, 1.0, size=3)
    color_b = rng.uniform(-1.0, 1.0, size=3)
    ys, xs = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    if kind == 0:
        mask = (ys // period) % 2 == 0
    elif kind == 1:
        mask = (xs // period) % 2 == 0
    elif kind == 2:
        mask = ((xs + ys) // period) % 2 == 0
    else:
        mask = ((ys // period) + (xs // period)) % 2 == 0
    return np.where(mask[:, :, None], color_a[None, None, :], color_b[None, None, :])


def make_target(regime: str, gen: ToyGenerator, seed: int) -> ImageBuffer:
    """Deterministic target image for a regime; same (regime, seed) -> same target."""
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    rng = np.random.default_rng(derive_seed("target", regime, seed))
    if regime == "reconstruction":
        return generate(gen, _shell_latent(rng, gen))
    if regime == "semi_specified":
        twin_seed = derive_seed("twin", seed) % (2**31)
        if twin_seed == gen.seed:
            twin_seed += 1
        twin = make_toy(gen.kind, seed=twin_seed, d=gen.latent_dim,
                        side=gen.output_side,
                        class_groups=gen.class_groups or None)
        return generate(twin, _shell_latent(rng, twin))
    return ImageBuffer(_pattern_image(rng, gen.output_side))


def units_grid(budget: int) -> list[int]:
    """Powers of two up to the budget, plus the budget itself."""
    grid = []
    u = 1
    while u < budget:
        grid.append(u)
        u *= 2
    grid.append(budget)
    return grid


@dataclass
class Report:
    """Aligned convergence summaries for one experiment."""

    spec: ExperimentSpec
    units: list[int]
    curves: dict[str, dict[str, list[Optional[float]]]]
    final_losses: dict[str, list[float]]
    ranking: list[tuple[str, float]]
    traces: dict[str, list[RunTrace]] = field(default_factory=dict, repr=False)

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "units": list(self.units),
            "curves": {
                opt: {k: list(v) for k, v in series.items()}
                for opt, series in self.curves.items()
            },
            "final_losses": {opt: list(v) for opt, v in self.final_losses.items()},
            "ranking": [[opt, loss] for opt, loss in self.ranking],
        }

    @staticmethod
    def from_json(obj: dict) -> "Report":
        return Report(
            spec=ExperimentSpec.from_json(obj["spec"]),
            units=[int(u) for u in obj["units"]],
            curves={
                opt: {k: [None if x is None else float(x) for x in v]
                      for k, v in series.items()}
                for opt, series in obj["curves"].items()
            },
            final_losses={opt: [float(x) for x in v]
                          for opt, v in obj["final_losses"].items()},
            ranking=[(str(o), float(l)) for o, l in obj["ranking"]],
        )

    def to_json_bytes(self) -> bytes:
        return (json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n").encode("utf-8")

    def to_csv(self) -> str:
        lines = ["optimizer,units,median,q1,q3"]
        for opt in self.spec.optimizers:
            series = self.curves[opt]
            for i, u in enumerate(self.units):
                med, q1, q3 = (series["median"][i], series["q1"][i], series["q3"][i])
                cells = ["" if v is None else repr(v) for v in (med, q1, q3)]
                lines.append(f"{opt},{u},{cells[0]},{cells[1]},{cells[2]}")
        return "\n".join(lines) + "\n"


def _replica_trace(spec: ExperimentSpec, optimizer: str, replica: int,
                   registry: Optional[GeneratorRegistry] = None) -> RunTrace:
    registry = registry or default_registry()
    gen = registry.resolve(spec.generator_id)
    target = make_target(spec.regime, gen, derive_seed(spec.seed, "target", replica))
    problem = RetrievalProblem(
        gen,
        SmoothnessDiscriminator(),
        target,
        CriterionWeights.preset(spec.criterion),
        FeatureStackConfig(),
    )
    run_seed = derive_seed(spec.seed, optimizer, replica)
    return run_optimizer(optimizer, problem, spec.budget_units, run_seed)


def _replica_task(spec_json: dict, optimizer: str, replica: int) -> tuple[str, int, "RunTrace"]:
    spec = ExperimentSpec.from_json(spec_json)
    return optimizer, replica, _replica_trace(spec, optimizer, replica)


def run_experiment(
    spec: ExperimentSpec,
    registry: Optional[GeneratorRegistry] = None,
    workers: Optional[int] = None,
) -> Report:
    """Run optimizers x replicas, then align curves on the units grid.

    ``workers`` (or the INSPIRE_WORKERS environment variable) fans replicas
    out over processes; results are identical at any worker count because
    every replica seeds itself independently.
    """
    registry = registry or default_registry()
    gen = registry.resolve(spec.generator_id)
    spec.validate_budget(gen.total_dim)
    CriterionWeights.preset(spec.criterion)  # fail fast on bad preset names

    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV_VAR, "1"))
    tasks = [(opt, r) for opt in spec.optimizers for r in range(spec.replicas)]
    traces: dict[str, list[Optional[RunTrace]]] = {
        opt: [None] * spec.replicas for opt in spec.optimizers
    }
    completed: list[tuple[str, int]] = []
    if workers > 1:
        spec_json = spec.to_json()
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_replica_task, spec_json, opt, r): (opt, r)
                for opt, r in tasks
            }
            for fut in concurrent.futures.as_completed(futures):
                opt, r = futures[fut]
                try:
                    _, _, trace = fut.result()
                except Exception as exc:
                    raise ExperimentError(
                        f"replica failed: optimizer={opt} replica={r}: {exc}; "
                        f"completed={sorted(completed)}"
                    ) from exc
                traces[opt][r] = trace
                completed.append((opt, r))
    else:
        for opt, r in tasks:
            try:
                traces[opt][r] = _replica_trace(spec, opt, r, registry)
            except Exception as exc:
                raise ExperimentError(
                    f"replica failed: optimizer={opt} replica={r}: {exc}; "
                    f"completed={sorted(completed)}"
                ) from exc
            completed.append((opt, r))

    units = units_grid(spec.budget_units)
    curves: dict[str, dict[str, list[Optional[float]]]] = {}
    final_losses: dict[str, list[float]] = {}
    for opt in spec.optimizers:
        runs = traces[opt]
        med: list[Optional[float]] = []
        q1: list[Optional[float]] = []
        q3: list[Optional[float]] = []
        for u in units:
            vals = [t.best_loss_at(u) for t in runs]
            if any(v is None for v in vals):
                med.append(None)
                q1.append(None)
                q3.append(None)
            else:
                arr = np.array(vals, dtype=np.float64)
                med.append(float(np.median(arr)))
                q1.append(float(np.quantile(arr, 0.25)))
                q3.append(float(np.quantile(arr, 0.75)))
        curves[opt] = {"median": med, "q1": q1, "q3": q3}
        final_losses[opt] = [t.best_loss for t in runs]
    ranking = sorted(
        ((opt, float(np.median(np.array(final_losses[opt])))) for opt in spec.optimizers),
        key=lambda pair: pair[1],
    )
    return Report(
        spec=spec,
        units=units,
        curves=curves,
        final_losses=final_losses,
        ranking=ranking,
        traces={opt: list(runs) for opt, runs in traces.items()},
    )


def emit_report(report: Report, out_dir: str, stem: str = "report") -> dict[str, str]:
    """Write the JSON and CSV forms; returns the paths written."""
    os.makedirs(out_dir, exist_ok=True)
    json_path = os.path.join(out_dir, f"{stem}.json")
    csv_path = os.path.join(out_dir, f"{stem}.csv")
    with open(json_path, "wb") as fh:
        fh.write(report.to_json_bytes())
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(report.to_csv())
    return {"json": json_path, "csv": csv_path}
