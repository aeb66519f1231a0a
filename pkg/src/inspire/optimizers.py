"""Search strategies over generator latent spaces under a unit budget.

A plain criterion evaluation costs one unit; an evaluation that also asks
for a gradient costs ``GRADIENT_SURCHARGE`` units.  Every run consumes a
single seeded RNG stream, so a (problem, seed, budget) triple replays bit
for bit.  Derivative-free strategies consume loss values only through
comparisons, which makes their traces invariant under strictly increasing
loss transforms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from inspire.generators import (
    CapabilityError,
    LatentPoint,
    SmoothnessDiscriminator,
    ToyGenerator,
    generate,
    one_hot_class_block,
)
from inspire.images import ImageBuffer
from inspire.criteria import (
    CriterionWeights,
    FeatureStackConfig,
    criterion_value_and_gradient,
    extract_features,
    _term_values,
)

GRADIENT_SURCHARGE = 5

GRADIENT_METHODS = ("adam", "nesterov", "lbfgs")
OPTIMIZER_NAMES = ("rs", "adam", "nesterov", "lbfgs", "dopo", "es", "2pde", "dde")


class NonDifferentiableProblemError(CapabilityError):
    """A gradient method was pointed at a problem without gradients."""


class NonFiniteGradientError(RuntimeError):
    """A gradient evaluation produced NaN or infinity; the run is aborted."""


class BudgetExhaustedError(RuntimeError):
    """An evaluation was requested beyond the allotted budget."""


@dataclass
class BudgetLedger:
    """Tracks evaluation spend; gradient evaluations carry a surcharge."""

    budget_units: int
    spent_units: int = 0
    gradient_surcharge: int = GRADIENT_SURCHARGE

    def can_afford(self, units: int = 1) -> bool:
        return self.spent_units + units <= self.budget_units

    def charge(self, units: int = 1) -> int:
        if not self.can_afford(units):
            raise BudgetExhaustedError(
                f"charge of {units} exceeds budget {self.budget_units} "
                f"(spent {self.spent_units})"
            )
        self.spent_units += units
        return self.spent_units


@dataclass
class RunTrace:
    """Per-evaluation record of one optimization run.

    ``points`` holds (spent_units, current_loss, best_loss) triples in
    evaluation order; ``best_loss`` never increases.  ``steps`` is filled by
    gradient methods with the step size active at each iteration.
    """

    points: list[tuple[int, float, float]]
    best_latent: LatentPoint
    seed: int
    optimizer_name: str
    steps: Optional[list[float]] = None

    @property
    def best_loss(self) -> float:
        return self.points[-1][2]

    @property
    def spent_units(self) -> int:
        return self.points[-1][0]

    def best_loss_at(self, units: int) -> Optional[float]:
        """Best loss after at most ``units`` spent; None before the first point."""
        best = None
        for spent, _, b in self.points:
            if spent > units:
                break
            best = b
        return best

    def to_json(self, criterion: str = "custom", budget_units: Optional[int] = None) -> dict:
        return {
            "seed": self.seed,
            "optimizer": self.optimizer_name,
            "criterion": criterion,
            "budget_units": self.spent_units if budget_units is None else budget_units,
            "best_loss": self.best_loss,
            "best_latent": self.best_latent.full().tolist(),
            "curve": [[int(u), float(c), float(b)] for u, c, b in self.points],
        }

    def to_csv(self) -> str:
        lines = ["units,current_loss,best_loss"]
        for u, c, b in self.points:
            lines.append(f"{u},{c!r},{b!r}")
        return "\n".join(lines) + "\n"


class Problem:
    """Minimization target over a flat coordinate vector.

    ``base_point`` supplies initial values and the pinned values of frozen
    coordinates; ``frozen_mask`` marks coordinates optimizers must not move.
    """

    dim: int
    differentiable: bool = False

    def __init__(self, dim: int, frozen_mask: Optional[np.ndarray] = None,
                 base_point: Optional[np.ndarray] = None) -> None:
        self.dim = int(dim)
        self.frozen_mask = (
            np.zeros(self.dim, dtype=bool) if frozen_mask is None
            else np.asarray(frozen_mask, dtype=bool).reshape(-1)
        )
        self.base_point = (
            np.zeros(self.dim) if base_point is None
            else np.asarray(base_point, dtype=np.float64).reshape(-1)
        )
        if self.frozen_mask.size != self.dim or self.base_point.size != self.dim:
            raise ValueError("frozen_mask/base_point size mismatch with dim")

    def loss(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def loss_and_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        raise NonDifferentiableProblemError(
            f"{type(self).__name__} does not provide gradients"
        )

    def make_latent(self, x: np.ndarray) -> LatentPoint:
        return LatentPoint.from_full(np.asarray(x, dtype=np.float64), self.dim,
                                     frozen_mask=self.frozen_mask.copy())

    def sample_point(self, rng: np.random.Generator) -> np.ndarray:
        """Standard normal draw on free coordinates, frozen values pinned."""
        x = self.base_point.copy()
        free = ~self.frozen_mask
        x[free] = rng.standard_normal(int(free.sum()))
        return x


class QuadraticProblem(Problem):
    """||x - a||^2; the workhorse test problem."""

    differentiable = True

    def __init__(self, anchor: np.ndarray) -> None:
        anchor = np.asarray(anchor, dtype=np.float64).reshape(-1)
        super().__init__(anchor.size)
        self.anchor = anchor

    def loss(self, x: np.ndarray) -> float:
        d = np.asarray(x, dtype=np.float64) - self.anchor
        return float(d @ d)

    def loss_and_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        d = np.asarray(x, dtype=np.float64) - self.anchor
        return float(d @ d), 2.0 * d


class TransformedProblem(Problem):
    """Applies a scalar transform to another problem's loss (comparison tests)."""

    differentiable = False

    def __init__(self, inner: Problem, transform: Callable[[float], float]) -> None:
        super().__init__(inner.dim, inner.frozen_mask.copy(), inner.base_point.copy())
        self.inner = inner
        self.transform = transform

    def loss(self, x: np.ndarray) -> float:
        return float(self.transform(self.inner.loss(x)))

    def make_latent(self, x: np.ndarray) -> LatentPoint:
        return self.inner.make_latent(x)


class RetrievalProblem(Problem):
    """Latent retrieval against a fixed target under a criterion preset.

    Target feature statistics are computed once; evaluations then share the
    exact code path of ``total_criterion``, so cached and uncached values
    agree bit for bit.
    """

    def __init__(
        self,
        gen: ToyGenerator,
        disc: SmoothnessDiscriminator,
        target: ImageBuffer,
        weights: CriterionWeights,
        cfg: FeatureStackConfig,
        class_mode: str = "free_all",
        class_value: Optional[Sequence[int]] = None,
    ) -> None:
        if target.data.shape != (gen.output_side, gen.output_side, gen.channels):
            raise ValueError(
                f"target shape {target.data.shape} != generator output "
                f"{(gen.output_side, gen.output_side, gen.channels)}"
            )
        super().__init__(gen.total_dim)
        self.gen = gen
        self.disc = disc
        self.target = target
        self.weights = weights
        self.cfg = cfg
        self.class_mode = class_mode
        self.class_value = None if class_value is None else tuple(int(v) for v in class_value)
        self.differentiable = gen.differentiable
        self._target_stats = (
            extract_features(target, cfg) if weights.lambda_S != 0.0 else None
        )
        if class_mode not in ("free_all", "fixed_class"):
            raise ValueError(f"unknown conditioning mode {class_mode!r}")
        if class_mode == "fixed_class":
            if not gen.class_groups:
                raise ValueError("fixed_class conditioning needs a conditioned generator")
            if self.class_value is None:
                raise ValueError("fixed_class conditioning needs class_value")
            block = one_hot_class_block(gen.class_groups, self.class_value)
            self.base_point[gen.latent_dim:] = block
            self.frozen_mask[gen.latent_dim:] = True

    def _point(self, x: np.ndarray) -> LatentPoint:
        vec = np.asarray(x, dtype=np.float64).reshape(-1)
        if vec.size != self.dim:
            raise ValueError(f"point size {vec.size} != problem dim {self.dim}")
        return LatentPoint.from_full(vec, self.gen.latent_dim,
                                     frozen_mask=self.frozen_mask.copy())

    def make_latent(self, x: np.ndarray) -> LatentPoint:
        return self._point(x)

    def loss(self, x: np.ndarray) -> float:
        p = self._point(x)
        img = generate(self.gen, p)
        return _term_values(img, p, self.target, self._target_stats,
                            self.weights, self.disc, self.cfg)

    def loss_and_grad(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        if not self.differentiable:
            raise NonDifferentiableProblemError(
                f"{self.gen.kind} generator has no gradients"
            )
        p = self._point(x)
        return criterion_value_and_gradient(
            p, self.target, self.weights, self.gen, self.disc, self.cfg,
            target_stats=self._target_stats,
        )


def apply_conditioning(
    problem: RetrievalProblem, mode: str, class_value: Optional[Sequence] = None
) -> RetrievalProblem:
    """Rebuild a retrieval problem under a conditioning mode.

    ``free_all`` optimizes the concatenated continuous-and-class vector;
    ``fixed_class`` pins the class block to the given one-hot values and
    freezes it.  ``class_value`` accepts per-group value indices or a full
    one-hot block.
    """
    if mode not in ("free_all", "fixed_class"):
        raise ValueError(f"unknown conditioning mode {mode!r}")
    if not isinstance(problem, RetrievalProblem):
        raise ValueError("conditioning applies to retrieval problems only")
    if mode == "free_all":
        return RetrievalProblem(problem.gen, problem.disc, problem.target,
                                problem.weights, problem.cfg)
    groups = problem.gen.class_groups
    if not groups:
        raise ValueError("fixed_class conditioning needs a conditioned generator")
    if class_value is None:
        raise ValueError("fixed_class conditioning needs class_value")
    values = _as_group_values(groups, class_value)
    return RetrievalProblem(problem.gen, problem.disc, problem.target,
                            problem.weights, problem.cfg,
                            class_mode="fixed_class", class_value=values)


def _as_group_values(groups: Sequence[int], class_value: Sequence) -> list[int]:
    """Normalize class_value to per-group indices.

    Group sizes are >= 2, so a full one-hot block is always longer than the
    group count and the two accepted forms cannot collide.
    """
    flat = np.asarray(class_value, dtype=np.float64).reshape(-1)
    if flat.size == sum(groups):
        values = []
        offset = 0
        for size in groups:
            block = flat[offset:offset + size]
            if not (np.all((block == 0.0) | (block == 1.0)) and block.sum() == 1.0):
                raise ValueError("class_value block must be one-hot")
            values.append(int(np.argmax(block)))
            offset += size
        return values
    if flat.size == len(groups):
        if not np.all(flat == np.round(flat)):
            raise ValueError("per-group class values must be integers")
        return [int(v) for v in flat]
    raise ValueError(
        f"class_value length {flat.size} matches neither group count "
        f"{len(groups)} nor one-hot width {sum(groups)}"
    )


class _Recorder:
    """Charges the ledger, appends trace points, and tracks the best point."""

    def __init__(self, problem: Problem, budget: int) -> None:
        self.problem = problem
        self.ledger = BudgetLedger(budget)
        self.points: list[tuple[int, float, float]] = []
        self.best_loss = math.inf
        self.best_x: Optional[np.ndarray] = None

    def record(self, x: np.ndarray, loss: float, units: int) -> None:
        spent = self.ledger.charge(units)
        if self.best_x is None or loss < self.best_loss:
            self.best_loss = loss
            self.best_x = np.array(x, dtype=np.float64, copy=True)
        self.points.append((spent, float(loss), float(self.best_loss)))

    def evaluate(self, x: np.ndarray) -> float:
        loss = self.problem.loss(x)
        self.record(x, loss, 1)
        return loss

    def trace(self, seed: int, name: str, steps: Optional[list[float]] = None) -> RunTrace:
        if self.best_x is None:
            raise ValueError("no evaluations were recorded")
        return RunTrace(
            points=self.points,
            best_latent=self.problem.make_latent(self.best_x),
            seed=seed,
            optimizer_name=name,
            steps=steps,
        )


def run_random_search(problem: Problem, budget: int, seed: int) -> RunTrace:
    """Independent standard normal draws; keep the best.  One unit each."""
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    rng = np.random.default_rng(seed)
    rec = _Recorder(problem, budget)
    for _ in range(budget):
        rec.evaluate(problem.sample_point(rng))
    return rec.trace(seed, "rs")


@dataclass
class GradientMethodConfig:
    """Shared settings for the fixed-schedule gradient methods.

    The step starts at ``base_step`` and is divided by 10 at one third and
    two thirds of the iteration count; at each decay the iterate jumps back
    to the best point seen so far and optimizer state is cleared.
    """

    method: str = "adam"
    base_step: float = 1.0
    adam_beta1: float = 0.0
    adam_beta2: float = 0.99
    adam_eps: float = 1e-8
    nesterov_momentum: float = 0.9
    lbfgs_memory: int = 10
    lbfgs_pair_floor: float = 1e-10

    def __post_init__(self) -> None:
        if self.method not in GRADIENT_METHODS:
            raise ValueError(f"unknown gradient method {self.method!r}")


def _two_loop_direction(grad: np.ndarray, s_list: list[np.ndarray],
                        y_list: list[np.ndarray]) -> np.ndarray:
    """Classic two-loop recursion with gamma-scaled initial Hessian."""
    q = grad.copy()
    alphas = []
    rhos = []
    for s, y in zip(reversed(s_list), reversed(y_list)):
        rho = 1.0 / float(y @ s)
        alpha = rho * float(s @ q)
        q -= alpha * y
        alphas.append(alpha)
        rhos.append(rho)
    if s_list:
        s, y = s_list[-1], y_list[-1]
        gamma = float(s @ y) / float(y @ y)
        r = gamma * q
    else:
        r = q
    for (s, y), alpha, rho in zip(zip(s_list, y_list), reversed(alphas), reversed(rhos)):
        beta = rho * float(y @ r)
        r += s * (alpha - beta)
    return r


def gradient_update(
    method: str,
    state: Optional[dict],
    z: np.ndarray,
    grad: np.ndarray,
    step: float,
    cfg: Optional[GradientMethodConfig] = None,
) -> tuple[np.ndarray, dict]:
    """One update of the chosen method; ``state=None`` starts fresh.

    adam uses bias correction with (beta1, beta2) = (0, 0.99); nesterov is
    the look-ahead momentum form; lbfgs applies the two-loop recursion with
    a fixed scheduled step and no line search, skipping curvature pairs
    with s.y <= 1e-10.
    """
    cfg = cfg or GradientMethodConfig(method=method)
    z = np.asarray(z, dtype=np.float64)
    grad = np.asarray(grad, dtype=np.float64)
    if method == "adam":
        if state is None:
            state = {"m": np.zeros_like(z), "v": np.zeros_like(z), "t": 0}
        t = state["t"] + 1
        m = cfg.adam_beta1 * state["m"] + (1.0 - cfg.adam_beta1) * grad
        v = cfg.adam_beta2 * state["v"] + (1.0 - cfg.adam_beta2) * grad * grad
        m_hat = m / (1.0 - cfg.adam_beta1 ** t)
        v_hat = v / (1.0 - cfg.adam_beta2 ** t)
        z_new = z - step * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
        return z_new, {"m": m, "v": v, "t": t}
    if method == "nesterov":
        if state is None:
            state = {"velocity": np.zeros_like(z)}
        buf = cfg.nesterov_momentum * state["velocity"] + grad
        z_new = z - step * (grad + cfg.nesterov_momentum * buf)
        return z_new, {"velocity": buf}
    if method == "lbfgs":
        if state is None:
            state = {"s": [], "y": [], "prev_z": None, "prev_grad": None}
        s_list, y_list = state["s"], state["y"]
        if state["prev_z"] is not None:
            s = z - state["prev_z"]
            y = grad - state["prev_grad"]
            if float(s @ y) > cfg.lbfgs_pair_floor:
                s_list = (s_list + [s])[-cfg.lbfgs_memory:]
                y_list = (y_list + [y])[-cfg.lbfgs_memory:]
        direction = _two_loop_direction(grad, s_list, y_list)
        z_new = z - step * direction
        return z_new, {"s": s_list, "y": y_list, "prev_z": z.copy(), "prev_grad": grad.copy()}
    raise ValueError(f"unknown gradient method {method!r}")


def run_gradient_method(
    problem: Problem,
    cfg: GradientMethodConfig,
    budget: int,
    seed: int,
    surcharge: int = GRADIENT_SURCHARGE,
) -> RunTrace:
    """Fixed-schedule gradient descent; each iteration costs ``surcharge`` units."""
    if not problem.differentiable:
        raise NonDifferentiableProblemError(
            "gradient methods need a differentiable problem"
        )
    iterations = budget // surcharge
    if iterations < 1:
        raise ValueError(f"budget {budget} below one gradient iteration ({surcharge})")
    rng = np.random.default_rng(seed)
    rec = _Recorder(problem, budget)
    frozen = problem.frozen_mask
    z = problem.sample_point(rng)
    decay_at = {iterations // 3, 2 * iterations // 3} - {0}
    step = cfg.base_step
    state: Optional[dict] = None
    steps_log: list[float] = []
    for t in range(iterations):
        if t in decay_at:
            step /= 10.0
            z = rec.best_x.copy()
            state = None
        loss, grad = problem.loss_and_grad(z)
        if not np.isfinite(grad).all() or not np.isfinite(loss):
            raise NonFiniteGradientError(
                f"non-finite loss/gradient at iteration {t} "
                f"(method={cfg.method}, seed={seed})"
            )
        rec.record(z, loss, surcharge)
        steps_log.append(step)
        grad = grad.copy()
        grad[frozen] = 0.0
        z, state = gradient_update(cfg.method, state, z, grad, step, cfg)
        z[frozen] = problem.base_point[frozen]
    return rec.trace(seed, cfg.method, steps=steps_log)


def mutate_coordinates(
    z: np.ndarray,
    rate: float,
    rng: np.random.Generator,
    frozen_mask: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Replace each free coordinate with a fresh standard normal w.p. ``rate``.

    The draw repeats until at least one coordinate changed, so the output
    never equals the input by inaction.  Frozen coordinates never mutate.
    """
    z = np.asarray(z, dtype=np.float64)
    free = np.ones(z.size, dtype=bool) if frozen_mask is None else ~np.asarray(frozen_mask, dtype=bool)
    if not free.any():
        raise ValueError("all coordinates are frozen; nothing can mutate")
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"mutation rate must be in (0, 1], got {rate}")
    out = z.copy()
    while True:
        mask = (rng.random(z.size) < rate) & free
        count = int(mask.sum())
        if count:
            out[mask] = rng.standard_normal(count)
            return out


@dataclass
class EsConfig:
    """(mu/mu + lambda) evolution strategy settings; defaults give (1+1)."""

    mu: int = 1
    lam: int = 1
    mutation_rate: Optional[float] = None  # None -> 1/dim

    def __post_init__(self) -> None:
        if self.mu < 1 or self.lam < 1:
            raise ValueError(f"mu and lam must be >= 1, got mu={self.mu}, lam={self.lam}")


def run_es(problem: Problem, cfg: EsConfig, budget: int, seed: int) -> RunTrace:
    """Plus-selection evolution strategy with coordinate-resampling mutation.

    Parents start at the base point (the zero vector unconditioned).  Each
    generation clones parents round-robin into ``lam`` offspring, mutates
    them, and keeps the ``mu`` best of parents plus offspring; ties prefer
    the earlier-evaluated individual.
    """
    if budget < cfg.mu + cfg.lam:
        raise ValueError(f"budget {budget} below mu + lam = {cfg.mu + cfg.lam}")
    rng = np.random.default_rng(seed)
    rate = cfg.mutation_rate if cfg.mutation_rate is not None else 1.0 / problem.dim
    rec = _Recorder(problem, budget)
    frozen = problem.frozen_mask
    parents = [problem.base_point.copy() for _ in range(cfg.mu)]
    parent_losses = [rec.evaluate(p) for p in parents]
    name = "dopo" if cfg.mu == 1 and cfg.lam == 1 else "es"
    while rec.ledger.can_afford(1):
        offspring = []
        offspring_losses = []
        for i in range(cfg.lam):
            if not rec.ledger.can_afford(1):
                break
            child = mutate_coordinates(parents[i % cfg.mu], rate, rng, frozen)
            offspring.append(child)
            offspring_losses.append(rec.evaluate(child))
        pool = parents + offspring
        pool_losses = np.array(parent_losses + offspring_losses)
        order = np.argsort(pool_losses, kind="stable")[: cfg.mu]
        parents = [pool[i].copy() for i in order]
        parent_losses = [float(pool_losses[i]) for i in order]
    return rec.trace(seed, name)


def two_point_crossover(parent: np.ndarray, mutant: np.ndarray,
                        rng: np.random.Generator) -> np.ndarray:
    """Copy the mutant segment [i, j) into the parent, cuts uniform with i < j."""
    parent = np.asarray(parent, dtype=np.float64)
    mutant = np.asarray(mutant, dtype=np.float64)
    d = parent.size
    if d < 2:
        raise ValueError(f"two-point crossover needs dim >= 2, got {d}")
    if mutant.size != d:
        raise ValueError(f"parent dim {d} != mutant dim {mutant.size}")
    i, j = np.sort(rng.choice(d + 1, size=2, replace=False))
    child = parent.copy()
    child[i:j] = mutant[i:j]
    return child


def rate_crossover(parent: np.ndarray, mutant: np.ndarray, rate: float,
                   rng: np.random.Generator) -> np.ndarray:
    """Take each coordinate from the mutant w.p. ``rate``, one forced."""
    parent = np.asarray(parent, dtype=np.float64)
    mutant = np.asarray(mutant, dtype=np.float64)
    d = parent.size
    if mutant.size != d:
        raise ValueError(f"parent dim {d} != mutant dim {mutant.size}")
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"crossover rate must be in [0, 1], got {rate}")
    mask = rng.random(d) < rate
    mask[int(rng.integers(d))] = True
    return np.where(mask, mutant, parent)


@dataclass
class DeConfig:
    """Differential evolution settings; crossover picks the variant."""

    population: int = 30
    differential_weight: float = 0.8
    crossover: str = "two_point"  # or "rate_1_over_d"

    def __post_init__(self) -> None:
        if self.population < 4:
            raise ValueError(f"population must be >= 4, got {self.population}")
        if self.crossover not in ("two_point", "rate_1_over_d"):
            raise ValueError(f"unknown crossover {self.crossover!r}")


def _de_generation(
    population: list[np.ndarray],
    losses: list[float],
    problem: Problem,
    cfg: DeConfig,
    rng: np.random.Generator,
    rec: _Recorder,
) -> bool:
    """One sweep over the population; returns False when budget ran out."""
    n = len(population)
    rate = 1.0 / problem.dim
    frozen = problem.frozen_mask
    base = problem.base_point
    for i in range(n):
        if not rec.ledger.can_afford(1):
            return False
        picks = rng.choice(n - 1, size=3, replace=False)
        a, b, c = [int(p) + (p >= i) for p in picks]
        mutant = population[a] + cfg.differential_weight * (population[b] - population[c])
        if cfg.crossover == "two_point":
            child = two_point_crossover(population[i], mutant, rng)
        else:
            child = rate_crossover(population[i], mutant, rate, rng)
        child[frozen] = base[frozen]
        child_loss = rec.evaluate(child)
        if child_loss <= losses[i]:
            population[i] = child
            losses[i] = child_loss
    return True


def run_de(problem: Problem, cfg: DeConfig, budget: int, seed: int) -> RunTrace:
    """Greedy differential evolution: child replaces its parent when not worse."""
    if budget < cfg.population:
        raise ValueError(f"budget {budget} below population {cfg.population}")
    rng = np.random.default_rng(seed)
    rec = _Recorder(problem, budget)
    population = [problem.sample_point(rng) for _ in range(cfg.population)]
    losses = [rec.evaluate(x) for x in population]
    while rec.ledger.can_afford(1):
        if not _de_generation(population, losses, problem, cfg, rng, rec):
            break
    name = "2pde" if cfg.crossover == "two_point" else "dde"
    return rec.trace(seed, name)


def run_optimizer(name: str, problem: Problem, budget: int, seed: int,
                  mu: Optional[int] = None, lam: Optional[int] = None) -> RunTrace:
    """Dispatch by CLI optimizer name."""
    name = name.lower()
    if name == "rs":
        return run_random_search(problem, budget, seed)
    if name in GRADIENT_METHODS:
        return run_gradient_method(problem, GradientMethodConfig(method=name),
                                   budget, seed)
    if name == "dopo":
        return run_es(problem, EsConfig(mu=1, lam=1), budget, seed)
    if name == "es":
        return run_es(problem, EsConfig(mu=mu or 1, lam=lam or 1), budget, seed)
    if name == "2pde":
        return run_de(problem, DeConfig(crossover="two_point"), budget, seed)
    if name == "dde":
        return run_de(problem, DeConfig(crossover="rate_1_over_d"), budget, seed)
    raise ValueError(f"unknown optimizer {name!r}; expected one of {OPTIMIZER_NAMES}")


def minimum_budget(name: str, problem_dim: int,
                   mu: Optional[int] = None, lam: Optional[int] = None) -> int:
    """Smallest budget the named optimizer accepts."""
    name = name.lower()
    if name == "rs":
        return 1
    if name in GRADIENT_METHODS:
        return GRADIENT_SURCHARGE
    if name == "dopo":
        return 2
    if name == "es":
        return (mu or 1) + (lam or 1)
    if name in ("2pde", "dde"):
        return DeConfig().population
    raise ValueError(f"unknown optimizer {name!r}")
