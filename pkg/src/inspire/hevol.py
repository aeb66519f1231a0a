"""Human-in-the-loop evolution over a generator's latent space.

Each iteration shows a batch of ``1 + lam`` rendered candidates: slot 0 is
the reigning best (elitism), the rest are mutations of the current parents.
The chooser hands back an ordered ballot of picks with multiplicities; the
picks become the next parents either by weighted averaging or by cloning.
Sessions consume one seeded RNG stream, so (seed, ballot sequence)
reconstructs every latent bit for bit.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from inspire.criteria import (
    CriterionWeights,
    FeatureStackConfig,
    extract_features,
    _term_values,
)
from inspire.generators import (
    GeneratorRegistry,
    LatentPoint,
    SmoothnessDiscriminator,
    ToyGenerator,
    default_registry,
    generate,
)
from inspire.images import ImageBuffer
from inspire.optimizers import mutate_coordinates

RECOMBINATION_MODES = ("average", "clone")


@dataclass(frozen=True)
class HevolConfig:
    """Session shape: parent count, batch width, mutation, recombination."""

    mu: int = 5
    lam: int = 27
    mutation_rate: Optional[float] = None  # None -> 1/dim
    recombination: str = "average"

    def __post_init__(self) -> None:
        if self.mu < 1 or self.lam < 1:
            raise ValueError(f"mu and lam must be >= 1, got mu={self.mu}, lam={self.lam}")
        if self.recombination not in RECOMBINATION_MODES:
            raise ValueError(f"recombination must be one of {RECOMBINATION_MODES}")

    @property
    def batch_size(self) -> int:
        return 1 + self.lam

    def to_json(self) -> dict:
        return {
            "mu": self.mu,
            "lam": self.lam,
            "mutation_rate": self.mutation_rate,
            "recombination": self.recombination,
        }

    @staticmethod
    def from_json(obj: dict) -> "HevolConfig":
        return HevolConfig(
            mu=int(obj["mu"]),
            lam=int(obj["lam"]),
            mutation_rate=obj.get("mutation_rate"),
            recombination=str(obj.get("recombination", "average")),
        )


SESSION_PRESETS: dict[str, HevolConfig] = {
    "faces": HevolConfig(mu=5, lam=27, recombination="average"),
    "fashion": HevolConfig(mu=1, lam=15, recombination="clone"),
}


@dataclass(frozen=True)
class SelectionBallot:
    """Ordered picks: (batch index, multiplicity), first pick = top choice."""

    picks: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "picks", tuple((int(i), int(m)) for i, m in self.picks)
        )

    @property
    def total_multiplicity(self) -> int:
        return sum(m for _, m in self.picks)

    def to_json(self) -> list[list[int]]:
        return [[i, m] for i, m in self.picks]

    @staticmethod
    def from_json(obj: Sequence[Sequence[int]]) -> "SelectionBallot":
        return SelectionBallot(tuple((int(i), int(m)) for i, m in obj))


def image_id_for(generator_id: str, latent: np.ndarray) -> str:
    """Content-addressed id: hash of the latent bytes and the generator id."""
    h = hashlib.sha256()
    h.update(generator_id.encode("utf-8"))
    h.update(np.ascontiguousarray(np.asarray(latent, dtype=np.float64)).tobytes())
    return h.hexdigest()[:16]


@dataclass
class BatchSlot:
    index: int
    latent: np.ndarray
    image_id: str


class HevolSession:
    """Mutable session state; drive it through the module-level operations."""

    def __init__(self, session_id: str, gen: ToyGenerator, generator_id: str,
                 config: HevolConfig, seed: int) -> None:
        self.session_id = session_id
        self.gen = gen
        self.generator_id = generator_id
        self.config = config
        self.seed = int(seed)
        self.rng = np.random.default_rng(self.seed)
        self.iteration = 0
        self.parents: list[np.ndarray] = [
            np.zeros(gen.total_dim) for _ in range(config.mu)
        ]
        self.best_latent: np.ndarray = np.zeros(gen.total_dim)
        self.ballots: list[SelectionBallot] = []
        self.history: list[dict] = []
        self.latent_index: dict[str, np.ndarray] = {}
        self.current_batch: list[BatchSlot] = []
        self._propose()

    # -- internals -------------------------------------------------------

    def _rate(self) -> float:
        if self.config.mutation_rate is not None:
            return self.config.mutation_rate
        return 1.0 / self.gen.total_dim

    def _register(self, latent: np.ndarray) -> str:
        image_id = image_id_for(self.generator_id, latent)
        self.latent_index[image_id] = latent.copy()
        return image_id

    def _propose(self) -> None:
        """Build the batch for the current iteration: elite plus lam mutants."""
        slots = [BatchSlot(0, self.best_latent.copy(),
                           self._register(self.best_latent))]
        rate = self._rate()
        for i in range(self.config.lam):
            child = mutate_coordinates(self.parents[i % self.config.mu], rate, self.rng)
            slots.append(BatchSlot(i + 1, child, self._register(child)))
        self.current_batch = slots

    # -- read-side helpers -----------------------------------------------

    @property
    def images_shown(self) -> int:
        """Tiles shown across completed iterations; the elite recounts each batch."""
        return self.iteration * self.config.batch_size

    @property
    def unique_images(self) -> int:
        """Initial elite plus lam fresh candidates per completed iteration."""
        if self.iteration == 0:
            return 0
        return 1 + self.iteration * self.config.lam

    def render(self, image_id: str) -> ImageBuffer:
        latent = self.latent_index.get(image_id)
        if latent is None:
            raise KeyError(f"unknown image id {image_id!r}")
        return generate(self.gen, latent)

    def batch_image_ids(self) -> list[str]:
        return [slot.image_id for slot in self.current_batch]

    def batch_latents(self) -> list[np.ndarray]:
        return [slot.latent.copy() for slot in self.current_batch]


def start_session(
    generator_id: str,
    preset: str | HevolConfig = "faces",
    seed: int = 0,
    registry: Optional[GeneratorRegistry] = None,
    session_id: Optional[str] = None,
) -> HevolSession:
    """Open a session and propose its first batch."""
    registry = registry or default_registry()
    gen = registry.resolve(generator_id)
    if isinstance(preset, HevolConfig):
        config = preset
    else:
        if preset not in SESSION_PRESETS:
            raise KeyError(f"unknown session preset {preset!r}; "
                           f"expected one of {sorted(SESSION_PRESETS)}")
        config = SESSION_PRESETS[preset]
    return HevolSession(session_id or f"hevol-{seed}", gen, generator_id, config, seed)


def propose_batch(session: HevolSession) -> list[str]:
    """Image ids of the current batch: slot 0 is the elite, slots 1..lam are
    mutations of the parents cloned round-robin.  Idempotent; a new batch is
    built only when a ballot advances the iteration."""
    return session.batch_image_ids()


def record_selection(session: HevolSession, ballot: SelectionBallot) -> HevolSession:
    """Apply one ballot: update best and parents, then propose the next batch.

    The first pick becomes the new elite.  Average mode replaces all parents
    with the multiplicity-weighted mean rescaled to the prior shell; clone
    mode makes the picked latents (with multiplicity) the parents directly,
    cycled to fill ``mu`` slots when fewer were picked.
    """
    cfg = session.config
    if not ballot.picks:
        raise ValueError("ballot must contain at least one pick")
    for index, mult in ballot.picks:
        if not 0 <= index < cfg.batch_size:
            raise ValueError(f"pick index {index} outside batch of {cfg.batch_size}")
        if mult < 1:
            raise ValueError(f"pick multiplicity must be >= 1, got {mult}")
    if ballot.total_multiplicity > cfg.mu:
        raise ValueError(
            f"total multiplicity {ballot.total_multiplicity} exceeds mu={cfg.mu}"
        )
    batch = session.current_batch
    picked = [(batch[i].latent.copy(), m) for i, m in ballot.picks]

    if cfg.recombination == "average":
        weights = np.array([m for _, m in picked], dtype=np.float64)
        stacked = np.stack([lat for lat, _ in picked])
        mean = (weights[:, None] * stacked).sum(axis=0) / weights.sum()
        new_parent = _rescale_to_shell(mean, session.gen.latent_dim)
        parents = [new_parent.copy() for _ in range(cfg.mu)]
    else:
        expanded = [lat for lat, m in picked for _ in range(m)]
        parents = [expanded[i % len(expanded)].copy() for i in range(cfg.mu)]

    session.history.append(
        {
            "iteration": session.iteration,
            "batch_image_ids": [slot.image_id for slot in batch],
            "ballot": ballot,
            "best_image_id": batch[ballot.picks[0][0]].image_id,
        }
    )
    session.ballots.append(ballot)
    session.best_latent = batch[ballot.picks[0][0]].latent.copy()
    session.parents = parents
    session.iteration += 1
    session._propose()
    return session


def _rescale_to_shell(vec: np.ndarray, continuous_dim: int) -> np.ndarray:
    """Scale the continuous block so (1/d)||z||^2 = 1; zero stays zero."""
    out = vec.copy()
    z = out[:continuous_dim]
    sq = float(z @ z)
    if sq > 0.0:
        out[:continuous_dim] = z * np.sqrt(continuous_dim / sq)
    return out


def auto_oracle_select(
    batch_latents: Sequence[np.ndarray],
    target: ImageBuffer,
    weights: CriterionWeights,
    mu: int,
    gen: ToyGenerator,
    disc: SmoothnessDiscriminator,
    cfg: FeatureStackConfig,
) -> SelectionBallot:
    """Simulated chooser: the ``mu`` lowest-criterion members, best first."""
    target_stats = extract_features(target, cfg) if weights.lambda_S != 0.0 else None
    losses = []
    for latent in batch_latents:
        p = LatentPoint.from_full(np.asarray(latent, dtype=np.float64), gen.latent_dim)
        img = generate(gen, p)
        losses.append(_term_values(img, p, target, target_stats, weights, disc, cfg))
    order = np.argsort(np.array(losses), kind="stable")[: int(mu)]
    return SelectionBallot(tuple((int(i), 1) for i in order))


def session_best(session: HevolSession) -> tuple[LatentPoint, ImageBuffer, int]:
    """Elite latent, its rendering, and the images-shown count."""
    if session.iteration < 1:
        raise ValueError("no completed iteration yet; submit a ballot first")
    latent = LatentPoint.from_full(session.best_latent.copy(), session.gen.latent_dim)
    return latent, generate(session.gen, session.best_latent), session.images_shown


def replay_session(
    generator_id: str,
    config: HevolConfig,
    seed: int,
    ballots: Sequence[SelectionBallot],
    registry: Optional[GeneratorRegistry] = None,
    session_id: Optional[str] = None,
) -> HevolSession:
    """Rebuild a session from its journal: seed plus ballot sequence."""
    session = start_session(generator_id, config, seed, registry, session_id)
    for ballot in ballots:
        record_selection(session, ballot)
    return session
