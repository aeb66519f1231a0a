"""Toy generators and a smoothness discriminator standing in for a GAN pair.

Every generator maps a latent vector (optionally concatenated with one-hot
class blocks) to a square RGB image in ``[-1, 1]``.  Weights are drawn once
from a seeded standard normal scaled by 1/sqrt(fan-in), so a ``(kind, seed,
dims)`` triple pins the model exactly and runs replay bit for bit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from inspire.images import DimensionError, ImageBuffer, check_output_range

CHANNELS = 3
MAX_LATENT_DIM = 512
ALLOWED_SIDES = (16, 32, 64)
TOY_KINDS = ("linear", "mlp", "procedural", "conditioned")

_MLP_HIDDEN = 128


class CapabilityError(RuntimeError):
    """Operation requires a capability the model does not have."""


@dataclass(frozen=True)
class LatentPoint:
    """A search-space point: continuous block plus optional class blocks.

    ``frozen_mask`` spans the full concatenated vector; frozen coordinates
    are pinned by conditioning and must not be moved by optimizers.
    """

    z: np.ndarray
    class_block: Optional[np.ndarray] = None
    frozen_mask: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        z = np.asarray(self.z, dtype=np.float64).reshape(-1)
        if z.size == 0:
            raise ValueError("continuous block must be non-empty")
        if not np.all(np.isfinite(z)):
            raise ValueError("latent coordinates must be finite")
        object.__setattr__(self, "z", z)
        if self.class_block is not None:
            cb = np.asarray(self.class_block, dtype=np.float64).reshape(-1)
            object.__setattr__(self, "class_block", cb)
        if self.frozen_mask is not None:
            fm = np.asarray(self.frozen_mask, dtype=bool).reshape(-1)
            if fm.size != self.total_dim:
                raise ValueError(
                    f"frozen_mask length {fm.size} != total dim {self.total_dim}"
                )
            object.__setattr__(self, "frozen_mask", fm)

    @property
    def continuous_dim(self) -> int:
        return self.z.size

    @property
    def total_dim(self) -> int:
        return self.z.size + (0 if self.class_block is None else self.class_block.size)

    def full(self) -> np.ndarray:
        """Concatenated (continuous, class) vector as a fresh array."""
        if self.class_block is None:
            return self.z.copy()
        return np.concatenate([self.z, self.class_block])

    @staticmethod
    def from_full(
        vec: np.ndarray,
        continuous_dim: int,
        frozen_mask: Optional[np.ndarray] = None,
    ) -> "LatentPoint":
        vec = np.asarray(vec, dtype=np.float64).reshape(-1)
        if continuous_dim > vec.size:
            raise ValueError(f"continuous_dim {continuous_dim} > vector size {vec.size}")
        cb = vec[continuous_dim:].copy() if vec.size > continuous_dim else None
        return LatentPoint(vec[:continuous_dim].copy(), cb, frozen_mask)


def one_hot_class_block(class_groups: Sequence[int], values: Sequence[int]) -> np.ndarray:
    """Build the concatenated one-hot class block for per-group value indices."""
    if len(values) != len(class_groups):
        raise ValueError(f"expected {len(class_groups)} class values, got {len(values)}")
    parts = []
    for size, v in zip(class_groups, values):
        if not 0 <= int(v) < size:
            raise ValueError(f"class value {v} out of range for group of size {size}")
        block = np.zeros(size)
        block[int(v)] = 1.0
        parts.append(block)
    return np.concatenate(parts) if parts else np.zeros(0)


class ToyGenerator:
    """Base for the toy families.  Subclasses fill in ``_forward``/``_vjp``."""

    kind: str = "base"
    differentiable: bool = True

    def __init__(self, seed: int, latent_dim: int, side: int,
                 class_groups: Sequence[int] = ()) -> None:
        self.seed = int(seed)
        self.latent_dim = int(latent_dim)
        self.output_side = int(side)
        self.channels = CHANNELS
        self.class_groups = tuple(int(g) for g in class_groups)

    @property
    def total_dim(self) -> int:
        return self.latent_dim + sum(self.class_groups)

    @property
    def pixel_count(self) -> int:
        return self.output_side * self.output_side * self.channels

    @property
    def generator_id(self) -> str:
        base = f"{self.kind}-d{self.latent_dim}-s{self.output_side}-seed{self.seed}"
        if self.class_groups:
            base += "-g" + "x".join(str(g) for g in self.class_groups)
        return base

    def to_config(self) -> dict:
        cfg = {
            "kind": self.kind,
            "seed": self.seed,
            "dims": {"d": self.latent_dim, "side": self.output_side},
        }
        if self.class_groups:
            cfg["dims"]["class_groups"] = list(self.class_groups)
        return cfg

    def _as_vector(self, p) -> np.ndarray:
        if isinstance(p, LatentPoint):
            vec = p.full()
        else:
            vec = np.asarray(p, dtype=np.float64).reshape(-1)
        if vec.size != self.total_dim:
            raise DimensionError(
                f"latent size {vec.size} != generator total dim {self.total_dim}"
            )
        if not np.isfinite(vec).all():
            raise ValueError("latent vector contains non-finite values")
        return vec

    def generate(self, p) -> ImageBuffer:
        img = ImageBuffer(self._forward(self._as_vector(p)))
        return check_output_range(img, f"{self.kind} generator output")

    def vjp(self, p, cotangent: np.ndarray) -> np.ndarray:
        """Pull an image-space cotangent back to the full latent vector.

        Frozen coordinates are NOT zeroed here; masking is the optimizer's
        responsibility.
        """
        if not self.differentiable:
            raise CapabilityError(f"{self.kind} generator is not differentiable")
        cot = np.asarray(cotangent, dtype=np.float64)
        expect = (self.output_side, self.output_side, self.channels)
        if cot.shape != expect:
            raise DimensionError(f"cotangent shape {cot.shape} != image shape {expect}")
        return self._vjp(self._as_vector(p), cot)

    def _forward(self, vec: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _vjp(self, vec: np.ndarray, cot: np.ndarray) -> np.ndarray:
        raise CapabilityError(f"{self.kind} generator has no vjp")


class LinearToyGenerator(ToyGenerator):
    """tanh(W v + b) reshaped to an image."""

    kind = "linear"

    def __init__(self, seed: int, latent_dim: int, side: int) -> None:
        super().__init__(seed, latent_dim, side)
        rng = np.random.default_rng(self.seed)
        scale = 1.0 / np.sqrt(self.total_dim)
        self._w = rng.standard_normal((self.pixel_count, self.total_dim)) * scale
        self._b = rng.standard_normal(self.pixel_count) * scale

    def _forward(self, vec: np.ndarray) -> np.ndarray:
        out = np.tanh(self._w @ vec + self._b)
        return out.reshape(self.output_side, self.output_side, self.channels)

    def _vjp(self, vec: np.ndarray, cot: np.ndarray) -> np.ndarray:
        out = np.tanh(self._w @ vec + self._b)
        return self._w.T @ (cot.reshape(-1) * (1.0 - out * out))


class MlpToyGenerator(ToyGenerator):
    """Two tanh layers; the everyday smooth nonlinear toy."""

    kind = "mlp"

    def __init__(self, seed: int, latent_dim: int, side: int) -> None:
        super().__init__(seed, latent_dim, side)
        rng = np.random.default_rng(self.seed)
        d, h, m = self.total_dim, _MLP_HIDDEN, self.pixel_count
        self._w1 = rng.standard_normal((h, d)) / np.sqrt(d)
        self._b1 = rng.standard_normal(h) / np.sqrt(d)
        self._w2 = rng.standard_normal((m, h)) / np.sqrt(h)
        self._b2 = rng.standard_normal(m) / np.sqrt(h)

    def _forward(self, vec: np.ndarray) -> np.ndarray:
        hidden = np.tanh(self._w1 @ vec + self._b1)
        out = np.tanh(self._w2 @ hidden + self._b2)
        return out.reshape(self.output_side, self.output_side, self.channels)

    def _vjp(self, vec: np.ndarray, cot: np.ndarray) -> np.ndarray:
        hidden = np.tanh(self._w1 @ vec + self._b1)
        out = np.tanh(self._w2 @ hidden + self._b2)
        g_pre2 = cot.reshape(-1) * (1.0 - out * out)
        g_hidden = self._w2.T @ g_pre2
        g_pre1 = g_hidden * (1.0 - hidden * hidden)
        return self._w1.T @ g_pre1


class ProceduralToyGenerator(ToyGenerator):
    """Thresholded mixture of seeded sinusoid gratings; not differentiable.

    Each latent coordinate weighs one fixed grating per channel; the sign
    of the mixture picks the pixel value, so the map is piecewise constant.
    """

    kind = "procedural"
    differentiable = False

    def __init__(self, seed: int, latent_dim: int, side: int) -> None:
        super().__init__(seed, latent_dim, side)
        rng = np.random.default_rng(self.seed)
        d, n = self.total_dim, self.output_side
        freq = rng.uniform(2.0 * np.pi, 8.0 * np.pi, size=(d, CHANNELS))
        theta = rng.uniform(0.0, np.pi, size=(d, CHANNELS))
        phase = rng.uniform(0.0, 2.0 * np.pi, size=(d, CHANNELS))
        ys, xs = np.meshgrid(np.arange(n) / n, np.arange(n) / n, indexing="ij")
        # basis[k, y, x, c] = sin(freq * (x cos th + y sin th) + phase)
        proj = (
            xs[None, :, :, None] * np.cos(theta)[:, None, None, :]
            + ys[None, :, :, None] * np.sin(theta)[:, None, None, :]
        )
        self._basis = np.sin(freq[:, None, None, :] * proj + phase[:, None, None, :])

    def _forward(self, vec: np.ndarray) -> np.ndarray:
        mix = np.tensordot(vec, self._basis, axes=1)
        return np.where(mix >= 0.0, 1.0, -1.0)


class ConditionedToyGenerator(ToyGenerator):
    """Class-conditional toy: prototypes blended by the class block.

    The pre-activation is the group-averaged prototype pattern plus a linear
    read of the continuous block, so a one-hot class with ``z = 0`` renders
    that class's prototype exactly.
    """

    kind = "conditioned"

    def __init__(self, seed: int, latent_dim: int, side: int,
                 class_groups: Sequence[int] = (4,)) -> None:
        groups = tuple(int(g) for g in class_groups)
        if not groups or any(g < 2 for g in groups):
            raise ValueError(f"class_groups must be non-empty with sizes >= 2, got {groups}")
        super().__init__(seed, latent_dim, side, groups)
        rng = np.random.default_rng(self.seed)
        m = self.pixel_count
        # One pre-tanh pattern per class value, unit-scale so prototypes differ visibly.
        self._patterns = rng.standard_normal((sum(groups), m))
        self._w = rng.standard_normal((m, self.latent_dim)) / np.sqrt(self.latent_dim)

    def _split(self, vec: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return vec[: self.latent_dim], vec[self.latent_dim :]

    def _forward(self, vec: np.ndarray) -> np.ndarray:
        z, c = self._split(vec)
        pre = (c @ self._patterns) / len(self.class_groups) + self._w @ z
        out = np.tanh(pre)
        return out.reshape(self.output_side, self.output_side, self.channels)

    def _vjp(self, vec: np.ndarray, cot: np.ndarray) -> np.ndarray:
        z, c = self._split(vec)
        pre = (c @ self._patterns) / len(self.class_groups) + self._w @ z
        out = np.tanh(pre)
        g_pre = cot.reshape(-1) * (1.0 - out * out)
        g_z = self._w.T @ g_pre
        g_c = (self._patterns @ g_pre) / len(self.class_groups)
        return np.concatenate([g_z, g_c])

    def prototype_image(self, value: int, group: int = 0) -> ImageBuffer:
        """Render the prototype for one class value (other groups zeroed)."""
        values = np.zeros(sum(self.class_groups))
        offset = sum(self.class_groups[:group])
        if not 0 <= value < self.class_groups[group]:
            raise ValueError(f"class value {value} out of range")
        values[offset + value] = 1.0
        return self.generate(np.concatenate([np.zeros(self.latent_dim), values]))


class SmoothnessDiscriminator:
    """Scores images by negated mean squared discrete Laplacian.

    Constant images score 0, the maximum; high-frequency content drives the
    score down.  The circular 5-point stencil keeps the operator self-adjoint,
    which makes the gradient a double application of the Laplacian.
    """

    discriminator_id = "smoothness"
    differentiable = True

    @staticmethod
    def _laplacian(data: np.ndarray) -> np.ndarray:
        return (
            4.0 * data
            - np.roll(data, 1, axis=0)
            - np.roll(data, -1, axis=0)
            - np.roll(data, 1, axis=1)
            - np.roll(data, -1, axis=1)
        )

    def score(self, img: ImageBuffer) -> float:
        lap = self._laplacian(img.data)
        return float(-np.mean(lap * lap))

    def vjp(self, img: ImageBuffer) -> np.ndarray:
        """Gradient of :meth:`score` with respect to the pixel grid."""
        lap = self._laplacian(img.data)
        return -2.0 / img.data.size * self._laplacian(lap)


def generate(gen: ToyGenerator, p) -> ImageBuffer:
    """Render a latent point through a generator."""
    return gen.generate(p)


def generator_vjp(gen: ToyGenerator, p, cotangent: np.ndarray) -> np.ndarray:
    """Vector-Jacobian product of ``generate`` at ``p``; full-vector output."""
    return gen.vjp(p, cotangent)


def discriminator_score(disc: SmoothnessDiscriminator, img: ImageBuffer) -> float:
    return disc.score(img)


def discriminator_vjp(disc: SmoothnessDiscriminator, img: ImageBuffer) -> np.ndarray:
    return disc.vjp(img)


def make_toy(kind: str, seed: int = 0, d: int = 64, side: int = 32,
             class_groups: Optional[Sequence[int]] = None) -> ToyGenerator:
    """Build a toy generator; ``(kind, seed, dims)`` pins it exactly."""
    if kind not in TOY_KINDS:
        raise ValueError(f"unknown toy kind {kind!r}, expected one of {TOY_KINDS}")
    if not 1 <= d <= MAX_LATENT_DIM:
        raise ValueError(f"latent dim {d} outside [1, {MAX_LATENT_DIM}]")
    if side not in ALLOWED_SIDES:
        raise ValueError(f"side {side} not in {ALLOWED_SIDES}")
    if kind == "conditioned":
        return ConditionedToyGenerator(seed, d, side, class_groups or (4,))
    if class_groups:
        raise ValueError(f"{kind} toy does not take class groups")
    cls = {"linear": LinearToyGenerator, "mlp": MlpToyGenerator,
           "procedural": ProceduralToyGenerator}[kind]
    return cls(seed, d, side)


def toy_from_config(cfg: dict) -> ToyGenerator:
    dims = cfg.get("dims", {})
    return make_toy(
        cfg["kind"],
        seed=int(cfg.get("seed", 0)),
        d=int(dims.get("d", 64)),
        side=int(dims.get("side", 32)),
        class_groups=dims.get("class_groups"),
    )


_ID_PATTERN = re.compile(
    r"^(?P<kind>[a-z]+)-d(?P<d>\d+)-s(?P<side>\d+)-seed(?P<seed>\d+)(?:-g(?P<groups>[\dx]+))?$"
)


class GeneratorRegistry:
    """String-addressable generator store with structured-id fallback.

    Ids of the form ``kind-d{d}-s{side}-seed{n}[-g{a}x{b}]`` resolve even
    when nobody registered them explicitly; resolved handles are cached.
    """

    def __init__(self) -> None:
        self._gens: dict[str, ToyGenerator] = {}

    def register(self, gen: ToyGenerator, name: Optional[str] = None) -> str:
        gen_id = name or gen.generator_id
        self._gens[gen_id] = gen
        return gen_id

    def ids(self) -> list[str]:
        return sorted(self._gens)

    def get(self, gen_id: str) -> ToyGenerator:
        return self._gens[gen_id]

    def resolve(self, gen_id: str) -> ToyGenerator:
        if gen_id in self._gens:
            return self._gens[gen_id]
        m = _ID_PATTERN.match(gen_id)
        if not m:
            raise KeyError(f"unknown generator id {gen_id!r}")
        groups = None
        if m.group("groups"):
            groups = tuple(int(g) for g in m.group("groups").split("x"))
        gen = make_toy(
            m.group("kind"),
            seed=int(m.group("seed")),
            d=int(m.group("d")),
            side=int(m.group("side")),
            class_groups=groups,
        )
        self._gens[gen_id] = gen
        return gen

    def describe(self) -> list[dict]:
        out = []
        for gen_id in self.ids():
            gen = self._gens[gen_id]
            out.append(
                {
                    "id": gen_id,
                    "kind": gen.kind,
                    "latent_dim": gen.latent_dim,
                    "output_side": gen.output_side,
                    "differentiable": gen.differentiable,
                    "class_groups": list(gen.class_groups),
                }
            )
        return out


def default_registry() -> GeneratorRegistry:
    """Registry with one default instance of each toy family."""
    reg = GeneratorRegistry()
    for kind in TOY_KINDS:
        reg.register(make_toy(kind, seed=0, d=64, side=32))
    return reg
