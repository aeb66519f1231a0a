"""Composite retrieval criterion and its deterministic feature statistics.

The criterion blends four ingredients: a pixel term, a feature-statistics
term computed by a fixed seeded convolution stack, a latent-norm penalty
keeping search on the prior shell, and a realism term borrowed from a
discriminator.  Named presets pin the blend weights used throughout the
benchmarks; everything here is a pure function of its inputs.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from inspire.images import ImageBuffer, DimensionError, downscale_average, downscale_average_adjoint
from inspire.generators import (
    LatentPoint,
    SmoothnessDiscriminator,
    ToyGenerator,
    generate,
)

# preset -> (lambda_L, lambda_S, lambda_nu, lambda_R)
PRESET_TABLE: dict[str, tuple[float, float, float, float]] = {
    "L2": (50.0, 0.0, 1.0, 0.0),
    "L2+VGG": (50.0, 1.0, 1.0, 0.1),
    "VGG": (0.0, 1.0, 1.0, 0.1),
    "VGG-noR": (0.0, 1.0, 1.0, 0.0),
}

_PRESET_ALIASES = {name.lower(): name for name in PRESET_TABLE}


@dataclass(frozen=True)
class CriterionWeights:
    """Blend weights for the composite criterion."""

    lambda_L: float
    lambda_S: float
    lambda_nu: float
    lambda_R: float
    preset_name: str = "custom"

    @staticmethod
    def preset(name: str) -> "CriterionWeights":
        canonical = _PRESET_ALIASES.get(name.lower())
        if canonical is None:
            raise ValueError(f"unknown criterion preset {name!r}; "
                             f"expected one of {sorted(_PRESET_ALIASES)}")
        lam_l, lam_s, lam_nu, lam_r = PRESET_TABLE[canonical]
        return CriterionWeights(lam_l, lam_s, lam_nu, lam_r, preset_name=canonical)

    def to_json(self) -> dict:
        return {
            "lambda_L": self.lambda_L,
            "lambda_S": self.lambda_S,
            "lambda_nu": self.lambda_nu,
            "lambda_R": self.lambda_R,
            "preset_name": self.preset_name,
        }

    @staticmethod
    def from_json(obj: dict) -> "CriterionWeights":
        return CriterionWeights(
            float(obj["lambda_L"]),
            float(obj["lambda_S"]),
            float(obj["lambda_nu"]),
            float(obj["lambda_R"]),
            str(obj.get("preset_name", "custom")),
        )


@dataclass(frozen=True)
class FeatureStackConfig:
    """Fixed seeded convolution stack used for feature statistics.

    Each stage is a 3x3 circular convolution bank, ReLU, then 2x2 average
    pooling; statistics are read off the post-ReLU activations.  Inputs are
    first block-averaged down to ``input_side``.  ``square_variance_term``
    switches the variance mismatch from a plain Euclidean norm (the default)
    to its square.
    """

    seed: int = 0
    stages: int = 3
    kernels_per_stage: int = 8
    input_side: int = 32
    padding: str = "circular"
    square_variance_term: bool = False

    def __post_init__(self) -> None:
        if self.stages < 1:
            raise ValueError(f"stages must be >= 1, got {self.stages}")
        if self.kernels_per_stage < 1:
            raise ValueError(f"kernels_per_stage must be >= 1, got {self.kernels_per_stage}")
        if self.padding != "circular":
            raise ValueError("padding is fixed to 'circular'")
        if self.input_side % (2 ** self.stages):
            raise ValueError(
                f"input_side {self.input_side} not divisible by 2^stages={2 ** self.stages}"
            )


@dataclass(frozen=True)
class LayerStatistics:
    """Per-channel means and variances over spatial positions of one stage."""

    means: np.ndarray
    variances: np.ndarray


@functools.lru_cache(maxsize=32)
def _kernel_bank(seed: int, stages: int, kernels_per_stage: int) -> tuple[np.ndarray, ...]:
    """Seeded (out, 3, 3, in) kernel per stage, scaled by 1/sqrt(fan-in)."""
    rng = np.random.default_rng(seed)
    banks = []
    in_ch = 3
    for _ in range(stages):
        k = rng.standard_normal((kernels_per_stage, 3, 3, in_ch))
        banks.append(k / np.sqrt(9.0 * in_ch))
        in_ch = kernels_per_stage
    return tuple(banks)


def _conv_circular(x: np.ndarray, kern: np.ndarray) -> np.ndarray:
    """Cross-correlate with circular wrap: y[p,q,o] = sum K[o,dy,dx,c] x[p+dy-1, q+dx-1, c]."""
    n, _, c_in = x.shape
    c_out = kern.shape[0]
    padded = np.pad(x, ((1, 1), (1, 1), (0, 0)), mode="wrap")
    windows = np.lib.stride_tricks.sliding_window_view(padded, (3, 3), axis=(0, 1))
    flat = windows.reshape(n * n, c_in * 9)
    kmat = kern.transpose(3, 1, 2, 0).reshape(c_in * 9, c_out)
    return (flat @ kmat).reshape(n, n, c_out)


def _conv_circular_adjoint(g_out: np.ndarray, kern: np.ndarray) -> np.ndarray:
    # The adjoint of circular cross-correlation is the same operation with
    # the kernel flipped spatially and its channel axes swapped.
    flipped = kern.transpose(3, 1, 2, 0)[:, ::-1, ::-1, :]
    return _conv_circular(g_out, flipped)


def _avg_pool2(x: np.ndarray) -> np.ndarray:
    m = x.shape[0] // 2
    return x.reshape(m, 2, m, 2, x.shape[2]).mean(axis=(1, 3))


def _avg_pool2_adjoint(g: np.ndarray) -> np.ndarray:
    return np.repeat(np.repeat(g, 2, axis=0), 2, axis=1) / 4.0


def _resize_to_input(img: ImageBuffer, cfg: FeatureStackConfig) -> np.ndarray:
    if img.height != img.width:
        raise DimensionError(f"feature stack needs square images, got {img.height}x{img.width}")
    if img.height < cfg.input_side:
        raise DimensionError(
            f"image side {img.height} smaller than extractor input {cfg.input_side}"
        )
    if img.height == cfg.input_side:
        return img.data
    return downscale_average(img, cfg.input_side).data


def _stack_forward(x: np.ndarray, cfg: FeatureStackConfig) -> list[dict]:
    """Run the stack, keeping per-stage inputs and activations for backprop."""
    banks = _kernel_bank(cfg.seed, cfg.stages, cfg.kernels_per_stage)
    stages = []
    cur = x
    for s, kern in enumerate(banks):
        act = np.maximum(_conv_circular(cur, kern), 0.0)
        stages.append({"input": cur, "act": act})
        if s + 1 < cfg.stages:
            cur = _avg_pool2(act)
    return stages


def _stats_of(act: np.ndarray) -> LayerStatistics:
    spatial = act.shape[0] * act.shape[1]
    flat = act.reshape(spatial, act.shape[2])
    means = flat.mean(axis=0)
    variances = flat.var(axis=0)
    return LayerStatistics(means=means, variances=variances)


def extract_features(img: ImageBuffer, cfg: FeatureStackConfig) -> list[LayerStatistics]:
    """Per-stage channel statistics of the seeded convolution stack."""
    stages = _stack_forward(_resize_to_input(img, cfg), cfg)
    return [_stats_of(stage["act"]) for stage in stages]


def _stats_distance(
    a: Sequence[LayerStatistics], b: Sequence[LayerStatistics], square_variance_term: bool
) -> float:
    total = 0.0
    for sa, sb in zip(a, b):
        dm = sa.means - sb.means
        total += float(dm @ dm)
    for sa, sb in zip(a, b):
        dv = sa.variances - sb.variances
        norm = float(np.linalg.norm(dv))
        total += norm * norm if square_variance_term else norm
    return total


def pixel_loss(a: ImageBuffer, b: ImageBuffer) -> float:
    """Mean over pixels of the squared per-pixel difference, channels summed."""
    if a.data.shape != b.data.shape:
        raise DimensionError(f"shape mismatch {a.data.shape} vs {b.data.shape}")
    diff = a.data - b.data
    return float(np.sum(diff * diff) / (a.height * a.width))


def feature_loss(a: ImageBuffer, b: ImageBuffer, cfg: FeatureStackConfig) -> float:
    """Squared mean mismatch plus (by default unsquared) variance-norm mismatch."""
    return _stats_distance(extract_features(a, cfg), extract_features(b, cfg),
                           cfg.square_variance_term)


def norm_penalty(z: np.ndarray) -> float:
    """((1/N) ||z||^2 - 1)^2 over the continuous block only."""
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    if z.size == 0:
        raise ValueError("norm penalty needs a non-empty continuous block")
    r = float(z @ z) / z.size - 1.0
    return r * r


def norm_penalty_gradient(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64).reshape(-1)
    r = float(z @ z) / z.size - 1.0
    return (4.0 * r / z.size) * z


def realism_penalty(disc: SmoothnessDiscriminator, img: ImageBuffer) -> float:
    """Negated discriminator score; lower means the image looks more real."""
    return -disc.score(img)


def classification_loss(logit_groups: Sequence[np.ndarray],
                        labels: Sequence[np.ndarray]) -> float:
    """Sum of one-hot cross-entropies, one softmax per class group."""
    if len(logit_groups) != len(labels):
        raise ValueError(f"{len(logit_groups)} logit groups vs {len(labels)} labels")
    total = 0.0
    for logits, label in zip(logit_groups, labels):
        logits = np.asarray(logits, dtype=np.float64).reshape(-1)
        label = np.asarray(label, dtype=np.float64).reshape(-1)
        if logits.size != label.size:
            raise ValueError(f"logits size {logits.size} != label size {label.size}")
        if not (np.all((label == 0.0) | (label == 1.0)) and label.sum() == 1.0):
            raise ValueError("label must be one-hot")
        shifted = logits - logits.max()
        log_softmax = shifted - np.log(np.sum(np.exp(shifted)))
        total -= float(log_softmax[int(np.argmax(label))])
    return total


def _term_values(
    img: ImageBuffer,
    p: LatentPoint,
    target: ImageBuffer,
    target_stats: Optional[Sequence[LayerStatistics]],
    weights: CriterionWeights,
    disc: SmoothnessDiscriminator,
    cfg: FeatureStackConfig,
    img_stats: Optional[Sequence[LayerStatistics]] = None,
) -> float:
    """Weighted sum, fixed term order: features, norm, realism, pixels."""
    total = 0.0
    if weights.lambda_S != 0.0:
        if img_stats is None:
            img_stats = extract_features(img, cfg)
        total += weights.lambda_S * _stats_distance(img_stats, target_stats,
                                                    cfg.square_variance_term)
    if weights.lambda_nu != 0.0:
        total += weights.lambda_nu * norm_penalty(p.z)
    if weights.lambda_R != 0.0:
        total += weights.lambda_R * realism_penalty(disc, img)
    if weights.lambda_L != 0.0:
        total += weights.lambda_L * pixel_loss(img, target)
    return total


def total_criterion(
    p: LatentPoint,
    target: ImageBuffer,
    weights: CriterionWeights,
    gen: ToyGenerator,
    disc: SmoothnessDiscriminator,
    cfg: FeatureStackConfig,
) -> float:
    """Composite criterion value; makes exactly one generator call."""
    img = generate(gen, p)
    target_stats = extract_features(target, cfg) if weights.lambda_S != 0.0 else None
    return _term_values(img, p, target, target_stats, weights, disc, cfg)


def criterion_value_cached(
    p: LatentPoint,
    target: ImageBuffer,
    weights: CriterionWeights,
    gen: ToyGenerator,
    disc: SmoothnessDiscriminator,
    cfg: FeatureStackConfig,
    target_stats: Optional[Sequence[LayerStatistics]],
) -> float:
    """Same float result as :func:`total_criterion`, target stats precomputed."""
    img = generate(gen, p)
    return _term_values(img, p, target, target_stats, weights, disc, cfg)


def _feature_image_gradient(
    img_data: np.ndarray,
    stages: list[dict],
    target_stats: Sequence[LayerStatistics],
    cfg: FeatureStackConfig,
    source_shape: tuple[int, int, int],
) -> np.ndarray:
    """Backprop the statistics mismatch down to the full-resolution image."""
    banks = _kernel_bank(cfg.seed, cfg.stages, cfg.kernels_per_stage)
    g_next_input: Optional[np.ndarray] = None
    for s in range(cfg.stages - 1, -1, -1):
        act = stages[s]["act"]
        spatial = act.shape[0] * act.shape[1]
        stats = _stats_of(act)
        d_mean = 2.0 * (stats.means - target_stats[s].means)
        dv = stats.variances - target_stats[s].variances
        if cfg.square_variance_term:
            d_var = 2.0 * dv
        else:
            norm = float(np.linalg.norm(dv))
            # Subgradient 0 at the kink, matching the ReLU convention.
            d_var = dv / norm if norm > 0.0 else np.zeros_like(dv)
        g_act = (d_mean[None, None, :] + d_var[None, None, :] * 2.0 * (act - stats.means[None, None, :])) / spatial
        if g_next_input is not None:
            g_act = g_act + _avg_pool2_adjoint(g_next_input)
        g_pre = np.where(act > 0.0, g_act, 0.0)
        g_next_input = _conv_circular_adjoint(g_pre, banks[s])
    if g_next_input.shape == source_shape:
        return g_next_input
    return downscale_average_adjoint(g_next_input, source_shape)


def total_criterion_gradient(
    p: LatentPoint,
    target: ImageBuffer,
    weights: CriterionWeights,
    gen: ToyGenerator,
    disc: SmoothnessDiscriminator,
    cfg: FeatureStackConfig,
) -> np.ndarray:
    """Full-vector gradient of :func:`total_criterion` at ``p``.

    Frozen coordinates are not masked here; conditioning is enforced by the
    optimizer layer.
    """
    _, grad = criterion_value_and_gradient(p, target, weights, gen, disc, cfg)
    return grad


def criterion_value_and_gradient(
    p: LatentPoint,
    target: ImageBuffer,
    weights: CriterionWeights,
    gen: ToyGenerator,
    disc: SmoothnessDiscriminator,
    cfg: FeatureStackConfig,
    target_stats: Optional[Sequence[LayerStatistics]] = None,
) -> tuple[float, np.ndarray]:
    """One-pass value and gradient; a single generator call serves both."""
    img = generate(gen, p)
    g_img = np.zeros_like(img.data)
    img_stats = None
    if weights.lambda_S != 0.0:
        if target_stats is None:
            target_stats = extract_features(target, cfg)
        resized = _resize_to_input(img, cfg)
        stages = _stack_forward(resized, cfg)
        img_stats = [_stats_of(stage["act"]) for stage in stages]
        g_img += weights.lambda_S * _feature_image_gradient(
            resized, stages, target_stats, cfg, img.data.shape
        )
    value = _term_values(img, p, target, target_stats, weights, disc, cfg,
                         img_stats=img_stats)
    if weights.lambda_R != 0.0:
        g_img -= weights.lambda_R * disc.vjp(img)
    if weights.lambda_L != 0.0:
        g_img += weights.lambda_L * (2.0 / (img.height * img.width)) * (img.data - target.data)

    grad = gen.vjp(p, g_img)
    if weights.lambda_nu != 0.0:
        grad[: p.continuous_dim] += weights.lambda_nu * norm_penalty_gradient(p.z)
    return value, grad
