"""Toy generator and discriminator contracts."""

import numpy as np
import pytest

from inspire.generators import (
    CapabilityError,
    LatentPoint,
    SmoothnessDiscriminator,
    default_registry,
    discriminator_score,
    discriminator_vjp,
    generate,
    generator_vjp,
    make_toy,
    one_hot_class_block,
    toy_from_config,
)
from inspire.images import ImageBuffer, finite_difference_gradient, gradient_check
from inspire.criteria import pixel_loss


# ---------------------------------------------------------------- LatentPoint


def test_latent_point_full_roundtrip():
    z = np.arange(4.0)
    c = np.array([0.0, 1.0])
    p = LatentPoint(z, class_block=c)
    assert p.continuous_dim == 4 and p.total_dim == 6
    assert np.array_equal(p.full(), np.concatenate([z, c]))
    q = LatentPoint.from_full(p.full(), 4, p.frozen_mask)
    assert np.array_equal(q.z, z) and np.array_equal(q.class_block, c)


def test_latent_point_validation():
    with pytest.raises(ValueError):
        LatentPoint(np.array([]))
    with pytest.raises(ValueError):
        LatentPoint(np.array([np.inf, 0.0]))
    with pytest.raises(ValueError):
        LatentPoint(np.zeros(3), frozen_mask=np.zeros(5, dtype=bool))


def test_one_hot_class_block():
    block = one_hot_class_block((3, 2), (1, 0))
    assert np.array_equal(block, [0.0, 1.0, 0.0, 1.0, 0.0])
    with pytest.raises(ValueError):
        one_hot_class_block((3,), (3,))


# ------------------------------------------------------------------ generate


def test_linear_zero_latent_is_tanh_bias():
    gen = make_toy("linear", seed=2, d=8, side=16)
    img = generate(gen, np.zeros(8))
    expected = np.tanh(gen._b).reshape(16, 16, 3)
    assert np.array_equal(img.data, expected)


def test_generate_deterministic():
    gen = make_toy("mlp", seed=3, d=16, side=16)
    z = np.random.default_rng(0).standard_normal(16)
    a = generate(gen, z)
    b = generate(gen, z)
    assert np.array_equal(a.data, b.data)


def test_mlp_matches_reference_forward():
    # independent plain matmul reimplementation
    gen = make_toy("mlp", seed=7, d=12, side=16)
    z = np.random.default_rng(1).standard_normal(12)
    h = np.tanh(gen._w1 @ z + gen._b1)
    ref = np.tanh(gen._w2 @ h + gen._b2).reshape(16, 16, 3)
    assert np.allclose(generate(gen, z).data, ref, atol=0, rtol=0)


def test_generate_output_in_range():
    for kind in ("linear", "mlp", "procedural"):
        gen = make_toy(kind, seed=1, d=8, side=16)
        z = np.random.default_rng(2).standard_normal(8) * 5.0
        img = generate(gen, z)
        assert np.all(np.abs(img.data) <= 1.0 + 1e-6)


def test_generate_rejects_dimension_mismatch():
    gen = make_toy("linear", seed=0, d=8, side=16)
    with pytest.raises(ValueError):
        generate(gen, np.zeros(9))


def test_same_seed_same_generator():
    z = np.random.default_rng(3).standard_normal(8)
    a = make_toy("procedural", seed=11, d=8, side=16)
    b = make_toy("procedural", seed=11, d=8, side=16)
    assert np.array_equal(generate(a, z).data, generate(b, z).data)
    assert a.generator_id == b.generator_id


def test_config_roundtrip():
    gen = make_toy("conditioned", seed=5, d=8, side=16, class_groups=(3,))
    clone = toy_from_config(gen.to_config())
    z = np.concatenate([np.random.default_rng(4).standard_normal(8), [0.0, 1.0, 0.0]])
    assert np.array_equal(generate(gen, z).data, generate(clone, z).data)


# ----------------------------------------------------------------------- vjp


def test_vjp_zero_cotangent():
    gen = make_toy("mlp", seed=0, d=8, side=16)
    out = generator_vjp(gen, np.zeros(8), np.zeros((16, 16, 3)))
    assert np.array_equal(out, np.zeros(8))


def test_linear_vjp_symbolic():
    # W^T (cot * tanh'(Wz+b)), coordinatewise
    gen = make_toy("linear", seed=9, d=6, side=16)
    rng = np.random.default_rng(5)
    z = rng.standard_normal(6)
    cot = rng.standard_normal((16, 16, 3))
    pre = gen._w @ z + gen._b
    expected = gen._w.T @ (cot.reshape(-1) * (1.0 - np.tanh(pre) ** 2))
    got = generator_vjp(gen, z, cot)
    assert np.allclose(got, expected, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("kind", ["linear", "mlp"])
def test_vjp_matches_finite_differences(kind):
    gen = make_toy(kind, seed=4, d=10, side=16)
    rng = np.random.default_rng(6)
    cot = rng.standard_normal((16, 16, 3))

    def f(z):
        return float(np.vdot(generate(gen, z).data, cot))

    probes = [rng.standard_normal(10) for _ in range(10)]
    rep = gradient_check(f, lambda z: generator_vjp(gen, z, cot), probes, h=1e-5)
    assert rep.rel_error_l2 < 1e-3


def test_conditioned_vjp_matches_finite_differences():
    gen = make_toy("conditioned", seed=4, d=8, side=16, class_groups=(4,))
    rng = np.random.default_rng(7)
    cot = rng.standard_normal((16, 16, 3))

    def f(vec):
        return float(np.vdot(generate(gen, vec).data, cot))

    probes = [rng.standard_normal(12) for _ in range(5)]
    rep = gradient_check(f, lambda v: generator_vjp(gen, v, cot), probes, h=1e-5)
    assert rep.rel_error_l2 < 1e-3


def test_procedural_vjp_is_capability_error():
    gen = make_toy("procedural", seed=0, d=8, side=16)
    assert not gen.differentiable
    with pytest.raises(CapabilityError):
        generator_vjp(gen, np.zeros(8), np.zeros((16, 16, 3)))


# --------------------------------------------------------------- conditioned


def test_conditioned_prototype_at_zero_latent():
    gen = make_toy("conditioned", seed=8, d=8, side=16, class_groups=(4,))
    for j in range(4):
        p = LatentPoint(np.zeros(8), class_block=one_hot_class_block((4,), (j,)))
        proto = gen.prototype_image(j)
        assert np.array_equal(generate(gen, p).data, proto.data)


def test_conditioned_classes_distinguishable():
    gen = make_toy("conditioned", seed=8, d=8, side=16, class_groups=(4,))
    z = np.random.default_rng(8).standard_normal(8)
    imgs = [
        generate(gen, LatentPoint(z, class_block=one_hot_class_block((4,), (j,))))
        for j in range(2)
    ]
    assert pixel_loss(imgs[0], imgs[1]) > 0.01


# ------------------------------------------------------------- discriminator


def test_discriminator_constant_is_maximum():
    disc = SmoothnessDiscriminator()
    flat = ImageBuffer(np.full((16, 16, 3), 0.3))
    # mathematically zero roughness; float residual only
    assert discriminator_score(disc, flat) == pytest.approx(0.0, abs=1e-30)
    rng = np.random.default_rng(9)
    for _ in range(5):
        img = ImageBuffer(rng.uniform(-1, 1, (16, 16, 3)))
        assert discriminator_score(disc, img) <= 0.0


def test_discriminator_noise_monotonicity():
    disc = SmoothnessDiscriminator()
    rng = np.random.default_rng(10)
    base = np.zeros((16, 16, 3))
    noise = rng.standard_normal((16, 16, 3))
    scores = [
        discriminator_score(disc, ImageBuffer(np.clip(base + amp * noise, -1, 1)))
        for amp in (0.01, 0.02, 0.05, 0.1, 0.2)
    ]
    assert all(a > b for a, b in zip(scores, scores[1:]))


def test_discriminator_vjp_matches_finite_differences():
    disc = SmoothnessDiscriminator()
    rng = np.random.default_rng(11)
    x0 = rng.uniform(-0.5, 0.5, (8, 8, 3))

    def f(flat):
        return discriminator_score(disc, ImageBuffer(flat.reshape(8, 8, 3)))

    analytic = discriminator_vjp(disc, ImageBuffer(x0)).reshape(-1)
    numeric = finite_difference_gradient(f, x0.reshape(-1), h=1e-5)
    denom = max(np.linalg.norm(numeric), 1e-30)
    assert np.linalg.norm(analytic - numeric) / denom < 1e-3


# ------------------------------------------------------------------ make_toy


def test_make_toy_validation():
    with pytest.raises(ValueError):
        make_toy("unknown", seed=0)
    with pytest.raises(ValueError):
        make_toy("linear", seed=0, d=0)
    with pytest.raises(ValueError):
        make_toy("linear", seed=0, d=1024)
    with pytest.raises(ValueError):
        make_toy("linear", seed=0, side=24)
    with pytest.raises(ValueError):
        make_toy("mlp", seed=0, class_groups=(4,))  # only conditioned takes groups


def test_registry_resolves_by_id():
    reg = default_registry()
    ids = reg.ids()
    assert any(i.startswith("mlp-") for i in ids)
    gen = reg.resolve("mlp-d64-s32-seed0")
    assert gen.latent_dim == 64 and gen.output_side == 32
    # parse-on-miss for ids not pre-registered
    other = reg.resolve("linear-d16-s16-seed5")
    assert other.latent_dim == 16 and other.seed == 5
    with pytest.raises(KeyError):
        reg.resolve("nonsense")
