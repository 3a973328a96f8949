import numpy as np
import pytest
from icm.errors import DimensionError
from icm.diffusion import linear_schedule
from icm.masking import PixelMask, sample_mask
from icm.matching import patch_descriptors, match_pyramids
from icm.warpagg import AnnealConfig, anneal_weights, transfer_features
from icm.toynets import Denoiser, OracleDenoiser, TargetPullDenoiser, AffineDenoiser
from icm.inference import (InferenceConfig, DenoiserPair, OraclePair, pass_noise, single_pass,
                           progressive_inference, with_reconstruction_prior,
                           embedding_from_features, feature_conditioned_pair,
                           keep_ratio_sweep, latent_distance)

def images(rng, shape=(32, 32, 3)):
    return rng.random(shape), rng.random(shape)

def test_config_validation():
    assert InferenceConfig().strengths == [0.3, 0.3, 0.3]
    with pytest.raises(ValueError):
        InferenceConfig(iterations=2, strengths=[0.3])
    with pytest.raises(ValueError):
        InferenceConfig(iterations=1, strengths=[0.0])
    with pytest.raises(ValueError):
        InferenceConfig(iterations=0)
    with pytest.raises(ValueError):
        InferenceConfig(eta=-0.5)

def test_single_pass_oracle_reconstructs(rng, sched):
    style, _ = images(rng, (8, 8, 3))
    cfg = InferenceConfig(iterations=1, strengths=[0.6], seed=4)
    oracle = OracleDenoiser(pass_noise(4, 0, style.shape))
    out = single_pass(style, oracle, oracle, 0.6, cfg, sched)
    assert np.allclose(out, style, atol=1e-4)

def test_single_pass_target_pull_contracts(rng, sched):
    style, target = images(rng, (8, 8, 1))
    d = TargetPullDenoiser(target, sched)
    cfg = InferenceConfig(iterations=1, strengths=[0.2], seed=1)
    out = single_pass(style, d, d, 0.2, cfg, sched)
    assert latent_distance(out, target) < latent_distance(style, target)

def test_single_pass_full_mask_restores_style(rng, sched):
    style, target = images(rng, (6, 6, 3))
    cfg = InferenceConfig(iterations=1, strengths=[0.9], keep_mask=PixelMask.full(6, 6), seed=2)
    for d in (TargetPullDenoiser(target, sched), AffineDenoiser(np.ones(style.shape), np.zeros(style.shape))):
        out = single_pass(style, d, d, 0.9, cfg, sched)
        assert np.allclose(out, style, atol=1e-4)

def test_single_pass_rejects_strength(rng, sched):
    style, _ = images(rng, (2, 2, 1))
    d = OracleDenoiser(np.zeros(style.shape))
    with pytest.raises(ValueError):
        single_pass(style, d, d, 0.0, InferenceConfig(), sched)

def test_single_pass_mask_dims(rng, sched):
    style, target = images(rng, (4, 4, 1))
    d = TargetPullDenoiser(target, sched)
    cfg = InferenceConfig(iterations=1, strengths=[0.5], keep_mask=PixelMask.full(3, 4))
    with pytest.raises(DimensionError):
        single_pass(style, d, d, 0.5, cfg, sched)

def test_one_iteration_equals_single_pass(rng, sched):
    style, target = images(rng, (8, 8, 3))
    d = TargetPullDenoiser(target, sched)
    cfg = InferenceConfig(iterations=1, strengths=[0.4], guidance_scale=0.5, seed=3)
    out, trace = progressive_inference(style, DenoiserPair(d), cfg, sched)
    assert np.array_equal(out, single_pass(style, d, d, 0.4, cfg, sched))
    assert len(trace) == 1
    assert trace.records[0].start_step == 20

def test_progressive_oracle_pair(rng, sched):
    style, _ = images(rng, (8, 8, 3))
    cfg = InferenceConfig(seed=11)
    out, _ = progressive_inference(style, OraclePair(11), cfg, sched)
    assert np.allclose(out, style, atol=1e-4)

def test_progressive_distances_decrease(rng, sched):
    style, target = images(rng)
    pair = with_reconstruction_prior(TargetPullDenoiser(target, sched), sched)
    cfg = InferenceConfig(iterations=3, strengths=[0.3, 0.3, 0.3], seed=0)
    _, trace = progressive_inference(style, pair, cfg, sched, target=target)
    ends = trace.end_distances()
    start = latent_distance(style, target)
    assert len(ends) == 3
    assert start > ends[0] > ends[1] > ends[2]
    assert ends[0] == pytest.approx(0.5*start, rel=1e-6)

def test_any_positive_strengths_contract(rng, sched):
    style, target = images(rng, (8, 8, 1))
    pair = with_reconstruction_prior(TargetPullDenoiser(target, sched), sched)
    for seed in range(5):
        strengths = list(rng.uniform(0.05, 1.0, size=4))
        cfg = InferenceConfig(iterations=4, strengths=strengths, seed=seed)
        _, trace = progressive_inference(style, pair, cfg, sched, target=target)
        ends = trace.end_distances()
        assert all(a > b for a, b in zip(ends, ends[1:]))

def test_small_strengths_beat_one_large_pass(sched):
    for seed in range(10):
        rng = np.random.default_rng(seed)
        style, target = images(rng)
        pair = with_reconstruction_prior(TargetPullDenoiser(target, sched), sched)
        three, _ = progressive_inference(style, pair, InferenceConfig(3, [0.3]*3, seed=seed), sched)
        one, _ = progressive_inference(style, pair, InferenceConfig(1, [0.9], seed=seed), sched)
        assert latent_distance(three, target) < latent_distance(one, target)

def test_progressive_is_deterministic(rng, sched):
    style, target = images(rng, (8, 8, 3))
    pair = with_reconstruction_prior(TargetPullDenoiser(target, sched), sched)
    cfg = InferenceConfig(keep_mask=sample_mask(8, 8, 0.3, 1), seed=7)
    a, trace_a = progressive_inference(style, pair, cfg, sched, target=target)
    b, trace_b = progressive_inference(style, pair, cfg, sched, target=target)
    assert np.array_equal(a, b)
    assert list(trace_a.rows()) == list(trace_b.rows())

def test_full_mask_progressive(rng, sched):
    style, target = images(rng, (8, 8, 3))
    cfg = InferenceConfig(keep_mask=PixelMask.full(8, 8), seed=7)
    out, _ = progressive_inference(style, DenoiserPair(TargetPullDenoiser(target, sched)), cfg, sched)
    assert np.allclose(out, style, atol=1e-4)

def test_trace_rows(rng):
    sched = linear_schedule(10, 0.01, 0.2)
    style, target = images(rng, (2, 2, 1))
    pair = with_reconstruction_prior(TargetPullDenoiser(target, sched), sched)
    cfg = InferenceConfig(iterations=2, strengths=[0.5, 0.5], sampler_steps=2)
    _, trace = progressive_inference(style, pair, cfg, sched, target=target)
    rows = list(trace.rows())
    assert [(i, step, t) for i, step, t, _ in rows] == [
        (0, 0, 5), (0, 1, 3), (0, 2, 0),
        (1, 0, 5), (1, 1, 3), (1, 2, 0),
    ]

def test_target_shape_checked(rng, sched):
    style, _ = images(rng, (4, 4, 1))
    with pytest.raises(DimensionError):
        progressive_inference(style, OraclePair(0), InferenceConfig(), sched, target=np.zeros((4, 4, 3)))

def test_embedding_from_features(rng):
    pyramid = patch_descriptors(rng.random((8, 8, 1)), levels=2, patch=3)
    emb = embedding_from_features(pyramid)
    assert emb.shape == (18,)
    assert np.allclose(emb[:9], pyramid[0].data.mean(axis=(0, 1)))

def test_keep_ratio_sweep_is_monotone(rng, sched):
    style, target = images(rng, (16, 16, 3))
    results = keep_ratio_sweep(style, target, [0.1, 0.3, 0.5, 0.8], seeds=range(5), sched=sched)
    errors = [e for _, e in results]
    assert [r for r, _ in results] == [0.1, 0.3, 0.5, 0.8]
    assert all(a >= b for a, b in zip(errors, errors[1:]))
    assert errors[-1] < errors[0]

class RecordingDenoiser(Denoiser):
    name = 'recording'

    def __init__(self, inner):
        self.inner = inner
        self.conds = []

    def predict(self, z_t, t, cond):
        self.conds.append(np.array(cond))
        return self.inner(z_t, t, cond)

def test_matched_features_condition_the_sampler(rng, sched):
    style, target = images(rng, (16, 16, 3))
    profile = np.roll(style, 2, axis=1)
    lighting = patch_descriptors(style, levels=2, patch=3)
    features = patch_descriptors(profile, levels=2, patch=3)
    flows = match_pyramids(lighting, features, window=3)
    weights = anneal_weights(AnnealConfig(2))
    recorder = RecordingDenoiser(TargetPullDenoiser(target, sched))
    prior = with_reconstruction_prior(recorder, sched)

    pair, aggregated = feature_conditioned_pair(lighting, features, flows, weights, prior)
    expected = embedding_from_features(transfer_features(lighting, features, flows, weights))
    assert aggregated.shapes() == lighting.shapes()
    assert pair.embedding.shape == (2*27,)
    assert np.array_equal(pair.embedding, expected)
    assert prior.embedding is None

    cfg = InferenceConfig(iterations=2, strengths=[0.3, 0.3], seed=1)
    _, trace = progressive_inference(style, pair, cfg, sched, target=target)
    assert len(recorder.conds) == 2*15
    assert all(np.array_equal(cond, expected) for cond in recorder.conds)
    ends = trace.end_distances()
    assert ends[1] < ends[0]

def test_config_embedding_without_features(rng, sched):
    style, target = images(rng, (4, 4, 1))
    recorder = RecordingDenoiser(TargetPullDenoiser(target, sched))
    cfg = InferenceConfig(iterations=1, strengths=[0.2], embedding=[1.0, 2.0])
    progressive_inference(style, DenoiserPair(recorder), cfg, sched)
    assert recorder.conds
    assert all(cond.tolist() in ([1.0, 2.0], [0.0, 0.0]) for cond in recorder.conds)

def distances_at(trace, step):
    return [d for _, s, _, d in trace.rows() if s == step]

def test_ancestral_sampler(rng, sched):
    style, target = images(rng, (8, 8, 3))
    pair = with_reconstruction_prior(TargetPullDenoiser(target, sched), sched)
    strengths = [0.4, 0.4]
    plain, plain_trace = progressive_inference(
        style, pair, InferenceConfig(2, strengths, seed=3), sched, target=target)
    noisy, noisy_trace = progressive_inference(
        style, pair, InferenceConfig(2, strengths, seed=3, eta=1.0), sched, target=target)
    again, _ = progressive_inference(
        style, pair, InferenceConfig(2, strengths, seed=3, eta=1.0), sched, target=target)
    assert np.array_equal(noisy, again)
    # The last step has no noise, so every pass still lands on its guided estimate.
    assert np.allclose(noisy, plain, atol=1e-6)
    assert distances_at(noisy_trace, 3) != pytest.approx(distances_at(plain_trace, 3))
