"""
Dual-condition inference: single noising/denoising passes chained into
the progressive loop, where each pass starts from the previous result.
"""
import copy
import logging
import numpy as np
from .diffusion import (q_sample, ddim_step, cfg_combine, inpaint_composite,
                        strength_to_start_step, step_ladder)
from .toynets import TargetPullDenoiser, OracleDenoiser
from .masking import sample_mask
from .warpagg import transfer_features
from .errors import DimensionError
from . import const

logger = logging.getLogger(__name__)

class InferenceConfig(object):
    def __init__(self,
                 iterations=const.DEFAULT_ITERATIONS,
                 strengths=None,
                 sampler_steps=const.DEFAULT_SAMPLER_STEPS,
                 guidance_scale=const.DEFAULT_GUIDANCE,
                 keep_mask=None,
                 seed=0,
                 embedding=None,
                 eta=0.0):
        if iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {iterations}")
        if strengths is None:
            strengths = [const.DEFAULT_STRENGTH]*iterations
        strengths = [float(s) for s in strengths]
        if len(strengths) != iterations:
            raise ValueError(f"got {len(strengths)} strengths for {iterations} iterations")
        for strength in strengths:
            if not 0 < strength <= 1:
                raise ValueError(f"strengths must lie in (0, 1], got {strength}")
        if sampler_steps < 1:
            raise ValueError(f"sampler_steps must be >= 1, got {sampler_steps}")
        if eta < 0:
            raise ValueError(f"eta must be >= 0, got {eta}")
        self.iterations = int(iterations)
        self.strengths = strengths
        self.sampler_steps = int(sampler_steps)
        self.guidance_scale = float(guidance_scale)
        self.keep_mask = keep_mask
        self.seed = int(seed)
        self.embedding = np.zeros(1) if embedding is None else np.asarray(embedding, dtype=np.float64)
        self.eta = float(eta)

    def __repr__(self):
        return (f"InferenceConfig(iterations={self.iterations}, strengths={self.strengths},"
                f" steps={self.sampler_steps}, s={self.guidance_scale},"
                f" eta={self.eta:g}, seed={self.seed})")

class PassRecord(object):
    def __init__(self, iteration, start_step, steps, distances, latent):
        self.iteration = iteration
        self.start_step = start_step
        self.steps = steps          # step ladder, t_start .. 0
        self.distances = distances  # distance to target after each transition
        self.latent = latent

    @property
    def end_distance(self):
        return self.distances[-1] if self.distances else float('nan')

class InferenceTrace(object):
    def __init__(self):
        self.records = []

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def append(self, record):
        self.records.append(record)

    def end_distances(self):
        return [r.end_distance for r in self.records]

    def rows(self):
        """(iteration, step, t, distance_to_target); step 0 is the noised start."""
        for record in self.records:
            for step, (t, distance) in enumerate(zip(record.steps, record.distances)):
                yield record.iteration, step, t, distance

class DenoiserPair(object):
    """
    Conditioned and unconditioned branches, fixed across passes. An
    embedding set here replaces the one of the inference config.
    """
    def __init__(self, cond, uncond=None, embedding=None):
        self.cond = cond
        self.uncond = cond if uncond is None else uncond
        self.embedding = None if embedding is None else np.asarray(embedding, dtype=np.float64)

    def for_pass(self, x, iteration):
        return self.cond, self.uncond

class ReconstructionPrior(DenoiserPair):
    """
    The unconditioned branch reconstructs the pass input: the network
    without an identity embedding still sees the masked style condition.
    """
    def __init__(self, cond, sched, embedding=None):
        super(ReconstructionPrior, self).__init__(cond, embedding=embedding)
        self.sched = sched

    def for_pass(self, x, iteration):
        return self.cond, TargetPullDenoiser(x, self.sched)

class OraclePair(DenoiserPair):
    """Both branches return the noise the pass itself injects."""
    def __init__(self, seed):
        super(OraclePair, self).__init__(None)
        self.seed = seed

    def for_pass(self, x, iteration):
        oracle = OracleDenoiser(pass_noise(self.seed, iteration, x.shape))
        return oracle, oracle

def with_reconstruction_prior(cond, sched):
    return ReconstructionPrior(cond, sched)

def as_denoiser_pair(denoisers):
    if isinstance(denoisers, DenoiserPair):
        return denoisers
    if isinstance(denoisers, (tuple, list)):
        return DenoiserPair(*denoisers)
    return DenoiserPair(denoisers)

def latent_distance(a, b):
    """Root mean square difference."""
    return float(np.sqrt(np.mean((np.asarray(a, np.float64)-np.asarray(b, np.float64))**2)))

def pass_noise(seed, iteration, shape):
    return np.random.default_rng([seed, iteration]).standard_normal(shape)

def step_noise(seed, iteration, t, shape):
    """Fresh noise of the ancestral sampler when leaving step t."""
    return np.random.default_rng([seed, iteration, t]).standard_normal(shape)

def _run_pass(x, cond, uncond, strength, cfg, sched, iteration, target, embedding=None):
    t_start = strength_to_start_step(strength, sched.T)
    ladder = step_ladder(t_start, cfg.sampler_steps)
    eps = pass_noise(cfg.seed, iteration, x.shape)
    if cfg.keep_mask is not None and cfg.keep_mask.shape != x.shape[:2]:
        raise DimensionError(f"keep mask {cfg.keep_mask.shape} does not match latent {x.shape[:2]}")

    z = q_sample(x, t_start, eps, sched)
    distances = []
    if target is not None:
        distances.append(latent_distance(z, target))
    if embedding is None:
        embedding = cfg.embedding
    uncond_emb = np.zeros_like(embedding)
    for t, t_prev in zip(ladder, ladder[1:]):
        eps_hat = cfg_combine(cond(z, t, embedding),
                              uncond(z, t, uncond_emb),
                              cfg.guidance_scale)
        if cfg.eta > 0:
            z = ddim_step(z, eps_hat, t, t_prev, sched, eta=cfg.eta,
                          noise=step_noise(cfg.seed, iteration, t, x.shape))
        else:
            z = ddim_step(z, eps_hat, t, t_prev, sched)
        if cfg.keep_mask is not None:
            z = inpaint_composite(z, x, cfg.keep_mask, t_prev, eps, sched)
        if target is not None:
            distances.append(latent_distance(z, target))
    logger.debug("pass %d: strength %.3f, t_start %d, %d steps",
                 iteration, strength, t_start, len(ladder)-1)
    return z, PassRecord(iteration, t_start, ladder, distances, z)

def single_pass(style, denoiser_cond, denoiser_uncond, strength, cfg, sched, iteration=0):
    """
    Noises style to the step given by strength, then denoises it back to
    t=0 with guided DDIM steps. With a keep mask the kept pixels are
    restored after every step.
    """
    if not 0 < strength <= 1:
        raise ValueError(f"strength must lie in (0, 1], got {strength}")
    z, _ = _run_pass(np.asarray(style, dtype=np.float64), denoiser_cond, denoiser_uncond,
                     strength, cfg, sched, iteration, None)
    return z

def progressive_inference(style, denoisers, config, sched, target=None):
    """
    Runs config.iterations passes, each fed the previous output. Returns
    the final latent and the trace. Distances are recorded when a target
    is given.
    """
    pair = as_denoiser_pair(denoisers)
    x = np.asarray(style, dtype=np.float64)
    if target is not None:
        target = np.asarray(target, dtype=np.float64)
        if target.shape != x.shape:
            raise DimensionError(f"target {target.shape} does not match style {x.shape}")
    trace = InferenceTrace()
    for iteration, strength in enumerate(config.strengths):
        cond, uncond = pair.for_pass(x, iteration)
        x, record = _run_pass(x, cond, uncond, strength, config, sched, iteration, target,
                              pair.embedding)
        trace.append(record)
        if target is not None:
            logger.info("iteration %d: distance to target %.6f", iteration, record.end_distance)
    return x, trace

def embedding_from_features(pyramid):
    """Concatenated per-level channel means of a feature pyramid."""
    return np.concatenate([grid.data.astype(np.float64).mean(axis=(0, 1)) for grid in pyramid])

def feature_conditioned_pair(lighting, profile, flows, weights, denoisers):
    """
    Warps the profile pyramid into the lighting pyramid along flows,
    aggregates with weights and conditions denoisers on the embedding of
    the aggregated features. denoisers is a denoiser, a (cond, uncond)
    tuple or a DenoiserPair, which is copied. Returns (pair, aggregated).
    """
    aggregated = transfer_features(lighting, profile, flows, weights)
    pair = copy.copy(as_denoiser_pair(denoisers))
    pair.embedding = embedding_from_features(aggregated)
    logger.info("condition embedding from %d feature levels: %d values",
                len(aggregated), len(pair.embedding))
    return pair, aggregated

def keep_ratio_sweep(style, target, ratios, seeds, sched, strength=const.DEFAULT_STRENGTH,
                     sampler_steps=const.DEFAULT_SAMPLER_STEPS):
    """
    Mean reconstruction error against style for every keep ratio, one
    target-pull pass per seed with inpainting. Returns [(ratio, error)].
    """
    style = np.asarray(style, dtype=np.float64)
    h, w = style.shape[:2]
    denoiser = TargetPullDenoiser(target, sched)
    results = []
    for ratio in ratios:
        errors = []
        for seed in seeds:
            mask = sample_mask(h, w, ratio, seed)
            cfg = InferenceConfig(iterations=1, strengths=[strength],
                                  sampler_steps=sampler_steps, keep_mask=mask, seed=seed)
            out = single_pass(style, denoiser, denoiser, strength, cfg, sched)
            errors.append(float(np.mean(np.abs(out-style))))
        results.append((float(ratio), float(np.mean(errors))))
        logger.info("keep ratio %.2f: error %.6f", ratio, results[-1][1])
    return results
