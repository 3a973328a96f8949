"""
Noise schedules, forward noising, the noise-prediction loss and the
sampler pieces (deterministic DDIM steps, classifier-free guidance and
latent inpainting).

Kernels compute in float64; tensors are cast to float32 only when they
are written out.
"""
import math
import logging
import numpy as np
from .errors import DimensionError, ContractError
from .masking import round_half_up
from . import const
from .serializers import CSVSerializer

logger = logging.getLogger(__name__)

SCHEDULE_HEADER = ['t', 'beta', 'alpha', 'alpha_bar']

def _as_array(data):
    return np.asarray(data, dtype=np.float64)

def _check_dims(a, b, what):
    if a.shape != b.shape:
        raise DimensionError(f"{what} differ in dims: {a.shape} vs {b.shape}")

class NoiseSchedule(object):
    """
    betas[t] and alphas[t] for t = 1 .. T (index 0 holds beta 0,
    alpha 1), alpha_bars[t] for t = 0 .. T with alpha_bars[0] == 1.
    """
    def __init__(self, betas):
        betas = np.asarray(betas, dtype=np.float64)
        if betas.ndim != 1 or len(betas) < 1:
            raise ValueError("a schedule needs at least one beta")
        if np.any(betas <= 0) or np.any(betas >= 1):
            raise ValueError(f"betas must lie in (0, 1), got {betas.min()} .. {betas.max()}")
        self.betas = np.concatenate([[0.0], betas])
        self.alphas = 1-self.betas
        self.alpha_bars = np.cumprod(self.alphas)

    def __repr__(self):
        return f"NoiseSchedule(T={self.T}, beta={self.betas[1]:g}..{self.betas[-1]:g})"

    @property
    def T(self):
        return len(self.betas)-1

    def alpha_bar(self, t):
        self.check_step(t)
        return float(self.alpha_bars[t])

    def check_step(self, t, allow_zero=True):
        lowest = 0 if allow_zero else 1
        if not lowest <= t <= self.T:
            raise ValueError(f"step t must lie in [{lowest}, {self.T}], got {t}")

    def rows(self):
        """(t, beta, alpha, alpha_bar) for t = 0 .. T."""
        for t in range(self.T+1):
            yield t, float(self.betas[t]), float(self.alphas[t]), float(self.alpha_bars[t])

    def to_table(self):
        return [[str(t)]+[repr(v) for v in values] for t, *values in self.rows()]

def linear_schedule(T, beta_start, beta_end):
    if T < 1:
        raise ValueError(f"T must be >= 1, got {T}")
    if not 0 < beta_start <= beta_end < 1:
        raise ValueError("need 0 < beta_start <= beta_end < 1,"
                         f" got {beta_start} and {beta_end}")
    sched = NoiseSchedule(np.linspace(beta_start, beta_end, T))
    logger.debug("built %r, alpha_bar_T=%g", sched, sched.alpha_bars[-1])
    return sched

def default_schedule():
    return linear_schedule(const.DEFAULT_STEPS,
                           const.DEFAULT_BETA_START,
                           const.DEFAULT_BETA_END)

def write_schedule_csv(path, sched):
    CSVSerializer(path).serialize_table(SCHEDULE_HEADER, sched.to_table())
    logger.debug("wrote %d schedule rows to %s", sched.T+1, path)

def q_sample(z0, t, eps, sched):
    """z_t = sqrt(abar_t) z0 + sqrt(1 - abar_t) eps."""
    z0 = _as_array(z0)
    eps = _as_array(eps)
    _check_dims(z0, eps, "z0 and eps")
    abar = sched.alpha_bar(t)
    return math.sqrt(abar)*z0+math.sqrt(1-abar)*eps

def diffusion_loss(denoiser, z0, t, eps, cond, sched):
    """Mean squared error between eps and the denoiser's prediction."""
    z_t = q_sample(z0, t, eps, sched)
    eps_hat = _as_array(denoiser(z_t, t, cond))
    _check_dims(eps_hat, z_t, "prediction and latent")
    return float(np.mean((_as_array(eps)-eps_hat)**2))

def predict_clean(z_t, eps_hat, t, sched):
    abar = sched.alpha_bar(t)
    return (_as_array(z_t)-math.sqrt(1-abar)*_as_array(eps_hat))/math.sqrt(abar)

def ddim_step(z_t, eps_hat, t, t_prev, sched, eta=0.0, noise=None):
    """
    Moves z_t to step t_prev. eta=0 is the deterministic sampler; for
    eta > 0 the caller supplies the fresh noise.
    """
    if not 0 <= t_prev < t <= sched.T:
        raise ValueError(f"need 0 <= t_prev < t <= {sched.T}, got t={t}, t_prev={t_prev}")
    if eta < 0:
        raise ValueError(f"eta must be >= 0, got {eta}")
    z_t = _as_array(z_t)
    eps_hat = _as_array(eps_hat)
    _check_dims(z_t, eps_hat, "latent and prediction")
    abar = sched.alpha_bar(t)
    abar_prev = sched.alpha_bar(t_prev)
    z0_hat = predict_clean(z_t, eps_hat, t, sched)
    if eta == 0:
        return math.sqrt(abar_prev)*z0_hat+math.sqrt(1-abar_prev)*eps_hat

    if noise is None:
        raise ContractError("ddim_step with eta > 0 needs explicit noise")
    noise = _as_array(noise)
    _check_dims(z_t, noise, "latent and noise")
    sigma = eta*math.sqrt((1-abar_prev)/(1-abar))*math.sqrt(1-abar/abar_prev)
    direction = math.sqrt(max(1-abar_prev-sigma**2, 0.0))
    return math.sqrt(abar_prev)*z0_hat+direction*eps_hat+sigma*noise

def cfg_combine(eps_cond, eps_uncond, scale):
    eps_cond = _as_array(eps_cond)
    eps_uncond = _as_array(eps_uncond)
    _check_dims(eps_cond, eps_uncond, "guidance branches")
    return eps_uncond+scale*(eps_cond-eps_uncond)

def embedding_dropout(emb, p, seed):
    """Zeroes the whole embedding with probability p."""
    if not 0 <= p <= 1:
        raise ValueError(f"dropout probability must lie in [0, 1], got {p}")
    emb = _as_array(emb)
    if np.random.default_rng(seed).random() < p:
        return np.zeros_like(emb)
    return emb

def inpaint_composite(z_t_gen, z_known, keep_mask, t, eps, sched):
    """Kept pixels take q_sample(z_known, t, eps); dropped ones keep z_t_gen."""
    z_t_gen = _as_array(z_t_gen)
    z_known = _as_array(z_known)
    _check_dims(z_t_gen, z_known, "generated and known latents")
    if keep_mask.shape != z_known.shape[:2]:
        raise DimensionError(f"mask {keep_mask.shape} does not match latent {z_known.shape[:2]}")
    noised = q_sample(z_known, t, eps, sched)
    keep = keep_mask.keep
    if z_known.ndim == 3:
        keep = keep[:, :, np.newaxis]
    return np.where(keep, noised, z_t_gen)

def strength_to_start_step(strength, T):
    if not 0 <= strength <= 1:
        raise ValueError(f"strength must lie in [0, 1], got {strength}")
    return min(max(round_half_up(strength*T), 1), T)

def step_ladder(t_start, steps):
    """
    Uniformly spaced integer steps from t_start down to 0, with
    min(steps, t_start) transitions. Strictly decreasing, ends at 0.
    """
    if t_start < 1:
        raise ValueError(f"t_start must be >= 1, got {t_start}")
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    count = min(steps, t_start)
    return [round_half_up(t_start*(count-i)/count) for i in range(count+1)]
