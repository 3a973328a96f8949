"""
Denoisers that stand in for a trained noise-prediction network.

A denoiser is any callable ``d(z_t, t, cond)`` returning a noise
prediction with the dims of z_t. The classes here are small enough to
have exact behaviour: an oracle, an analytic target-pull predictor and
an affine model with closed-form gradients.
"""
import math
import logging
import numpy as np
from .errors import DimensionError, ContractError
from .diffusion import q_sample, embedding_dropout

logger = logging.getLogger(__name__)

class Denoiser(object):
    name = None

    def predict(self, z_t, t, cond):
        raise NotImplementedError

    def __call__(self, z_t, t, cond=None):
        z_t = np.asarray(z_t, dtype=np.float64)
        eps_hat = self.predict(z_t, t, cond)
        if eps_hat.shape != z_t.shape:
            raise DimensionError(f"{self.name} predicted {eps_hat.shape} for a {z_t.shape} latent")
        return eps_hat

class OracleDenoiser(Denoiser):
    """Returns the stored noise, whatever it is asked."""
    name = 'oracle'

    def __init__(self, stored_eps):
        self.stored_eps = np.asarray(stored_eps, dtype=np.float64)

    def predict(self, z_t, t, cond):
        if z_t.shape != self.stored_eps.shape:
            raise DimensionError(f"oracle holds {self.stored_eps.shape} noise,"
                                 f" asked for {z_t.shape}")
        return self.stored_eps.copy()

class TargetPullDenoiser(Denoiser):
    """
    Predicts the noise that makes the clean-image estimate equal a fixed
    target: eps = (z_t - sqrt(abar_t) target) / sqrt(1 - abar_t).
    """
    name = 'target-pull'

    def __init__(self, target, sched):
        self.target = np.asarray(target, dtype=np.float64)
        self.sched = sched

    def predict(self, z_t, t, cond):
        if t == 0:
            raise ContractError("the target-pull denoiser is undefined at t=0")
        if z_t.shape != self.target.shape:
            raise DimensionError(f"target {self.target.shape} does not match latent {z_t.shape}")
        abar = self.sched.alpha_bar(t)
        return (z_t-math.sqrt(abar)*self.target)/math.sqrt(1-abar)

class AffineDenoiser(Denoiser):
    """eps = a * z_t + b, per element. t and cond are ignored."""
    name = 'affine'

    def __init__(self, a, b):
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if a.shape != b.shape:
            raise DimensionError(f"gain {a.shape} and bias {b.shape} differ")
        self.a = a
        self.b = b

    def __repr__(self):
        return f"AffineDenoiser(shape={self.shape})"

    @property
    def shape(self):
        return self.a.shape

    @classmethod
    def zeros(cls, shape):
        return cls(np.zeros(shape), np.zeros(shape))

    def copy(self):
        return AffineDenoiser(self.a.copy(), self.b.copy())

    def predict(self, z_t, t, cond):
        return affine_forward(self, z_t, t, cond)

def oracle_denoiser(stored_eps):
    return OracleDenoiser(stored_eps)

def target_pull_denoiser(target, sched):
    return TargetPullDenoiser(target, sched)

def affine_forward(d, z_t, t=None, cond=None):
    z_t = np.asarray(z_t, dtype=np.float64)
    if z_t.shape != d.shape:
        raise DimensionError(f"affine denoiser of shape {d.shape} got {z_t.shape}")
    return d.a*z_t+d.b

def affine_loss_grad(d, z0, t, eps, sched):
    """Returns (loss, grad_a, grad_b) of the noise-prediction MSE."""
    eps = np.asarray(eps, dtype=np.float64)
    z_t = q_sample(z0, t, eps, sched)
    residual = affine_forward(d, z_t)-eps
    n = residual.size
    loss = float(np.mean(residual**2))
    return loss, 2*residual*z_t/n, 2*residual/n

def gradient_check(d, z0, t, eps, sched, h=1e-4):
    """
    Largest relative error between the analytic gradient and central
    differences over all parameters.
    """
    _, grad_a, grad_b = affine_loss_grad(d, z0, t, eps, sched)
    analytic = np.concatenate([grad_a.ravel(), grad_b.ravel()])
    numeric = np.zeros_like(analytic)
    shifted = d.copy()
    params = [shifted.a, shifted.b]
    k = 0
    for param in params:
        flat = param.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved+h
            plus = affine_loss_grad(shifted, z0, t, eps, sched)[0]
            flat[i] = saved-h
            minus = affine_loss_grad(shifted, z0, t, eps, sched)[0]
            flat[i] = saved
            numeric[k] = (plus-minus)/(2*h)
            k += 1
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-12)
    return float(np.max(np.abs(analytic-numeric))/scale)

class TrainingSample(object):
    def __init__(self, z0, t, eps, cond):
        self.z0 = np.asarray(z0, dtype=np.float64)
        self.t = int(t)
        self.eps = np.asarray(eps, dtype=np.float64)
        self.cond = np.asarray(cond, dtype=np.float64)

    def __iter__(self):
        return iter((self.z0, self.t, self.eps, self.cond))

def dataset_loss(d, dataset, sched):
    return float(np.mean([affine_loss_grad(d, s.z0, s.t, s.eps, sched)[0] for s in dataset]))

def sgd_train(d, dataset, lr, steps, seed, sched):
    """
    Plain gradient descent on a copy of d. Each step takes one sample,
    drawn in a seeded order. Returns the trained copy.
    """
    if lr < 0:
        raise ValueError(f"lr must be >= 0, got {lr}")
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    dataset = list(dataset)
    if not dataset:
        raise ValueError("cannot train on an empty dataset")
    rng = np.random.default_rng(seed)
    trained = d.copy()
    order = []
    for step in range(steps):
        if not order:
            order = list(rng.permutation(len(dataset)))
        sample = dataset[order.pop()]
        loss, grad_a, grad_b = affine_loss_grad(trained, sample.z0, sample.t, sample.eps, sched)
        trained.a -= lr*grad_a
        trained.b -= lr*grad_b
        if step % 50 == 0:
            logger.debug("step %d: loss %.6f", step, loss)
    logger.info("trained %d steps at lr=%g", steps, lr)
    return trained

def cross_profile_pairing(n, seed):
    """
    A random derangement of range(n): sample i is conditioned on the
    embedding of profile pairing[i] != i. n == 1 pairs with itself.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if n == 1:
        return [0]
    rng = np.random.default_rng(seed)
    while True:
        perm = rng.permutation(n)
        if not np.any(perm == np.arange(n)):
            return [int(i) for i in perm]

def toy_dataset(count, shape, seed, sched, emb_dim=4, dropout=0.0):
    """
    Builds count training samples. Clean latents and embeddings are
    drawn per profile; each latent is conditioned on another profile's
    embedding, dropped to zeros with probability dropout.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    rng = np.random.default_rng(seed)
    latents = rng.standard_normal((count,)+tuple(shape))
    embeddings = rng.standard_normal((count, emb_dim))
    pairing = cross_profile_pairing(count, rng.integers(2**63))
    samples = []
    for i in range(count):
        t = int(rng.integers(1, sched.T+1))
        eps = rng.standard_normal(shape)
        cond = embedding_dropout(embeddings[pairing[i]], dropout, rng.integers(2**63))
        samples.append(TrainingSample(latents[i], t, eps, cond))
    return samples
