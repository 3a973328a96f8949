import math
import logging
import numpy as np
from .errors import DimensionError
from .tensor import as_image, check_same_dims, concat_width

logger = logging.getLogger(__name__)

def round_half_up(x):
    return int(math.floor(x+0.5))

class PixelMask(object):
    """
    A boolean keep-grid of shape [H, W]. True means the pixel is kept.
    """
    def __init__(self, keep):
        keep = np.asarray(keep, dtype=bool)
        if keep.ndim != 2 or min(keep.shape) < 1:
            raise DimensionError(f"a mask needs dims [H, W], got {keep.shape}")
        self.keep = keep
        self.keep.setflags(write=False)

    def __eq__(self, other):
        return isinstance(other, PixelMask) and np.array_equal(self.keep, other.keep)

    def __repr__(self):
        h, w = self.shape
        return f"PixelMask({h}x{w}, keep_count={self.keep_count})"

    @property
    def shape(self):
        return self.keep.shape

    @property
    def keep_count(self):
        return int(np.count_nonzero(self.keep))

    def ratio(self):
        return self.keep_count/self.keep.size

    @classmethod
    def full(cls, h, w):
        return cls(np.ones((h, w), dtype=bool))

    @classmethod
    def empty(cls, h, w):
        return cls(np.zeros((h, w), dtype=bool))

class ConditionInput(object):
    """
    The dual condition: the masked view and the reference placed side by
    side, [H, 2W, C].
    """
    def __init__(self, c_f, mask, ratio_used):
        self.c_f = c_f
        self.mask = mask
        self.ratio_used = ratio_used

    def halves(self):
        width = self.mask.shape[1]
        return self.c_f[:, :width], self.c_f[:, width:]

def describe_ratio(keep_ratio):
    return f"keep {keep_ratio*100:g}% = mask {(1-keep_ratio)*100:g}%"

def sample_mask(h, w, keep_ratio, seed):
    """
    Keeps exactly round_half_up(keep_ratio*h*w) pixels, drawn uniformly
    without replacement by a seeded partial Fisher-Yates shuffle. For a
    fixed seed, the kept set of a smaller ratio is a subset of the kept
    set of a larger one.
    """
    if not 0 <= keep_ratio <= 1:
        raise ValueError(f"keep_ratio must be in [0, 1], got {keep_ratio}")
    if h < 1 or w < 1:
        raise DimensionError(f"mask extents must be >= 1, got {h}x{w}")
    n = h*w
    count = min(n, round_half_up(keep_ratio*h*w))
    rng = np.random.default_rng(seed)
    order = np.arange(n)
    for i in range(count):
        j = int(rng.integers(i, n))
        order[i], order[j] = order[j], order[i]
    keep = np.zeros(n, dtype=bool)
    keep[order[:count]] = True
    return PixelMask(keep.reshape(h, w))

def checkerboard_mask(h, w, phase=0):
    if phase not in (0, 1):
        raise ValueError(f"phase must be 0 or 1, got {phase}")
    rows, cols = np.indices((h, w))
    return PixelMask((rows+cols) % 2 == phase)

def apply_mask(img, mask, fill=0.0):
    img = as_image(img)
    if img.shape[:2] != mask.shape:
        raise DimensionError(f"image {img.shape[:2]} and mask {mask.shape} differ")
    return np.where(mask.keep[:, :, np.newaxis], img, np.float32(fill)).astype(np.float32)

def mask_to_image(mask):
    return mask.keep.astype(np.float32)[:, :, np.newaxis]

def draw_ratio(n_max, rng):
    """A keep ratio drawn uniformly from the open interval (0, n_max)."""
    if n_max == 0:
        return 0.0
    ratio = 0.0
    while ratio == 0.0:
        ratio = float(rng.uniform(0, n_max))
    return ratio

def build_condition(z, z_ref, n_max, seed, fill=0.0):
    z = as_image(z)
    z_ref = as_image(z_ref)
    check_same_dims(z, z_ref, 'view and reference')
    if not 0 <= n_max <= 1:
        raise ValueError(f"n_max must be in [0, 1], got {n_max}")
    rng = np.random.default_rng(seed)
    ratio = draw_ratio(n_max, rng)
    h, w = z.shape[:2]
    mask = sample_mask(h, w, ratio, int(rng.integers(2**63)))
    logger.debug("condition: %s, %d pixels kept", describe_ratio(ratio), mask.keep_count)
    c_f = concat_width(apply_mask(z, mask, fill), z_ref)
    return ConditionInput(c_f, mask, ratio)

def build_target(z, z_ref):
    z = as_image(z)
    z_ref = as_image(z_ref)
    check_same_dims(z, z_ref, 'view and reference')
    return concat_width(z, z_ref)

def pick_reference(view_a, view_b, seed):
    """
    Randomly decides which view of a pair becomes the reference.
    Returns (z, z_ref, swapped).
    """
    swapped = bool(np.random.default_rng(seed).integers(2))
    if swapped:
        return view_b, view_a, True
    return view_a, view_b, False
