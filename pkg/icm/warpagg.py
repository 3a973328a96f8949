"""
Annealed feature aggregation: profile features are warped into the
target layout and blended into the lighting features level by level.
"""
import logging
import numpy as np
from .errors import DimensionError
from .matching import FeatureGrid, FeaturePyramid
from .const import DEFAULT_ALPHA, DEFAULT_BETA

logger = logging.getLogger(__name__)

class AnnealConfig(object):
    def __init__(self, levels, alpha=DEFAULT_ALPHA, beta=DEFAULT_BETA):
        if levels < 1:
            raise ValueError(f"levels must be >= 1, got {levels}")
        if alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {alpha}")
        if beta < 0:
            raise ValueError(f"beta must be >= 0, got {beta}")
        self.levels = int(levels)
        self.alpha = float(alpha)
        self.beta = float(beta)

    def __repr__(self):
        return f"AnnealConfig(L={self.levels}, alpha={self.alpha}, beta={self.beta})"

def anneal_weights(cfg):
    """W_l = (1 - l/L) * alpha + beta for l = 0 .. L-1; level 0 is finest."""
    return [(1-level/cfg.levels)*cfg.alpha+cfg.beta for level in range(cfg.levels)]

def flat_weights(levels, weight=1.0):
    """Constant per-level weights (aggregation without annealing)."""
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    return [float(weight)]*levels

def warp_nearest(feat, flow):
    """out(u) = feat(clamp(u + F(u))). Invalid flow pixels keep feat(u)."""
    if feat.shape[:2] != flow.shape:
        raise DimensionError(f"features {feat.shape[:2]} and flow {flow.shape} differ")
    h, w = flow.shape
    tr, tc = flow.targets()
    rows, cols = np.indices((h, w))
    tr = np.where(flow.valid, np.clip(tr, 0, h-1), rows)
    tc = np.where(flow.valid, np.clip(tc, 0, w-1), cols)
    return FeatureGrid(feat.data[tr, tc], level=feat.level)

def aggregate_residual(lighting, warped, weights):
    """out_l = lighting_l + W_l * warped_l."""
    weights = list(weights)
    if len(lighting) != len(warped):
        raise DimensionError(f"pyramids have {len(lighting)} and {len(warped)} levels")
    if len(weights) != len(lighting):
        raise DimensionError(f"got {len(weights)} weights for {len(lighting)} levels")
    out = []
    for level, (light, warp, weight) in enumerate(zip(lighting, warped, weights)):
        if light.shape != warp.shape:
            raise DimensionError(f"level {level}: lighting {light.shape} vs warped {warp.shape}")
        data = light.data+np.float32(weight)*warp.data
        out.append(FeatureGrid(data.astype(np.float32), level=light.level))
    return FeaturePyramid(out)

def transfer_features(lighting, profile, flows, weights):
    """Warps every profile level by its flow, then aggregates."""
    flows = list(flows)
    if len(flows) != len(profile):
        raise DimensionError(f"got {len(flows)} flows for {len(profile)} levels")
    warped = FeaturePyramid(warp_nearest(g, f) for g, f in zip(profile, flows))
    logger.debug("aggregating %d levels with weights %s", len(warped), weights)
    return aggregate_residual(lighting, warped, weights)
