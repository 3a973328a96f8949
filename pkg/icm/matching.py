"""
In-context dense matching: cosine cost volumes between feature
descriptors, winner-take-all flow extraction and the data-term score.
"""
import logging
from concurrent.futures import ThreadPoolExecutor
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from .errors import DimensionError, ContractError
from .tensor import as_image

logger = logging.getLogger(__name__)

class FeatureGrid(object):
    def __init__(self, data, level=0):
        data = as_image(data)
        if not np.all(np.isfinite(data)):
            raise ValueError(f"feature grid at level {level} has non-finite values")
        self.data = data
        self.level = level

    def __repr__(self):
        return f"FeatureGrid(level={self.level}, dims={self.shape})"

    @property
    def shape(self):
        return self.data.shape

    @property
    def height(self):
        return self.data.shape[0]

    @property
    def width(self):
        return self.data.shape[1]

    @property
    def channels(self):
        return self.data.shape[2]

class FeaturePyramid(object):
    """Feature grids ordered from finest (level 0) to coarsest."""
    def __init__(self, grids):
        grids = list(grids)
        if not grids:
            raise DimensionError("a pyramid needs at least one level")
        for finer, coarser in zip(grids, grids[1:]):
            if coarser.height > finer.height or coarser.width > finer.width:
                raise DimensionError(f"pyramid levels must coarsen: {finer!r} -> {coarser!r}")
        self.grids = grids

    def __len__(self):
        return len(self.grids)

    def __iter__(self):
        return iter(self.grids)

    def __getitem__(self, level):
        return self.grids[level]

    def shapes(self):
        return [g.shape for g in self.grids]

class CostVolume(object):
    """
    Cosine similarities between source location u and target location v.

    A full volume stores scores as [H, W, H, W]. A windowed volume
    stores [H, W, K] where K = (2w+1)^2 offsets (dy, dx) in row-major
    order, plus a validity grid for offsets that leave the image.
    """
    def __init__(self, scores, window=None, valid=None):
        self.scores = scores
        self.window = window
        self.valid = valid

    @property
    def grid_shape(self):
        return self.scores.shape[:2]

    @property
    def storage_shape(self):
        return self.scores.shape

    def is_windowed(self):
        return self.window is not None

    def offsets(self):
        return window_offsets(self.window)

    def score(self, r, c, tr, tc):
        """Returns C(u, v) for u = (r, c), v = (tr, tc)."""
        h, w = self.grid_shape
        if not (0 <= tr < h and 0 <= tc < w):
            raise ContractError(f"target ({tr}, {tc}) lies outside the {h}x{w} grid")
        if not self.is_windowed():
            return float(self.scores[r, c, tr, tc])
        dy, dx = tr-r, tc-c
        if max(abs(dy), abs(dx)) > self.window:
            raise ContractError(f"offset ({dx}, {dy}) lies outside search window {self.window}")
        k = (dy+self.window)*(2*self.window+1)+(dx+self.window)
        return float(self.scores[r, c, k])

class FlowField(object):
    """
    Integer offsets per source pixel, stored [H, W, 2] as (dx, dy):
    u = (r, c) maps to (r+dy, c+dx). valid marks pixels that carry a flow.
    """
    def __init__(self, offsets, valid=None):
        offsets = np.asarray(offsets)
        if offsets.ndim != 3 or offsets.shape[2] != 2:
            raise DimensionError(f"a flow needs dims [H, W, 2], got {offsets.shape}")
        self.offsets = offsets.astype(np.int64)
        if valid is None:
            valid = np.ones(offsets.shape[:2], dtype=bool)
        self.valid = np.asarray(valid, dtype=bool)
        if self.valid.shape != offsets.shape[:2]:
            raise DimensionError(f"validity {self.valid.shape} does not match flow {offsets.shape[:2]}")

    @property
    def shape(self):
        return self.offsets.shape[:2]

    @property
    def dx(self):
        return self.offsets[:, :, 0]

    @property
    def dy(self):
        return self.offsets[:, :, 1]

    @classmethod
    def zeros(cls, h, w):
        return cls(np.zeros((h, w, 2), dtype=np.int64))

    @classmethod
    def from_tensor(cls, tensor, valid=None):
        tensor = np.asarray(tensor)
        offsets = np.rint(tensor).astype(np.int64)
        if valid is not None:
            valid = np.asarray(valid)
            valid = valid[:, :, 0] > 0.5 if valid.ndim == 3 else valid > 0.5
        return cls(offsets, valid)

    def to_tensor(self):
        return self.offsets.astype(np.float32)

    def targets(self):
        h, w = self.shape
        rows, cols = np.indices((h, w))
        return rows+self.dy, cols+self.dx

    def check_inside(self):
        h, w = self.shape
        tr, tc = self.targets()
        inside = (tr >= 0) & (tr < h) & (tc >= 0) & (tc < w)
        bad = self.valid & ~inside
        if bad.any():
            r, c = (int(i) for i in np.argwhere(bad)[0])
            raise ContractError(f"flow at ({r}, {c}) points outside the grid:"
                                f" ({int(tr[r, c])}, {int(tc[r, c])})")

    def zero_fraction(self):
        if not self.valid.any():
            return 0.0
        zero = (self.dx == 0) & (self.dy == 0)
        return float(np.count_nonzero(zero & self.valid)/np.count_nonzero(self.valid))

    def rows(self, cost=None):
        """Yields (row, col, dx, dy, score) for every valid pixel."""
        h, w = self.shape
        for r in range(h):
            for c in range(w):
                if not self.valid[r, c]:
                    continue
                dx, dy = int(self.dx[r, c]), int(self.dy[r, c])
                score = cost.score(r, c, r+dy, c+dx) if cost is not None else float('nan')
                yield r, c, dx, dy, score

def window_offsets(window):
    """All (dy, dx) with |dy|, |dx| <= window, in row-major order."""
    span = np.arange(-window, window+1)
    dy, dx = np.meshgrid(span, span, indexing='ij')
    return np.stack([dy.ravel(), dx.ravel()], axis=1)

def _normalize(data):
    data = np.asarray(data, dtype=np.float64)
    norms = np.linalg.norm(data, axis=-1, keepdims=True)
    return np.divide(data, norms, out=np.zeros_like(data), where=norms > 0)

def _map_rows(func, height, threads):
    if threads is None or threads <= 1:
        return [func(r) for r in range(height)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, range(height)))

def cost_volume(src, tgt, window=None, threads=1):
    """
    Computes C(u, v) = <D_src(u), D_tgt(v)> / (|D_src(u)| |D_tgt(v)|).
    Zero-norm descriptors score 0. Rows of the source grid are computed
    independently, so the threaded path is bitwise equal to the
    sequential one.
    """
    if src.shape != tgt.shape:
        raise DimensionError(f"feature grids differ: {src.shape} vs {tgt.shape}")
    if window is not None and window < 0:
        raise ValueError(f"window must be >= 0, got {window}")
    h, w, c = src.shape
    a = _normalize(src.data)
    b = _normalize(tgt.data)

    if window is None:
        flat_b = b.reshape(h*w, c)

        def row(r):
            scores = a[r] @ flat_b.T
            return np.clip(scores, -1, 1).reshape(w, h, w).astype(np.float32)

        scores = np.stack(_map_rows(row, h, threads))
        logger.debug("full cost volume %s", scores.shape)
        return CostVolume(scores)

    offsets = window_offsets(window)
    padded = np.pad(b, ((window, window), (window, window), (0, 0)))
    cols = np.arange(w)

    def row(r):
        scores = np.zeros((w, len(offsets)), dtype=np.float64)
        valid = np.zeros((w, len(offsets)), dtype=bool)
        for k, (dy, dx) in enumerate(offsets):
            if not 0 <= r+dy < h:
                continue
            shifted = padded[r+dy+window, window+dx:window+dx+w]
            scores[:, k] = np.einsum('ij,ij->i', a[r], shifted)
            valid[:, k] = (cols+dx >= 0) & (cols+dx < w)
        scores = np.where(valid, np.clip(scores, -1, 1), 0.0)
        return scores.astype(np.float32), valid

    results = _map_rows(row, h, threads)
    scores = np.stack([s for s, _ in results])
    valid = np.stack([v for _, v in results])
    logger.debug("windowed cost volume %s (window %d)", scores.shape, window)
    return CostVolume(scores, window=window, valid=valid)

def argmax_flow(cost):
    """
    Winner-take-all matching: each source pixel takes its best scoring
    target; ties go to the smallest row-major target index.
    """
    h, w = cost.grid_shape
    rows, cols = np.indices((h, w))
    if not cost.is_windowed():
        best = np.argmax(cost.scores.reshape(h, w, h*w), axis=-1)
        tr, tc = np.divmod(best, w)
        return FlowField(np.stack([tc-cols, tr-rows], axis=-1))

    masked = np.where(cost.valid, cost.scores, -np.inf)
    best = np.argmax(masked, axis=-1)
    offsets = cost.offsets()
    dy = offsets[best, 0]
    dx = offsets[best, 1]
    return FlowField(np.stack([dx, dy], axis=-1))

def map_data_score(cost, flow):
    """Sums C(u, u + F(u)) over all valid source pixels."""
    if flow.shape != cost.grid_shape:
        raise DimensionError(f"flow {flow.shape} does not match cost volume {cost.grid_shape}")
    flow.check_inside()
    tr, tc = flow.targets()
    rows, cols = np.nonzero(flow.valid)
    if not cost.is_windowed():
        picked = cost.scores[rows, cols, tr[rows, cols], tc[rows, cols]]
        return float(np.sum(picked, dtype=np.float64))
    total = 0.0
    for r, c in zip(rows, cols):
        total += cost.score(r, c, int(tr[r, c]), int(tc[r, c]))
    return total

def avg_pool2(image):
    h, w, c = image.shape
    image = image[:h//2*2, :w//2*2]
    return image.reshape(h//2, 2, w//2, 2, c).mean(axis=(1, 3))

def patch_descriptors(img, levels=1, patch=3):
    """
    Builds a descriptor pyramid: level 0 is the input, every further
    level a 2x2 average pool of the previous one. The descriptor of a
    pixel is its edge-clamped patch x patch neighbourhood, flattened
    (patch^2 * C values) and mean-centered. Flat patches yield zero
    descriptors.
    """
    img = as_image(img)
    if levels < 1:
        raise ValueError(f"levels must be >= 1, got {levels}")
    if patch < 1 or patch % 2 == 0:
        raise ValueError(f"patch must be a positive odd number, got {patch}")
    min_side = 2**(levels-1)
    if min(img.shape[:2]) < min_side:
        raise DimensionError(f"image {img.shape[:2]} is too small for {levels} levels"
                             f" (needs >= {min_side} pixels per side)")

    grids = []
    image = img.astype(np.float64)
    radius = patch//2
    for level in range(levels):
        if level:
            image = avg_pool2(image)
        h, w, c = image.shape
        padded = np.pad(image, ((radius, radius), (radius, radius), (0, 0)), mode='edge')
        windows = sliding_window_view(padded, (patch, patch), axis=(0, 1))
        # [H, W, C, p, p] -> [H, W, p, p, C] -> [H, W, p*p*C]
        flat = windows.transpose(0, 1, 3, 4, 2).reshape(h, w, patch*patch*c)
        desc = flat-flat.mean(axis=-1, keepdims=True)
        desc[np.ptp(flat, axis=-1) == 0] = 0
        grids.append(FeatureGrid(desc.astype(np.float32), level=level))
    return FeaturePyramid(grids)

def match_pyramids(src, tgt, window=None, threads=1):
    """Returns one argmax flow per pyramid level."""
    if len(src) != len(tgt):
        raise DimensionError(f"pyramids have {len(src)} and {len(tgt)} levels")
    flows = []
    for level, (s, t) in enumerate(zip(src, tgt)):
        flow = argmax_flow(cost_volume(s, t, window=window, threads=threads))
        logger.info("level %d: %dx%d matched, %.1f%% zero offsets",
                    level, s.height, s.width, 100*flow.zero_fraction())
        flows.append(flow)
    return flows

def endpoint_errors(flow, gt):
    """Chebyshev distance between the two flows' target positions."""
    if flow.shape != gt.shape:
        raise DimensionError(f"flow {flow.shape} and ground truth {gt.shape} differ")
    return np.maximum(np.abs(flow.dx-gt.dx), np.abs(flow.dy-gt.dy))

def flow_accuracy(flow, gt, visibility=None, tol=1):
    """Fraction of pixels valid in both flows (and visible) within tol pixels."""
    mask = flow.valid & gt.valid
    if visibility is not None:
        mask &= np.asarray(visibility, dtype=bool)
    if not mask.any():
        return 0.0
    errors = endpoint_errors(flow, gt)
    return float(np.count_nonzero((errors <= tol) & mask)/np.count_nonzero(mask))

def epe_histogram(flow, gt, visibility=None, max_bin=5):
    """
    Counts of endpoint errors 0, 1, ..., max_bin-1 and ">= max_bin"
    over pixels valid in both flows. Returns a list of (label, count).
    """
    mask = flow.valid & gt.valid
    if visibility is not None:
        mask &= np.asarray(visibility, dtype=bool)
    errors = np.minimum(endpoint_errors(flow, gt)[mask], max_bin)
    counts = np.bincount(errors, minlength=max_bin+1)
    labels = [str(i) for i in range(max_bin)]+[f">={max_bin}"]
    return list(zip(labels, (int(n) for n in counts)))
