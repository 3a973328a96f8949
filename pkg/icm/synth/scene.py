"""
Orthographic Lambertian renderer for a textured ellipsoid rotated about
the vertical axis, plus the exact pixel correspondence between two
poses.

World coordinates: x to the right, y up, the viewer at +z looking down
-z. The image spans [-1, 1] world units along its shorter side.
"""
import logging
import numpy as np
from scipy.spatial.transform import Rotation
from ..matching import FlowField
from ..errors import DimensionError
from .noise import ValueNoise

logger = logging.getLogger(__name__)

ALBEDO_MIN = 0.1
ALBEDO_MAX = 0.9

class SceneParams(object):
    def __init__(self, radii=(0.6, 0.6, 0.6), texture_seed=0, light_dir=(0.0, 0.0, 1.0),
                 ambient=0.3, image_size=(64, 64), yaw_a=0.0, yaw_b=0.0):
        radii = tuple(float(r) for r in radii)
        if len(radii) != 3 or min(radii) <= 0:
            raise ValueError(f"radii must be three positive values, got {radii}")
        light_dir = np.asarray(light_dir, dtype=np.float64)
        if light_dir.shape != (3,) or abs(np.linalg.norm(light_dir)-1) > 1e-6:
            raise ValueError(f"light_dir must be a unit 3-vector, got {light_dir}")
        if not 0 <= ambient <= 1:
            raise ValueError(f"ambient must lie in [0, 1], got {ambient}")
        height, width = (int(v) for v in image_size)
        if height < 1 or width < 1:
            raise DimensionError(f"image size must be positive, got {image_size}")
        self.radii = radii
        self.texture_seed = int(texture_seed)
        self.light_dir = light_dir
        self.ambient = float(ambient)
        self.image_size = height, width
        self.yaw_a = float(yaw_a)
        self.yaw_b = float(yaw_b)

    def __repr__(self):
        return (f"SceneParams(radii={self.radii}, texture_seed={self.texture_seed},"
                f" size={self.image_size}, yaw={self.yaw_a:.4f}->{self.yaw_b:.4f})")

    @property
    def scale(self):
        """Pixels per world unit."""
        return min(self.image_size)/2

    def texture(self):
        return ValueNoise(self.texture_seed)

def yaw_matrix(yaw):
    return Rotation.from_euler('y', yaw).as_matrix()

def pixel_rays(scene):
    """World (x, y) of every pixel center, as two [H, W] grids."""
    h, w = scene.image_size
    rows, cols = np.indices((h, w), dtype=np.float64)
    x = (cols+0.5-w/2)/scene.scale
    y = (h/2-rows-0.5)/scene.scale
    return x, y

def project(scene, points):
    """World points [..., 3] -> nearest pixel (row, col), integer grids."""
    h, w = scene.image_size
    col = points[..., 0]*scene.scale+w/2-0.5
    row = h/2-0.5-points[..., 1]*scene.scale
    return np.floor(row+0.5).astype(np.int64), np.floor(col+0.5).astype(np.int64)

class Hit(object):
    """Per-pixel ray/ellipsoid intersection for one pose."""
    def __init__(self, foreground, body_points, normals):
        self.foreground = foreground    # [H, W] bool
        self.body_points = body_points  # [H, W, 3], body frame
        self.normals = normals          # [H, W, 3], world frame, unit

def intersect(scene, yaw):
    rotation = yaw_matrix(yaw)
    inv_radii2 = 1/np.square(scene.radii)
    x, y = pixel_rays(scene)
    origins = np.stack([x, y, np.zeros_like(x)], axis=-1)
    o = origins @ rotation       # R^T applied to row vectors
    d = rotation[2]              # R^T (0, 0, 1)
    a = np.sum(d*d*inv_radii2)
    b = 2*np.sum(o*d*inv_radii2, axis=-1)
    c = np.sum(o*o*inv_radii2, axis=-1)-1
    disc = b*b-4*a*c
    foreground = disc >= 0
    z = (-b+np.sqrt(np.maximum(disc, 0)))/(2*a)
    body = o+z[..., np.newaxis]*d
    normals = (body*inv_radii2) @ rotation.T
    norms = np.linalg.norm(normals, axis=-1, keepdims=True)
    normals = np.divide(normals, norms, out=np.zeros_like(normals), where=norms > 0)
    return Hit(foreground, body, normals)

def render_layers(scene, yaw):
    """
    Returns (albedo [H, W, 3], shading [H, W], foreground [H, W]).
    Background pixels carry zero albedo and zero shading.
    """
    hit = intersect(scene, yaw)
    fg = hit.foreground
    albedo = ALBEDO_MIN+(ALBEDO_MAX-ALBEDO_MIN)*scene.texture()(hit.body_points)
    lambert = np.maximum(0.0, hit.normals @ scene.light_dir)
    shading = scene.ambient+(1-scene.ambient)*lambert
    albedo = np.where(fg[..., np.newaxis], albedo, 0.0)
    shading = np.where(fg, shading, 0.0)
    return albedo, shading, fg

def render_view(scene, yaw):
    albedo, shading, _ = render_layers(scene, yaw)
    image = np.clip(albedo*shading[..., np.newaxis], 0, 1)
    return image.astype(np.float32)

def gt_flow(scene, yaw_a, yaw_b):
    """
    Exact correspondence from view A to view B. Every foreground pixel of
    A is moved with the surface and reprojected; it is visible when it
    faces the viewer in B and lands on B's foreground.
    Returns (FlowField, visibility).
    """
    h, w = scene.image_size
    hit_a = intersect(scene, yaw_a)
    rotation_b = yaw_matrix(yaw_b)
    points_b = hit_a.body_points @ rotation_b.T
    normals_b = (hit_a.body_points/np.square(scene.radii)) @ rotation_b.T
    row_b, col_b = project(scene, points_b)
    inside = (row_b >= 0) & (row_b < h) & (col_b >= 0) & (col_b < w)
    fg_b = intersect(scene, yaw_b).foreground
    on_b = np.zeros_like(inside)
    on_b[inside] = fg_b[row_b[inside], col_b[inside]]
    visible = hit_a.foreground & (normals_b[..., 2] > 0) & inside & on_b

    rows, cols = np.indices((h, w))
    offsets = np.stack([col_b-cols, row_b-rows], axis=-1)
    offsets[~visible] = 0
    logger.debug("gt flow %.4f -> %.4f: %d of %d foreground pixels visible",
                 yaw_a, yaw_b, np.count_nonzero(visible), np.count_nonzero(hit_a.foreground))
    return FlowField(offsets, valid=visible), visible

class ViewPair(object):
    def __init__(self, img_a, img_b, gt_flow, visibility):
        self.img_a = img_a
        self.img_b = img_b
        self.gt_flow = gt_flow
        self.visibility = visibility

def render_pair(scene):
    flow, visibility = gt_flow(scene, scene.yaw_a, scene.yaw_b)
    return ViewPair(render_view(scene, scene.yaw_a),
                    render_view(scene, scene.yaw_b),
                    flow, visibility)
