"""
Dense float32 tensors. A tensor is a plain C-contiguous numpy array of
1 to 4 dims; images and latents use the channel-last [H, W, C] layout.
"""
import numpy as np
from . import const
from .errors import DimensionError
from .serializers import get_serializer, TensorSerializer

def as_tensor(data):
    """
    Returns data as a contiguous float32 array, checking the tensor
    invariants (1 to 4 dims, all extents >= 1).
    """
    array = np.ascontiguousarray(data, dtype=np.float32)
    if not 1 <= array.ndim <= const.MAX_NDIM:
        raise DimensionError(f"tensors have 1 to {const.MAX_NDIM} dims, got {array.ndim}")
    if min(array.shape) < 1:
        raise DimensionError(f"tensor extents must be >= 1, got {array.shape}")
    return array

def as_image(data):
    array = as_tensor(data)
    if array.ndim == 2:
        array = array[:, :, np.newaxis]
    if array.ndim != 3:
        raise DimensionError(f"expected an [H, W, C] image, got dims {array.shape}")
    return array

def check_same_dims(a, b, what='inputs'):
    if a.shape != b.shape:
        raise DimensionError(f"{what} differ in dims: {a.shape} vs {b.shape}")

def concat_width(a, b):
    a = as_image(a)
    b = as_image(b)
    if a.shape[0] != b.shape[0]:
        raise DimensionError(f"height mismatch: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[2] != b.shape[2]:
        raise DimensionError(f"channel mismatch: {a.shape[2]} vs {b.shape[2]}")
    return np.concatenate([a, b], axis=1)

def split_width(x, w):
    x = as_image(x)
    if not 0 < w < x.shape[1]:
        raise DimensionError(f"split column must be in (0, {x.shape[1]}), got {w}")
    return x[:, :w].copy(), x[:, w:].copy()

def read_tensor(path):
    return TensorSerializer(path).deserialize_tensor()

def write_tensor(path, tensor):
    TensorSerializer(path).serialize_tensor(as_tensor(tensor))

def read_image(path):
    """Loads a .pgm/.ppm or .icmt file as an [H, W, C] image."""
    return as_image(get_serializer(path).deserialize_image())

def write_image(path, image):
    get_serializer(path).serialize_image(as_image(image))
