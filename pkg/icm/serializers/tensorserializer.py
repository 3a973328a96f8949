import math
import struct
import numpy as np
from .. import const
from ..errors import FormatError, DimensionError
from .serializer import Serializer

# magic, version, dtype code, ndim
HEADER = struct.Struct('<4sIII')

class TensorSerializer(Serializer):
    """
    The native binary tensor format, little-endian throughout:

      magic "ICMT" | u32 version | u32 dtype code (0 = f32) | u32 ndim |
      ndim x u64 extents | raw f32 payload (row-major)
    """
    NAME = 'icmt'
    EXTENSIONS = ('.icmt',)

    @classmethod
    def can_serialize_tensor(cls):
        return True

    @classmethod
    def can_serialize_image(cls):
        return True

    def serialize_tensor(self, tensor):
        tensor = np.asarray(tensor)
        if not 1 <= tensor.ndim <= const.MAX_NDIM:
            raise DimensionError(f"cannot store a tensor with {tensor.ndim} dims")
        header = HEADER.pack(const.TENSOR_MAGIC,
                             const.TENSOR_VERSION,
                             const.DTYPE_F32,
                             tensor.ndim)
        header += struct.pack(f'<{tensor.ndim}Q', *tensor.shape)
        payload = np.ascontiguousarray(tensor, dtype='<f4').tobytes()
        self._ensure_parent()
        with open(self.path, 'wb') as fp:
            fp.write(header)
            fp.write(payload)

    def deserialize_tensor(self):
        with open(self.path, 'rb') as fp:
            data = fp.read()
        return self.decode(data, source=self.path)

    # Images are stored as plain [H,W,C] tensors.
    serialize_image = serialize_tensor
    deserialize_image = deserialize_tensor

    @staticmethod
    def decode(data, source='<bytes>'):
        if len(data) < HEADER.size:
            raise FormatError(f"{source}: truncated header")
        magic, version, dtype, ndim = HEADER.unpack_from(data)
        if magic != const.TENSOR_MAGIC:
            raise FormatError(f"{source}: bad magic {magic!r}")
        if version != const.TENSOR_VERSION:
            raise FormatError(f"{source}: unsupported version {version}")
        if dtype != const.DTYPE_F32:
            raise FormatError(f"{source}: unsupported dtype code {dtype}")
        if not 1 <= ndim <= const.MAX_NDIM:
            raise FormatError(f"{source}: unsupported number of dims {ndim}")

        offset = HEADER.size+8*ndim
        if len(data) < offset:
            raise FormatError(f"{source}: truncated dims")
        dims = struct.unpack_from(f'<{ndim}Q', data, HEADER.size)
        if min(dims) < 1:
            raise FormatError(f"{source}: zero extent in dims {dims}")

        payload = data[offset:]
        expected = 4*math.prod(dims)
        if len(payload) != expected:
            raise FormatError(f"{source}: dims {dims} need {expected} payload bytes,"
                              f" found {len(payload)}")
        array = np.frombuffer(payload, dtype='<f4').reshape(dims)
        return array.astype(np.float32)
