import numpy as np
from PIL import Image, UnidentifiedImageError
from .. import const
from ..errors import FormatError, DimensionError
from .serializer import Serializer

MODE_CHANNELS = {'L': 1, 'RGB': 3}

class NetpbmSerializer(Serializer):
    """
    Binary PGM (P5, one channel) and PPM (P6, three channels) with maxval
    255. Values map linearly [0,1] <-> [0,255] with round-half-up.
    """
    NAME = 'netpbm'
    EXTENSIONS = ('.pgm', '.ppm', '.pnm')

    @classmethod
    def can_serialize_image(cls):
        return True

    def serialize_image(self, image):
        image = np.asarray(image, dtype=np.float64)
        if image.ndim == 2:
            image = image[:, :, np.newaxis]
        if image.ndim != 3 or image.shape[2] not in MODE_CHANNELS.values():
            raise DimensionError(f"NetPBM needs [H,W,1] or [H,W,3], got {image.shape}")
        raster = np.floor(np.clip(image, 0, 1)*const.PNM_MAXVAL+0.5).astype(np.uint8)
        if raster.shape[2] == 1:
            raster = raster[:, :, 0]
        self._ensure_parent()
        Image.fromarray(raster).save(self.path, format='PPM')

    def deserialize_image(self):
        try:
            image = Image.open(self.path, formats=['PPM'])
        except UnidentifiedImageError:
            raise FormatError(f"{self.path}: not a binary PGM/PPM file")
        with image:
            if image.mode not in MODE_CHANNELS:
                raise FormatError(f"{self.path}: only 8-bit gray or RGB images are supported,"
                                  f" got mode {image.mode}")
            try:
                image.load()
            except (OSError, SyntaxError, ValueError) as e:
                raise FormatError(f"{self.path}: {e}")
            raster = np.asarray(image, dtype=np.uint8)
        if raster.ndim == 2:
            raster = raster[:, :, np.newaxis]
        return (raster.astype(np.float32)/np.float32(const.PNM_MAXVAL)).astype(np.float32)
