import os
from .tensorserializer import TensorSerializer
from .netpbmserializer import NetpbmSerializer
from .csvserializer import CSVSerializer
from .checkpointserializer import CheckpointSerializer

serializers = {
    'icmt': TensorSerializer,
    'netpbm': NetpbmSerializer,
    'csv': CSVSerializer,
    'checkpoint': CheckpointSerializer,
}

def get_serializer(path, kind=None):
    """
    Returns a serializer instance for the given path, chosen by the
    file extension unless a format name is passed explicitly.
    """
    if kind is not None:
        return serializers[kind](path)
    ext = os.path.splitext(path)[1].lower()
    for cls in (TensorSerializer, NetpbmSerializer, CSVSerializer):
        if ext in cls.EXTENSIONS:
            return cls(path)
    raise ValueError(f"no serializer for file extension {ext!r} ({path})")
