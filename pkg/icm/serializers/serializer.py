import os

class Serializer():
    """
    Base class of all file formats. A serializer is bound to one path;
    formats implement only the methods for the objects they can store.
    """
    NAME = None
    EXTENSIONS = ()

    def __init__(self, path):
        self.path = path

    def __repr__(self):
        return f"{self.__class__.__name__}({self.path!r})"

    def _ensure_parent(self):
        parent = os.path.dirname(os.path.abspath(self.path))
        os.makedirs(parent, exist_ok=True)

    @classmethod
    def can_serialize_tensor(cls):
        return False

    def serialize_tensor(self, tensor):
        raise NotImplementedError(f"{self.NAME} cannot store tensors")

    def deserialize_tensor(self):
        raise NotImplementedError(f"{self.NAME} cannot load tensors")

    @classmethod
    def can_serialize_image(cls):
        return False

    def serialize_image(self, image):
        raise NotImplementedError(f"{self.NAME} cannot store images")

    def deserialize_image(self):
        raise NotImplementedError(f"{self.NAME} cannot load images")

    @classmethod
    def can_serialize_table(cls):
        return False

    def serialize_table(self, header, rows):
        raise NotImplementedError(f"{self.NAME} cannot store tables")

    def deserialize_table(self):
        raise NotImplementedError(f"{self.NAME} cannot load tables")
