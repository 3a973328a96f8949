import os
from ..errors import FormatError
from ..config import parse_config_text
from .serializer import Serializer
from .tensorserializer import TensorSerializer

class CheckpointSerializer(Serializer):
    """
    Stores an AffineDenoiser under a path prefix:

      <prefix>_a.icmt, <prefix>_b.icmt   gain and bias tensors
      <prefix>.txt                       key=value header (shape, lr, steps, seed)
    """
    NAME = 'checkpoint'
    EXTENSIONS = ('.txt',)

    def __init__(self, path):
        prefix, ext = os.path.splitext(path)
        super(CheckpointSerializer, self).__init__(prefix if ext == '.txt' else path)
        self.header_path = self.path+'.txt'
        self.gain_path = self.path+'_a.icmt'
        self.bias_path = self.path+'_b.icmt'

    def serialize_denoiser(self, denoiser, meta=None):
        TensorSerializer(self.gain_path).serialize_tensor(denoiser.a)
        TensorSerializer(self.bias_path).serialize_tensor(denoiser.b)
        header = {'shape': ','.join(str(n) for n in denoiser.shape)}
        header.update(meta or {})
        with open(self.header_path, 'w', encoding='utf-8', newline='\n') as fp:
            for key, value in header.items():
                fp.write(f"{key} = {value}\n")

    def deserialize_header(self):
        with open(self.header_path, encoding='utf-8') as fp:
            text = fp.read()
        return {key: value for _, key, value in parse_config_text(text, self.header_path)}

    def deserialize_denoiser(self):
        from ..toynets import AffineDenoiser
        header = self.deserialize_header()
        a = TensorSerializer(self.gain_path).deserialize_tensor()
        b = TensorSerializer(self.bias_path).deserialize_tensor()
        shape = tuple(int(n) for n in header.get('shape', '').split(',') if n)
        if shape != a.shape or shape != b.shape:
            raise FormatError(f"{self.header_path}: shape {shape} does not match"
                              f" tensors {a.shape}/{b.shape}")
        return AffineDenoiser(a, b)
