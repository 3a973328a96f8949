import struct
import numpy as np
import pytest
from icm.errors import FormatError, DimensionError
from icm.serializers import (get_serializer, serializers, TensorSerializer,
                             NetpbmSerializer, CSVSerializer, CheckpointSerializer)
from icm.toynets import AffineDenoiser

def tensor_bytes(magic=b'ICMT', version=1, dtype=0, dims=(2,), payload=None):
    header = struct.pack('<4sIII', magic, version, dtype, len(dims))
    header += struct.pack(f'<{len(dims)}Q', *dims)
    if payload is None:
        payload = np.zeros(int(np.prod(dims)), dtype='<f4').tobytes()
    return header+payload

def test_decode_valid():
    t = TensorSerializer.decode(tensor_bytes(dims=(1, 2)))
    assert t.shape == (1, 2)
    assert t.dtype == np.float32

@pytest.mark.parametrize('data', [
    tensor_bytes(magic=b'XXXX'),
    tensor_bytes(version=2),
    tensor_bytes(dtype=1),
    tensor_bytes(dims=(2,), payload=b'\0'*4),
    tensor_bytes(dims=(2,), payload=b'\0'*12),
    tensor_bytes(dims=(0,), payload=b''),
    tensor_bytes()[:10],
    tensor_bytes(dims=(1, 2, 3, 4, 5)),
    tensor_bytes(dims=(2**32, 2**32), payload=b''),
    tensor_bytes(dims=(2**62, 4), payload=b''),
])
def test_decode_rejects(data):
    with pytest.raises(FormatError):
        TensorSerializer.decode(data)

def test_get_serializer_by_extension(tmp_path):
    assert isinstance(get_serializer(str(tmp_path/'a.icmt')), TensorSerializer)
    assert isinstance(get_serializer(str(tmp_path/'a.PGM')), NetpbmSerializer)
    assert isinstance(get_serializer(str(tmp_path/'a.csv')), CSVSerializer)
    assert isinstance(get_serializer(str(tmp_path/'a'), 'checkpoint'), CheckpointSerializer)
    assert set(serializers) == {'icmt', 'netpbm', 'csv', 'checkpoint'}
    with pytest.raises(ValueError):
        get_serializer(str(tmp_path/'a.png'))

def test_pgm_header_and_rounding(tmp_path):
    path = tmp_path/'g.pgm'
    img = np.array([[[0.0], [0.5], [1.0], [1.7], [-0.3]]], dtype=np.float32)
    NetpbmSerializer(str(path)).serialize_image(img)
    data = path.read_bytes()
    assert data.startswith(b'P5\n5 1\n255\n')
    assert list(data[-5:]) == [0, 128, 255, 255, 0]

def test_netpbm_comments_and_errors(tmp_path):
    path = tmp_path/'c.pgm'
    path.write_bytes(b'P5\n# made by hand\n2 1\n255\n\x00\xff')
    img = NetpbmSerializer(str(path)).deserialize_image()
    assert img[:, :, 0].tolist() == [[0.0, 1.0]]

    path.write_bytes(b'P5\n2 1\n65535\n\x00\x00\x00\x00')
    with pytest.raises(FormatError):
        NetpbmSerializer(str(path)).deserialize_image()

    path.write_bytes(b'P5\n2 2\n255\n\x00')
    with pytest.raises(FormatError):
        NetpbmSerializer(str(path)).deserialize_image()

def test_netpbm_rejects_two_channels(tmp_path):
    with pytest.raises(DimensionError):
        NetpbmSerializer(str(tmp_path/'x.ppm')).serialize_image(np.zeros((2, 2, 2)))

def test_csv_roundtrip(tmp_path):
    path = tmp_path/'t.csv'
    CSVSerializer(str(path)).serialize_table(['a', 'b'], [['1', 'x y'], ['2', 'z']])
    assert path.read_bytes() == b'a,b\n1,x y\n2,z\n'
    header, rows = CSVSerializer(str(path)).deserialize_table()
    assert header == ['a', 'b']
    assert rows == [['1', 'x y'], ['2', 'z']]

def test_csv_ragged_rows(tmp_path):
    path = tmp_path/'r.csv'
    path.write_text('a,b\n1\n')
    with pytest.raises(FormatError):
        CSVSerializer(str(path)).deserialize_table()

def test_checkpoint_roundtrip(tmp_path, rng):
    d = AffineDenoiser(rng.standard_normal((2, 2, 1)), rng.standard_normal((2, 2, 1)))
    prefix = str(tmp_path/'ckpt')
    CheckpointSerializer(prefix).serialize_denoiser(d, {'lr': 0.1, 'steps': 200, 'seed': 3})
    header = CheckpointSerializer(prefix+'.txt').deserialize_header()
    assert header == {'shape': '2,2,1', 'lr': '0.1', 'steps': '200', 'seed': '3'}
    loaded = CheckpointSerializer(prefix).deserialize_denoiser()
    assert np.array_equal(loaded.a, d.a.astype(np.float32))
    assert np.array_equal(loaded.b, d.b.astype(np.float32))

def test_checkpoint_shape_mismatch(tmp_path):
    prefix = str(tmp_path/'ckpt')
    CheckpointSerializer(prefix).serialize_denoiser(AffineDenoiser.zeros((2, 2)))
    (tmp_path/'ckpt.txt').write_text('shape = 3,3\n')
    with pytest.raises(FormatError):
        CheckpointSerializer(prefix).deserialize_denoiser()

def test_ppm_header_and_channels(tmp_path):
    path = tmp_path/'c.ppm'
    img = np.zeros((2, 3, 3))
    img[0, 0] = [1.0, 0.5, 0.0]
    NetpbmSerializer(str(path)).serialize_image(img)
    data = path.read_bytes()
    assert data.startswith(b'P6\n3 2\n255\n')
    assert list(data[11:14]) == [255, 128, 0]
    loaded = NetpbmSerializer(str(path)).deserialize_image()
    assert loaded.shape == (2, 3, 3)
    assert loaded.dtype == np.float32
    assert loaded[0, 0].tolist() == pytest.approx([1.0, 128/255, 0.0])

def test_netpbm_rejects_other_files(tmp_path):
    path = tmp_path/'n.ppm'
    path.write_bytes(b'not an image at all')
    with pytest.raises(FormatError):
        NetpbmSerializer(str(path)).deserialize_image()
    with pytest.raises(FileNotFoundError):
        NetpbmSerializer(str(tmp_path/'missing.ppm')).deserialize_image()

def test_oversized_dims_are_format_errors(tmp_path):
    path = tmp_path/'huge.icmt'
    path.write_bytes(tensor_bytes(dims=(2**32, 2**32), payload=b''))
    with pytest.raises(FormatError, match='payload'):
        TensorSerializer(str(path)).deserialize_tensor()
