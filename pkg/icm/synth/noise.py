import numpy as np

LATTICE_SIZE = 16
OCTAVES = 3
BASE_FREQUENCY = 2.0  # lattice cells per world unit at the first octave
PERSISTENCE = 0.5

def _smoothstep(f):
    return f*f*(3-2*f)

class ValueNoise(object):
    """
    Seeded 3-D value noise with colour output. Each octave owns a
    periodic lattice of random values in [0, 1]; octaves double in
    frequency and halve in amplitude. Output lies in [0, 1].
    """
    def __init__(self, seed, channels=3, octaves=OCTAVES,
                 base_frequency=BASE_FREQUENCY, persistence=PERSISTENCE):
        rng = np.random.default_rng(seed)
        shape = (LATTICE_SIZE,)*3+(channels,)
        self.lattices = [rng.random(shape) for _ in range(octaves)]
        self.frequencies = [base_frequency*2**k for k in range(octaves)]
        self.amplitudes = [persistence**k for k in range(octaves)]
        self.channels = channels

    def _octave(self, lattice, points):
        base = np.floor(points)
        f = _smoothstep(points-base)
        i = base.astype(np.int64)
        out = 0
        for corner in range(8):
            offset = np.array([(corner >> 2) & 1, (corner >> 1) & 1, corner & 1])
            idx = (i+offset) % LATTICE_SIZE
            weight = np.prod(np.where(offset == 1, f, 1-f), axis=-1, keepdims=True)
            out = out+weight*lattice[idx[..., 0], idx[..., 1], idx[..., 2]]
        return out

    def __call__(self, points):
        """points [..., 3] in world units -> values [..., channels]."""
        points = np.asarray(points, dtype=np.float64)
        total = np.zeros(points.shape[:-1]+(self.channels,))
        for lattice, freq, amp in zip(self.lattices, self.frequencies, self.amplitudes):
            total += amp*self._octave(lattice, points*freq)
        return total/sum(self.amplitudes)
