"""
Identity similarity statistics over externally computed embeddings.
"""
import logging
import numpy as np
from .errors import DimensionError, FormatError
from .serializers import CSVSerializer
from .tensor import read_tensor

logger = logging.getLogger(__name__)

STATS_HEADER = ['Method', 'Min', 'Max', 'Median', 'Mean']

class EmbeddingSet(object):
    def __init__(self, label, vectors):
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.ndim == 1:
            vectors = vectors[np.newaxis]
        if vectors.ndim != 2 or vectors.shape[0] < 1 or vectors.shape[1] < 1:
            raise DimensionError(f"{label}: embeddings need dims [N, D] with N, D >= 1,"
                                 f" got {vectors.shape}")
        self.label = label
        self.vectors = vectors

    def __repr__(self):
        return f"EmbeddingSet({self.label!r}, n={len(self)}, dim={self.dim})"

    def __len__(self):
        return self.vectors.shape[0]

    @property
    def dim(self):
        return self.vectors.shape[1]

    @classmethod
    def from_file(cls, path, label=None):
        return cls(label or path, read_tensor(path))

class SimStats(object):
    def __init__(self, method, min, max, median, mean):
        self.method = method
        self.min = min
        self.max = max
        self.median = median
        self.mean = mean

    def __repr__(self):
        return f"SimStats({self.method!r}, {self.min:.3f}/{self.max:.3f}/{self.median:.3f}/{self.mean:.3f})"

    def values(self):
        return self.min, self.max, self.median, self.mean

    def to_row(self):
        return [self.method]+[f'{v:.3f}' for v in self.values()]

    @classmethod
    def from_row(cls, row):
        try:
            return cls(row[0], *(float(v) for v in row[1:]))
        except ValueError as e:
            raise FormatError(f"bad statistics row {row!r}: {e}")

def _unit_rows(vectors):
    norms = np.linalg.norm(vectors, axis=-1, keepdims=True)
    return np.divide(vectors, norms, out=np.zeros_like(vectors), where=norms > 0)

def cosine_sim(a, b):
    """a.b / (|a| |b|); 0 when either vector has zero norm."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"vector lengths differ: {a.shape} vs {b.shape}")
    norm = np.linalg.norm(a)*np.linalg.norm(b)
    if norm == 0:
        return 0.0
    return float(np.clip(np.dot(a, b)/norm, -1, 1))

def similarity_matrix(results, profiles):
    if results.dim != profiles.dim:
        raise DimensionError(f"embedding lengths differ: {results.label} has {results.dim},"
                             f" {profiles.label} has {profiles.dim}")
    sims = _unit_rows(results.vectors) @ _unit_rows(profiles.vectors).T
    return np.clip(sims, -1, 1)

def summarize_similarities(sims, method):
    sims = np.asarray(sims, dtype=np.float64).ravel()
    if sims.size == 0:
        raise ValueError(f"{method}: no similarities to summarize")
    return SimStats(method, float(sims.min()), float(sims.max()),
                    float(np.median(sims)), float(sims.mean()))

def sim_stats(results, profiles, method=None):
    """Statistics over the full results x profiles similarity multiset."""
    stats = summarize_similarities(similarity_matrix(results, profiles),
                                   method or results.label)
    logger.info("%r", stats)
    return stats

def self_sim_stats(profiles, method='Upper Bound'):
    """Statistics over all distinct profile pairs i < j."""
    if len(profiles) < 2:
        raise ValueError(f"{profiles.label}: need at least two profiles, got {len(profiles)}")
    sims = similarity_matrix(profiles, profiles)
    upper = np.triu_indices(len(profiles), k=1)
    return summarize_similarities(sims[upper], method)

def write_stats_csv(path, stats):
    CSVSerializer(path).serialize_table(STATS_HEADER, [s.to_row() for s in stats])

def read_stats_csv(path):
    header, rows = CSVSerializer(path).deserialize_table()
    if header != STATS_HEADER:
        raise FormatError(f"{path}: expected header {','.join(STATS_HEADER)}")
    return [SimStats.from_row(row) for row in rows]
