import os
import math
import logging
from concurrent.futures import ThreadPoolExecutor
import numpy as np
from ..serializers import CSVSerializer
from ..tensor import write_image, write_tensor, read_image, read_tensor
from ..matching import FlowField
from ..errors import FormatError
from .. import const
from .scene import SceneParams, ViewPair, render_pair

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.csv'
MANIFEST_HEADER = ['pair_id', 'yaw_a', 'yaw_b', 'img_a', 'img_b', 'flow', 'vis']

class PairRecord(object):
    """One manifest row. Paths are relative to the dataset directory."""
    def __init__(self, pair_id, yaw_a, yaw_b):
        self.pair_id = int(pair_id)
        self.yaw_a = float(yaw_a)
        self.yaw_b = float(yaw_b)
        stem = f'pair_{self.pair_id:04d}'
        self.img_a = stem+'_a.ppm'
        self.img_b = stem+'_b.ppm'
        self.flow = stem+'_flow.icmt'
        self.vis = stem+'_vis.icmt'

    def __repr__(self):
        return f"PairRecord({self.pair_id}, yaw {self.yaw_a:.6f} -> {self.yaw_b:.6f})"

    def files(self):
        return [self.img_a, self.img_b, self.flow, self.vis]

    def to_row(self):
        return [str(self.pair_id), f'{self.yaw_a:.6f}', f'{self.yaw_b:.6f}']+self.files()

    @classmethod
    def from_row(cls, row):
        return cls(row[0], row[1], row[2])

def random_scene(seed, index, size=const.DEFAULT_IMAGE_SIZE,
                 yaw_range=const.DEFAULT_YAW_RANGE,
                 max_yaw_delta=const.DEFAULT_MAX_YAW_DELTA):
    """Scene parameters of pair `index`, drawn from its own seed stream."""
    rng = np.random.default_rng([seed, index])
    radii = rng.uniform(0.55, 0.8, size=3)
    light = np.array([rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), 1.0])
    yaw_a = math.radians(rng.uniform(-yaw_range, yaw_range))
    yaw_b = yaw_a+math.radians(rng.uniform(-max_yaw_delta, max_yaw_delta))
    return SceneParams(radii=radii,
                       texture_seed=int(rng.integers(2**63)),
                       light_dir=light/np.linalg.norm(light),
                       ambient=rng.uniform(0.2, 0.4),
                       image_size=(size, size),
                       yaw_a=yaw_a,
                       yaw_b=yaw_b)

class Dataset(object):
    def __init__(self, path):
        self.path = path
        self.pairs = []

    def __len__(self):
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    @property
    def manifest_path(self):
        return os.path.join(self.path, MANIFEST_NAME)

    def abspath(self, name):
        return os.path.join(self.path, name)

    def write_pair(self, record, pair):
        write_image(self.abspath(record.img_a), pair.img_a)
        write_image(self.abspath(record.img_b), pair.img_b)
        write_tensor(self.abspath(record.flow), pair.gt_flow.to_tensor())
        write_tensor(self.abspath(record.vis), pair.visibility.astype(np.float32)[..., np.newaxis])

    def read_pair(self, record):
        vis = read_tensor(self.abspath(record.vis))[..., 0] > 0.5
        flow = FlowField.from_tensor(read_tensor(self.abspath(record.flow)), vis)
        return ViewPair(read_image(self.abspath(record.img_a)),
                        read_image(self.abspath(record.img_b)),
                        flow, vis)

    def write_manifest(self):
        CSVSerializer(self.manifest_path).serialize_table(
            MANIFEST_HEADER, [p.to_row() for p in self.pairs])

    @classmethod
    def load(cls, path):
        dataset = cls(path)
        header, rows = CSVSerializer(dataset.manifest_path).deserialize_table()
        if header != MANIFEST_HEADER:
            raise FormatError(f"{dataset.manifest_path}: unexpected header {header}")
        dataset.pairs = [PairRecord.from_row(row) for row in rows]
        return dataset

def gen_pairs(count, seed, out_dir, size=const.DEFAULT_IMAGE_SIZE,
              yaw_range=const.DEFAULT_YAW_RANGE,
              max_yaw_delta=const.DEFAULT_MAX_YAW_DELTA, threads=1):
    """
    Renders count view pairs into out_dir and writes the manifest.
    Pair i depends only on (seed, i), so the output does not depend on
    the number of threads.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    os.makedirs(out_dir, exist_ok=True)
    dataset = Dataset(out_dir)

    def make(index):
        scene = random_scene(seed, index, size, yaw_range, max_yaw_delta)
        record = PairRecord(index, scene.yaw_a, scene.yaw_b)
        dataset.write_pair(record, render_pair(scene))
        logger.info("wrote pair %d: %r", index, scene)
        return record

    if threads <= 1:
        dataset.pairs = [make(i) for i in range(count)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            dataset.pairs = list(pool.map(make, range(count)))
    dataset.write_manifest()
    return dataset
