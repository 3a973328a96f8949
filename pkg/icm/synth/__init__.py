from .scene import SceneParams, ViewPair, render_view, render_layers, render_pair, gt_flow
from .dataset import Dataset, PairRecord, gen_pairs, random_scene
