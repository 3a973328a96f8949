from .errors import IcmError, DimensionError, FormatError, ContractError, UsageError
from .tensor import concat_width, split_width, read_tensor, write_tensor, read_image, write_image
from .masking import PixelMask, ConditionInput, sample_mask, build_condition
from .matching import FeatureGrid, FeaturePyramid, CostVolume, FlowField
from .warpagg import AnnealConfig
from .diffusion import NoiseSchedule, linear_schedule, default_schedule
from .toynets import OracleDenoiser, TargetPullDenoiser, AffineDenoiser
from .inference import (InferenceConfig, InferenceTrace, progressive_inference,
                        feature_conditioned_pair)
from .metrics import EmbeddingSet
from .version import get_version

__version__ = get_version()
