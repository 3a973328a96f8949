# Tensor file format.
TENSOR_MAGIC = b'ICMT'
TENSOR_VERSION = 1
DTYPE_F32 = 0
MAX_NDIM = 4

# NetPBM.
PNM_MAXVAL = 255

# Diffusion defaults. The betas are the common 1e-4 -> 0.02 range for
# T=1000, scaled by 1000/T for the short desk-scale schedule.
DEFAULT_STEPS = 50
DEFAULT_BETA_START = 1e-4*1000/DEFAULT_STEPS
DEFAULT_BETA_END = 0.02*1000/DEFAULT_STEPS

# Inference defaults (none of them are published values).
DEFAULT_ITERATIONS = 3
DEFAULT_STRENGTH = 0.3
DEFAULT_GUIDANCE = 0.5
DEFAULT_SAMPLER_STEPS = 50

# Annealing defaults.
DEFAULT_ALPHA = 1.0
DEFAULT_BETA = 0.0

# Classifier-free guidance training dropout.
DEFAULT_EMBEDDING_DROPOUT = 0.1

# Synthetic data.
DEFAULT_PAIR_COUNT = 64
DEFAULT_IMAGE_SIZE = 64
DEFAULT_MAX_YAW_DELTA = 10.0  # degrees
DEFAULT_YAW_RANGE = 30.0      # degrees, absolute pose of view A
