"""Foveated, task-driven scanpath generation and scanpath similarity metrics."""

from .errors import (ConfigError, GenerationError, InvalidInput, InvalidModel,
                     InvalidParameter, NevaError)
from .foveation import (FoveationConfig, FoveationState, agent_state, init_state, perceive,
                        update_state)
from .generators import (GeneratorConfig, Scanpath, center_baseline, cle_levy, neva_o,
                         random_baseline, wta)
from .imaging import (Stimulus, ViewingGeometry, blur, degrees_to_pixels, gaussian_blob,
                      gaussian_kernel, load_stimulus, pixels_to_degrees)
from .metrics import (GridQuantizer, aggregate_mean, aggregate_spp, human_baseline, n_score,
                      quantize, sbtde_k, sed)
from .saccades import AmplitudeHistogram, amplitude_histogram, kl_divergence, saccade_amplitudes
from .saliency import SaliencyMap, center_surround_saliency, load_external_saliency
from .task_models import TaskLossModel, mlp_forward, task_loss

__version__ = "0.1.0"
