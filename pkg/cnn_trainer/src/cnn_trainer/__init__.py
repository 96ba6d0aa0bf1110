"""cnn_trainer: image-regression parameter estimates for
resistive-switching I-V curves, served over the estimate connector
protocol."""

from .artifact import Predictor, save_artifact
from .data import (MIN_SAMPLES, build_rendered_dataset,
                   load_rendered_dataset, read_trace_csv)
from .errors import (ArtifactError, CnnTrainerError, DatasetTooSmall,
                     NonDecreasingLoss, SchemaViolation, StyleMismatch,
                     TraceFormatError)
from .net import CurveRegressor, trainable_parameter_count
from .render import IMAGE_SIZE, STYLE, STYLE_VERSION, render_curve
from .scalers import (LABEL_FIELDS, MinMaxScaler, denormalize_labels,
                      normalize_labels, scalers_from_ranges)
from .training import TrainConfig, learning_rate, train

__version__ = "0.1.0"
