"""rramfit: resistive-switching compact-model simulation and automated
parameter extraction from bipolar I-V characteristics."""

from .model import (IVTrace, ModelParams, PhysicalConstants, SweepSpec,
                    device_current, gamma_of_gap, gap_velocity,
                    make_triangular_sweep, simulate_sweep)
from .metrics import (NvmMetrics, detect_hysteresis, extract_hysteresis_areas,
                      extract_lrs_slope, extract_metrics, extract_vreset,
                      extract_vset, split_branches)
from .heuristics import (FitReport, FitStage, FitTolerances, PipelineConfig,
                         SearchBounds, SearchResult, adaptive_binary_search,
                         relative_errors, run_pipeline)
from .estimator import (EstimateResult, ExternalEstimator,
                        NearestNeighborEstimator, build_request,
                        build_response, parse_request, parse_response)
from .dataset import (DatasetRecord, generate_dataset, load_dataset,
                      sample_params, write_dataset)
from .devices import BENCHMARK_DEVICES, BenchmarkDevice, get_device
from .ingest import RawCurve, load_raw_curve, rolling_average, to_trace
from .errors import RramFitError

__version__ = "0.1.0"
