"""Movable-subarray hybrid beamforming: channels, optimizer, Monte Carlo harness."""

__version__ = "0.1.0"

from .arrays import (ArrayGeometry, RegionBox, dense_layout, element_offsets,
                     fixed_geometry, movable_geometry, point_regions,
                     region_centers, sparse_layout, tiled_regions,
                     validate_positions)
from .channels import (SPEED_OF_LIGHT, ChannelContext, Scenario, ScenarioConfig,
                       build_scenario, exact_channel, hybrid_channel)
from .engine import (AOConfig, AOResult, BeamformerState, SCHEME_RUNNERS,
                     run_ao, run_baseline_dense, run_baseline_sparse,
                     run_exhaustive, run_proposed, strict_modulus_rate)
from .harness import (CSV_HEADER, ConfigError, ExperimentConfig, dbm_to_watts,
                      emit_csv, emit_summary, make_config, render_csv,
                      run_experiment, summarize)
from .objective import (beam_gains, effective_channel, scale_update,
                        sinr_values, sum_rate, transformed_rate)
