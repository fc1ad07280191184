"""Free-space OAM link simulator with learned turbulence compensation.

The pipeline: petal-mode masks on a Gaussian source, two Fresnel legs,
a Von Karman phase screen at the transmitter plane, an 8-bit receiver
image, a small from-scratch CNN that estimates the turbulence strength,
and a gradient-descent loop that pre-shapes the transmitted mask until
the received pattern matches the undistorted one.
"""

from .channel import LinkSetup, propagated_source, undistorted_image
from .cnn import (
    CnnModel,
    Dataset,
    EvalReport,
    LabelGrid,
    TrainConfig,
    evaluate,
    generate_dataset,
    label_grid,
    predict,
    predict_probs,
    subset_per_label,
    train,
)
from .config import Config, default_config, dump_config, load_config, parse_config, validate_config
from .errors import (
    ConfigError,
    CorruptArtifact,
    DegenerateDataset,
    DegenerateField,
    EmptyDataset,
    InsufficientEnsemble,
    InvalidGrid,
    InvalidTurbulence,
    MissingInput,
    NonInvertibleKernel,
    OamTurbError,
    ShapeMismatch,
    ZeroDistance,
)
from .experiments import (
    SweepResult,
    SweepSpec,
    montage,
    plateau_detected,
    render_montage,
    spearman,
    strength_test_points,
    sweep_eta,
    sweep_iterations,
    sweep_oam,
    sweep_strength,
    sweep_train_size,
    write_sweep_csvs,
)
from .feedback import (
    ChannelInstance,
    CorrectionResult,
    GdoConfig,
    SlmState,
    distorted_pattern,
    estimate_screen,
    gdo_run,
    make_channel,
    observe,
    objective_grad,
    objective_value,
    target_pattern,
    update_mask,
)
from .fresnel import (
    PropagatorKernel,
    inverse_propagate,
    ir_kernel,
    preferred_method,
    propagate,
    tf_kernel,
)
from .io import (
    load_dataset,
    load_model,
    load_pgm,
    load_screen,
    read_csv,
    save_dataset,
    save_image,
    save_model,
    save_pgm,
    save_screen,
    write_csv,
)
from .optics import (
    ComplexField,
    GridSpec,
    Image8,
    ModeMask,
    OpticalConfig,
    RealField,
    gaussian_beam,
    intensity,
    make_grid,
    mse_index,
    petal_count,
    superposition_phase_mask,
    to_image8,
)
from .rng import complex_standard_normal, derive_seed, philox, stable_mix, uniform
from .turbulence import (
    PhaseScreen,
    ScreenSeed,
    SpectrumField,
    TurbulenceParams,
    draw_seed,
    fried_parameter,
    kappa_grid,
    make_turbulence_params,
    oracle_structure_function,
    screen_ensemble,
    structure_function_est,
    synthesize_screen,
    synthesis_weights,
    von_karman_spectrum,
)
from .validate import ValidationReport, run_validation

__version__ = "0.1.0"

__all__ = [
    "ChannelInstance", "CnnModel", "ComplexField", "Config",
    "ConfigError", "CorrectionResult", "CorruptArtifact", "Dataset",
    "DegenerateDataset",
    "DegenerateField", "EmptyDataset", "EvalReport", "GdoConfig",
    "GridSpec", "Image8", "InsufficientEnsemble", "InvalidGrid",
    "InvalidTurbulence", "LabelGrid", "LinkSetup", "MissingInput",
    "ModeMask", "NonInvertibleKernel", "OamTurbError", "OpticalConfig",
    "PhaseScreen", "PropagatorKernel", "RealField", "ScreenSeed",
    "ShapeMismatch", "SlmState", "SpectrumField", "SweepResult",
    "SweepSpec", "TrainConfig", "TurbulenceParams", "ValidationReport",
    "ZeroDistance",
    "complex_standard_normal", "default_config", "derive_seed",
    "distorted_pattern", "draw_seed", "dump_config", "estimate_screen",
    "evaluate", "fried_parameter", "gaussian_beam", "gdo_run",
    "generate_dataset", "intensity", "inverse_propagate", "ir_kernel",
    "kappa_grid", "label_grid", "load_config", "load_dataset",
    "load_model", "load_pgm", "load_screen", "make_channel", "make_grid",
    "make_turbulence_params", "montage", "mse_index", "objective_grad",
    "objective_value", "observe", "oracle_structure_function",
    "parse_config", "petal_count", "philox", "plateau_detected",
    "predict", "predict_probs", "preferred_method", "propagate",
    "propagated_source", "read_csv", "render_montage", "run_validation",
    "save_dataset",
    "save_image", "save_model", "save_pgm", "save_screen",
    "screen_ensemble", "spearman", "stable_mix", "strength_test_points",
    "structure_function_est", "subset_per_label",
    "superposition_phase_mask", "sweep_eta", "sweep_iterations",
    "sweep_oam", "sweep_strength", "sweep_train_size",
    "synthesize_screen", "synthesis_weights", "target_pattern",
    "to_image8", "train", "undistorted_image", "uniform", "update_mask",
    "validate_config", "von_karman_spectrum", "write_csv",
    "write_sweep_csvs",
]
