"""Single-index recovery with generative priors.

Thin Python layer over the C++ core: generators, observation models,
projection onto generator ranges, OneShot and baseline estimators,
diagnostics and experiment sweeps.
"""

from ._oneshot import (
    Activation,
    DomainMode,
    EstimatorKind,
    EstimatorSpec,
    FrequencyCheck,
    Generator,
    MeasurementEnsemble,
    ModelKind,
    NumericalError,
    ObservationModel,
    ParameterMethod,
    ParseError,
    ProjectionConfig,
    ProjectionMethod,
    ProjectionResult,
    RateFit,
    RecoveryResult,
    SimParameters,
    ValidationError,
    apply_bounded_corruption,
    cli,
    cosine_similarity,
    error_to_scaled_target,
    event_E_frequency,
    fit_rate_slope,
    mu_hat_concentration,
    one_shot,
    parse_model_kind,
    project,
    random_orthonormal_columns,
    recover,
    run_sweep,
    sample_ensemble,
    sim_parameters,
    sweep_seed,
    predicted_rate_bound,
)

__version__ = "0.1.0"


def exact_projection() -> ProjectionConfig:
    """ProjectionConfig for the closed-form projection of linear generators."""
    cfg = ProjectionConfig()
    cfg.method = ProjectionMethod.exact_linear
    return cfg


def main() -> int:
    import sys

    code, out, err = cli(sys.argv[1:])
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code
