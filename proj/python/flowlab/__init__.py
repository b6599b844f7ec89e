"""Gaussian flow integration, OU smoothing and commutator estimates."""

from ._flowlab import (  # noqa: F401
    FieldSpec,
    FlowTrajectoryBatch,
    FlowlabConfigError,
    QuadratureScheme,
    backward_density,
    catalogue,
    commutator_eval,
    density_lr_norm,
    expectation,
    gaussian_divergence,
    gaussian_rotation,
    integrate_flow,
    lambda_moment,
    make_field,
    make_quadrature,
    mehler_apply,
    mehler_gradient,
    run_experiment,
    semigroup_discrepancy,
    set_thread_count,
)

__all__ = [
    "FieldSpec",
    "FlowTrajectoryBatch",
    "FlowlabConfigError",
    "QuadratureScheme",
    "backward_density",
    "catalogue",
    "commutator_eval",
    "density_lr_norm",
    "expectation",
    "gaussian_divergence",
    "gaussian_rotation",
    "integrate_flow",
    "lambda_moment",
    "make_field",
    "make_quadrature",
    "mehler_apply",
    "mehler_gradient",
    "run_experiment",
    "semigroup_discrepancy",
    "set_thread_count",
]
