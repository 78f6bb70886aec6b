"""Exception hierarchy. Every error carries a module-qualified ``code``."""


class LagrangeFlowError(Exception):
    code = "lagrangeflow.error"


class InfeasibleNormalization(LagrangeFlowError):
    code = "flux_calculus.infeasible_normalization"


class InversionFailure(LagrangeFlowError):
    code = "flux_calculus.inversion_failure"


class QuadratureFailure(LagrangeFlowError):
    code = "flux_calculus.quadrature_failure"


class DerivativeMismatch(LagrangeFlowError):
    code = "flux_calculus.derivative_mismatch"


class CFLViolation(LagrangeFlowError):
    code = "eulerian_solver.cfl_violation"


class DomainError(LagrangeFlowError):
    code = "eulerian_solver.domain_error"


class PositivityLoss(LagrangeFlowError):
    code = "temple_solver.positivity_loss"


class MonotonicityLoss(PositivityLoss):
    code = "flow_map.monotonicity_loss"


class AnchorDrift(LagrangeFlowError):
    code = "flow_map.anchor_drift"


class OutOfRange(LagrangeFlowError):
    code = "flow_map.out_of_range"


class NonSmoothData(LagrangeFlowError):
    code = "systems_lab.non_smooth_data"


class DegenerateCoefficient(LagrangeFlowError):
    code = "variational.degenerate_coefficient"


class NonHyperbolic(LagrangeFlowError):
    code = "systems_lab.non_hyperbolic"


class ConfigError(LagrangeFlowError):
    code = "cli.config_error"
