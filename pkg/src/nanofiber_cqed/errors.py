"""Exception types shared across the package."""


class PhysicsError(ValueError):
    """A physical precondition was violated (bad rates, ratios, geometry)."""


class SolverError(RuntimeError):
    """A numerical solver (root finding, quadrature) did not converge."""


class ScenarioError(ValueError):
    """A scenario file could not be parsed or validated."""
