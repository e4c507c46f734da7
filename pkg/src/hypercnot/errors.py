"""Exception types shared across the package.

Kept in one module so the CLI can map each class to a distinct exit code
without importing the physics modules for their side effects.
"""


class ValidationError(ValueError):
    """Malformed or non-normalized user input (bad coefficients, indices, flags)."""


class DegeneratePhysicsError(ValueError):
    """Physically degenerate parameters: vanishing denominators or a block that
    never transmits (|T| = 0), so no coherent amplitude can survive."""


class AmplitudeLostError(DegeneratePhysicsError):
    """All coherent amplitude was lost before a measurement could be taken."""


class RoutingContractError(RuntimeError):
    """An optical element received a branch its contract forbids (a routing bug,
    not a physics outcome)."""
