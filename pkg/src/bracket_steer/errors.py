"""Exception hierarchy.

Two top-level branches matter to callers: InvalidInputError for anything
wrong with arguments, selections, or configuration, and NumericError for
failures arising during computation (rank degeneracy, divergence,
non-finite values).  The CLI maps the branches to exit codes.
"""


class BracketSteerError(Exception):
    """Base class for all package errors."""


class InvalidInputError(BracketSteerError):
    """Rejected input: bad dimensions, parameters, or configuration."""


class SelectionShapeError(InvalidInputError):
    """A bracket-selection invariant is violated; the message names it."""


class ScenarioFormatError(InvalidInputError):
    """A scenario file failed to parse or violates the schema."""


class UnknownScenarioError(InvalidInputError):
    """Requested scenario name is not registered."""


class NumericError(BracketSteerError):
    """Failure while computing: degenerate algebra or runaway dynamics."""


class NonFiniteError(NumericError):
    """An evaluation produced NaN or infinity."""


class RankDegeneracyError(NumericError):
    """The extension matrix is singular or too ill-conditioned at a state.

    Attributes: state (offending state), condition (condition number, may be
    inf), partial (trajectory computed before the failure, when raised from
    a simulation), agent_index (when raised from a formation run).
    """

    def __init__(self, message, state=None, condition=None, partial=None, agent_index=None):
        super().__init__(message)
        self.state = state
        self.condition = condition
        self.partial = partial
        self.agent_index = agent_index


class DivergenceError(NumericError):
    """The state left the admissible region (non-finite or norm > guard).

    Attributes: t (time of detection), state, partial (trajectory so far).
    """

    def __init__(self, message, t=None, state=None, partial=None):
        super().__init__(message)
        self.t = t
        self.state = state
        self.partial = partial
