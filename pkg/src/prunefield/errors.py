"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operand dimensions are incompatible with the requested operation."""


class PpmParseError(ValueError):
    """A PPM file could not be parsed.

    Carries the byte offset at which parsing failed.
    """

    def __init__(self, message: str, byte_offset: int):
        super().__init__(f"{message} (at byte offset {byte_offset})")
        self.byte_offset = byte_offset


class DegenerateDistributionError(ValueError):
    """All sampling probabilities are zero, so no valid draw exists."""


class TrainingDivergedError(RuntimeError):
    """Training produced a non-finite loss.

    ``model`` holds the last snapshot taken before divergence and
    ``iteration`` the step at which the non-finite loss appeared.
    """

    def __init__(self, iteration: int, model):
        super().__init__(f"loss became non-finite at iteration {iteration}")
        self.iteration = iteration
        self.model = model
