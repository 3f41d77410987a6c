"""Exception hierarchy.

Input problems derive from :class:`InputError`, size and solver limits from
:class:`LimitError`. The CLI maps these onto exit codes 2 and 3.
"""


class MechlabError(Exception):
    kind = "Internal"


class InputError(MechlabError, ValueError):
    kind = "InputError"


class LimitError(MechlabError):
    kind = "LimitError"


class NegativeValue(InputError):
    kind = "NegativeValue"


class BadProbability(InputError):
    kind = "BadProbability"


class Empty(InputError):
    kind = "Empty"


class BadScale(InputError):
    kind = "BadScale"


class BadGrid(InputError):
    kind = "BadGrid"


class BadWeights(InputError):
    kind = "BadWeights"


class SupportBelowFloor(InputError):
    kind = "SupportBelowFloor"


class ShapeMismatch(InputError):
    kind = "ShapeMismatch"


class BadMenu(InputError):
    kind = "BadMenu"


class KTooLarge(InputError):
    kind = "KTooLarge"


class SizeCap(LimitError):
    kind = "SizeCap"


class TooManyTypes(LimitError):
    kind = "TooManyTypes"


class SolverStall(LimitError):
    kind = "SolverStall"


class NoConvergence(LimitError):
    kind = "NoConvergence"
