"""Exception types raised by the library.

All numeric-domain failures derive from :class:`RelqmError` so that callers
(the CLI in particular) can separate them from plain programming errors.
"""


class RelqmError(ValueError):
    """Base class for domain errors."""


class DimensionError(RelqmError):
    """Operand shapes do not agree."""


class ZeroMatrixError(RelqmError):
    """The matrix is identically zero, so no normalization exists."""


class EntangledStateError(RelqmError):
    """A coherent (wave-function) quantity was requested for an entangled matrix."""

    def __init__(self, entropy: float, tol: float):
        self.entropy = float(entropy)
        self.tol = float(tol)
        super().__init__(
            f"EntangledState: entanglement entropy H(R) = {self.entropy!r} "
            f">= tolerance {self.tol!r}; no wave function exists"
        )


class NotProductError(RelqmError):
    """The matrix is not rank one within tolerance."""

    def __init__(self, ratio: float, tol: float):
        self.ratio = float(ratio)
        self.tol = float(tol)
        super().__init__(
            f"NotProduct: singular value ratio s2/s1 = {self.ratio!r} "
            f">= tolerance {self.tol!r}"
        )


class NotHermitianError(RelqmError):
    pass


class NotUnitaryError(RelqmError):
    pass


class NotProjectorError(RelqmError):
    pass
