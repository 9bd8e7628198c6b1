"""Exception hierarchy for revmarkov.

Input problems derive from :class:`InputError`, numerical failures from
:class:`SolverError`. The CLI maps the two families to exit codes 2 and 3.
"""


class RevMarkovError(Exception):
    """Base class for all package errors."""

    def to_dict(self):
        return {"type": type(self).__name__, "message": str(self)}


class InputError(RevMarkovError, ValueError):
    pass


class SolverError(RevMarkovError, RuntimeError):
    pass


class NegativeEntry(InputError):
    def __init__(self, i, j, value):
        self.i, self.j, self.value = int(i), int(j), float(value)
        super().__init__(f"negative entry {self.value!r} at ({self.i}, {self.j})")


class RowSumViolation(InputError):
    def __init__(self, i, total):
        self.i, self.total = int(i), float(total)
        super().__init__(f"row {self.i} sums to {self.total!r}, expected 1")


class ShapeMismatch(InputError):
    pass


class NotReversible(InputError):
    def __init__(self, residual):
        self.residual = float(residual)
        super().__init__(f"detailed balance residual {self.residual:.3e} too large")


class MassLeak(InputError):
    def __init__(self, i, leaked):
        self.i, self.leaked = int(i), float(leaked)
        super().__init__(f"state {self.i} leaks mass {self.leaked:.3e} outside the index set")


class OpenClass(InputError):
    def __init__(self, states, leaked):
        self.states = [int(s) for s in states]
        self.leaked = float(leaked)
        super().__init__(
            f"strongly connected component {self.states[:8]}"
            f"{'...' if len(self.states) > 8 else ''} has outgoing mass {self.leaked:.3e}; "
            "transient tolerance is inconsistent with the chain"
        )


class NoConvergence(SolverError):
    def __init__(self, max_iter, residual=float("nan"), what="iteration"):
        self.max_iter, self.residual = int(max_iter), float(residual)
        super().__init__(
            f"{what} did not converge in {self.max_iter} iterations (residual {self.residual:.3e})"
        )


class NonPositiveEntry(SolverError, ValueError):
    pass


class FactorizationFailure(SolverError):
    pass


class LineSearchStall(SolverError):
    pass


class SingularConstraints(SolverError):
    pass


class SingularFundamentalMatrix(SolverError):
    pass


class PartialFailure(SolverError):
    """Some ergodic classes failed; ``report`` still holds the successful ones."""

    def __init__(self, failures, report=None):
        self.failures = dict(failures)
        self.report = report
        ids = ", ".join(str(k) for k in sorted(self.failures))
        super().__init__(f"solver failed on class(es) {ids}")

    def to_dict(self):
        out = super().to_dict()
        out["classes"] = {str(k): v.to_dict() if hasattr(v, "to_dict") else repr(v)
                          for k, v in self.failures.items()}
        return out
