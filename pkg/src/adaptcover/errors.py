"""Exception types shared across solvers, oracles and the command line."""


class LimitExceeded(RuntimeError):
    """An exact search was asked to handle an instance beyond its configured limits."""


class InfeasibleError(RuntimeError):
    """A solver could not produce a solution meeting its required coverage."""


class InfeasibleStrategy(ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        shown = "; ".join(str(v) for v in self.violations[:5])
        super().__init__(f"infeasible strategy: {shown}")
