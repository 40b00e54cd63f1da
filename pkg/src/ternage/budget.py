"""Search budgets counted in explored nodes and wall-clock seconds."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

DEFAULT_NODES = 10 ** 8


class BudgetExceeded(RuntimeError):
    """Raised when a search runs out of nodes or time.

    ``partial`` carries whatever the interrupted operation had finished,
    ``verified_bound`` the largest size it completed.
    """

    def __init__(self, message: str, partial=None, verified_bound: int | None = None):
        super().__init__(message)
        self.partial = partial
        self.verified_bound = verified_bound


@dataclass
class Budget:
    nodes: int | None = DEFAULT_NODES
    secs: float | None = None
    used: int = 0
    _start: float = field(default_factory=time.monotonic, repr=False)

    def spend(self, n: int = 1) -> None:
        self.used += int(n)
        if self.nodes is not None and self.used > self.nodes:
            raise BudgetExceeded(f"node budget of {self.nodes} exhausted")
        if self.secs is not None and time.monotonic() - self._start > self.secs:
            raise BudgetExceeded(f"time budget of {self.secs}s exhausted")

    @classmethod
    def coerce(cls, budget) -> "Budget":
        if budget is None:
            return cls()
        if isinstance(budget, Budget):
            return budget
        return cls(nodes=int(budget))
