import math
from dataclasses import asdict, dataclass

from chebyprod.errors import InvalidSpecError

KINDS = ("product", "sum", "min", "max")
SIDES = ("leq", "geq")

# Relative slack for the weak event inequality at the boundary atom.
BOUNDARY_RTOL = 1e-12


@dataclass(frozen=True)
class Event:
    """
    A permutation-symmetric tail event {h(xi) <= gamma} or {h(xi) >= gamma}
    where h is the product, sum, minimum or maximum of the coordinates.
    """
    kind: str
    side: str
    gamma: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpecError(f"Unsupported event kind {self.kind!r}, expected one of {KINDS}")
        if self.side not in SIDES:
            raise InvalidSpecError(f"Unsupported event side {self.side!r}, expected one of {SIDES}")
        if not math.isfinite(self.gamma) or self.gamma <= 0:
            raise InvalidSpecError(f"gamma must be positive, got {self.gamma}")

    @classmethod
    def parse(cls, name: str, gamma: float) -> "Event":
        """Parses CLI names such as 'min_leq' or 'sum_geq'."""
        try:
            kind, side = name.split("_")
        except ValueError as e:
            raise InvalidSpecError(f"Event name must look like 'min_leq', got {name!r}") from e
        return cls(kind, side, gamma)

    @property
    def name(self) -> str:
        return f"{self.kind}_{self.side}"

    def statistic(self, point) -> float:
        if self.kind == "product":
            return math.prod(point)
        if self.kind == "sum":
            return math.fsum(point)
        if self.kind == "min":
            return min(point)
        return max(point)

    def holds(self, point) -> bool:
        value = self.statistic(point)
        slack = BOUNDARY_RTOL * self.gamma
        if self.side == "leq":
            return value <= self.gamma + slack
        return value >= self.gamma - slack

    def to_dict(self) -> dict:
        return asdict(self)
