"""Non-negative Levy increments: compound Poisson with exponential jumps, and gamma."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

CPE = "compound-poisson-exponential"
GAMMA = "gamma"
FAMILIES = (CPE, GAMMA)


@dataclass(frozen=True)
class SubordinatorSpec:
    """Law of the subordinator at unit (subordinator) time.

    For ``compound-poisson-exponential`` jumps arrive at rate ``a`` with
    Exp(``b``) sizes (mean ``1/b``); ``a = 0`` gives the zero process.  For
    ``gamma`` the unit increment is Gamma(shape ``a``, rate ``b``).
    """

    family: str
    a: float
    b: float

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown subordinator family {self.family!r}; expected one of {FAMILIES}")
        if not self.b > 0:
            raise ValueError(f"{self.family}: b must be positive, got {self.b}")
        if self.family == CPE and not self.a >= 0:
            raise ValueError(f"{self.family}: a must be non-negative, got {self.a}")
        if self.family == GAMMA and not self.a > 0:
            raise ValueError(f"{self.family}: shape a must be positive, got {self.a}")

    @property
    def mean_rate(self) -> float:
        """E[Z_1]."""
        return self.a / self.b

    @property
    def var_rate(self) -> float:
        """Var(Z_1)."""
        if self.family == CPE:
            return 2.0 * self.a / self.b**2
        return self.a / self.b**2

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SubordinatorSpec":
        return cls(d["family"], float(d["a"]), float(d["b"]))


def cpe(a: float, b: float) -> SubordinatorSpec:
    return SubordinatorSpec(CPE, a, b)


def gamma(shape: float, rate: float) -> SubordinatorSpec:
    return SubordinatorSpec(GAMMA, shape, rate)


def sample_increments(
    spec: SubordinatorSpec, dt_sub: float, n: int, gen: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """``n`` independent increments over subordinator time ``dt_sub``.

    Returns ``(increments, squared_jump_sums)``.  For the compound Poisson
    family the second array is the exact sum of squared jump sizes in each
    interval; the gamma process has infinitely many jumps and the squared
    increment stands in for it.
    """
    if dt_sub < 0:
        raise ValueError("dt_sub must be non-negative")
    if spec.family == CPE:
        counts = gen.poisson(spec.a * dt_sub, n)
        sizes = gen.exponential(1.0 / spec.b, int(counts.sum()))
        owner = np.repeat(np.arange(n), counts)
        inc = np.bincount(owner, weights=sizes, minlength=n)
        sq = np.bincount(owner, weights=sizes * sizes, minlength=n)
        return inc, sq
    inc = gen.gamma(spec.a * dt_sub, 1.0 / spec.b, n)
    return inc, inc * inc


def sample_increment(spec: SubordinatorSpec, dt_sub: float, gen: np.random.Generator) -> float:
    if dt_sub == 0:
        return 0.0
    return float(sample_increments(spec, dt_sub, 1, gen)[0][0])
