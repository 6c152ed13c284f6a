from __future__ import annotations

from dataclasses import dataclass, field, fields

from .subordinators import SubordinatorSpec, cpe

MODELS = ("classical", "generalized", "refined")


@dataclass(frozen=True)
class BnsParams:
    """Symbols of the classical, generalized and refined BN-S dynamics.

    ``zb_spec`` is the higher-intensity subordinator switched in by theta;
    ``zstar_spec`` is the independent subordinator mixed in by ``rho_prime``
    in the generalized model.  ``r`` is carried for completeness only; none of
    the dynamics use it.
    """

    mu: float = 0.0
    beta: float = 0.0
    rho: float = -0.5
    lam: float = 1.0
    sigma0_sq: float = 0.04
    theta: float = 0.0
    rho_prime: float = 1.0
    z_spec: SubordinatorSpec = field(default_factory=lambda: cpe(1.0, 2.0))
    zb_spec: SubordinatorSpec | None = field(default_factory=lambda: cpe(4.0, 2.0))
    zstar_spec: SubordinatorSpec | None = None
    s0: float = 100.0
    r: float = 0.0

    def __post_init__(self):
        errors = self.validate()
        if errors:
            raise ValueError("invalid BnsParams: " + "; ".join(errors))

    def validate(self) -> list[str]:
        errors = []
        if not self.rho <= 0:
            errors.append("rho must be <= 0")
        if not self.lam > 0:
            errors.append("lam must be > 0")
        if not self.sigma0_sq > 0:
            errors.append("sigma0_sq must be > 0")
        if not 0 <= self.theta <= 1:
            errors.append("theta must lie in [0, 1]")
        if not 0 <= self.rho_prime <= 1:
            errors.append("rho_prime must lie in [0, 1]")
        if not self.s0 > 0:
            errors.append("s0 must be > 0")
        if self.zb_spec is not None and not self.zb_spec.mean_rate > self.z_spec.mean_rate:
            errors.append("zb_spec must have a greater mean rate than z_spec")
        return errors

    def require(self, model: str) -> None:
        if model not in MODELS:
            raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
        if model == "refined" and self.zb_spec is None:
            raise ValueError("refined model needs zb_spec")
        if model == "generalized" and self.zstar_spec is None and self.rho_prime < 1:
            raise ValueError("generalized model with rho_prime < 1 needs zstar_spec")

    def driving_mean_rate(self, model: str, theta: float | None = None) -> float:
        """E[increment of the volatility driver per unit subordinator time]."""
        theta = self.theta if theta is None else theta
        if model == "classical":
            return self.z_spec.mean_rate
        if model == "generalized":
            star = self.zstar_spec.mean_rate if self.zstar_spec is not None else 0.0
            return self.rho_prime * self.z_spec.mean_rate + (1 - self.rho_prime**2) ** 0.5 * star
        return (1 - theta) * self.z_spec.mean_rate + theta * self.zb_spec.mean_rate

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.to_dict() if isinstance(v, SubordinatorSpec) else v
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "BnsParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown BnsParams fields: {sorted(unknown)}")
        kw = dict(d)
        for key in ("z_spec", "zb_spec", "zstar_spec"):
            if isinstance(kw.get(key), dict):
                kw[key] = SubordinatorSpec.from_dict(kw[key])
        return cls(**kw)
