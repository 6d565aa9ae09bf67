"""Pressure-dependent drag laws in non-dimensional form.

The drag coefficient is the ratio of viscosity to permeability, so both are
folded into the per-region reference value ``alpha0``.  Supported laws::

    constant:  alpha(p) = alpha0
    linear:    alpha(p) = alpha0 * (1 + beta * p)
    barus:     alpha(p) = alpha0 * exp(beta * p)

The multiplier ``A`` (``alpha_ref * V * L / P``) is carried by the model but
applied by the assembler, not by :meth:`DragModel.alpha`.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import NonpositiveDragError

LAWS = ("constant", "linear", "barus")


@dataclass(frozen=True)
class DragModel:
    law: str = "barus"
    alpha0: dict = field(default_factory=lambda: {0: 1.0})
    beta: float = 0.0
    A: float = 1.0

    def __post_init__(self):
        if self.law not in LAWS:
            raise ValueError(f"unknown drag law {self.law!r}; expected one of {LAWS}")
        a0 = self.alpha0
        if np.isscalar(a0):
            a0 = {0: float(a0)}
        a0 = {int(k): float(v) for k, v in dict(a0).items()}
        if not a0 or any(not v > 0 for v in a0.values()):
            raise ValueError("alpha0 must be positive in every region")
        if not self.beta >= 0:
            raise ValueError("beta must be nonnegative")
        if not self.A > 0:
            raise ValueError("A must be positive")
        object.__setattr__(self, "alpha0", a0)
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "A", float(self.A))

    @property
    def pressure_independent(self):
        return self.law == "constant" or self.beta == 0.0

    def region_alpha0(self, tags):
        tags = np.asarray(tags)
        if tags.ndim == 0:
            return self._lookup(int(tags))
        lut = {t: self._lookup(t) for t in np.unique(tags).tolist()}
        return np.vectorize(lut.__getitem__, otypes=[float])(tags)

    def _lookup(self, tag):
        if tag in self.alpha0:
            return self.alpha0[tag]
        if len(self.alpha0) == 1:
            return next(iter(self.alpha0.values()))
        raise KeyError(f"no alpha0 given for region {tag}")

    def factor(self, p):
        """Pressure factor ``alpha / alpha0``."""
        p = np.asarray(p, dtype=float)
        if self.law == "constant":
            return np.ones_like(p)
        if self.law == "linear":
            f = 1.0 + self.beta * p
            if np.any(f <= 0.0):
                raise NonpositiveDragError(
                    f"linear drag law is nonpositive for p <= {-1.0 / self.beta:.6g} "
                    f"(min pressure {p.min():.6g})")
            return f
        with np.errstate(over="ignore"):
            f = np.exp(self.beta * p)
        if not np.all(np.isfinite(f)):
            raise NonpositiveDragError(
                f"Barus drag overflows at beta={self.beta:g} (max pressure {p.max():.6g})")
        return f

    def alpha(self, region_tag, p):
        return self.region_alpha0(region_tag) * self.factor(p)

    def alpha_inverse(self, region_tag, p):
        return 1.0 / self.alpha(region_tag, p)

    def with_beta(self, beta):
        return DragModel(self.law, self.alpha0, beta, self.A)


def alpha(model, region_tag, p):
    return model.alpha(region_tag, p)


def alpha_inverse(model, region_tag, p):
    return model.alpha_inverse(region_tag, p)


@dataclass(frozen=True)
class Scaling:
    """Reference scales for non-dimensionalization.

    ``length``, ``velocity``, ``pressure``, ``alpha_ref``, ``rho_ref`` and
    ``body_force`` are L, V, P, alpha_ref, rho_ref and B respectively.
    """
    length: float = 1.0
    velocity: float = 1.0
    pressure: float = 1.0
    alpha_ref: float = 1.0
    rho_ref: float = 1.0
    body_force: float = 1.0

    def __post_init__(self):
        for name in ("length", "velocity", "pressure", "alpha_ref", "rho_ref", "body_force"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} scale must be positive")

    @property
    def A(self):
        return self.alpha_ref * self.velocity * self.length / self.pressure

    @property
    def C(self):
        return self.rho_ref * self.length * self.body_force / self.pressure

    def to_dimensionless(self, *, x=None, v=None, p=None, alpha=None, rho=None, b=None, beta=None):
        """Scale whichever dimensional quantities are given; returns a dict."""
        scale = {"x": self.length, "v": self.velocity, "p": self.pressure,
                 "alpha": self.alpha_ref, "rho": self.rho_ref, "b": self.body_force}
        out = {}
        for name, val in (("x", x), ("v", v), ("p", p), ("alpha", alpha), ("rho", rho), ("b", b)):
            if val is not None:
                out[name] = np.asarray(val, dtype=float) / scale[name]
        if beta is not None:
            out["beta"] = beta * self.pressure
        return out

    def to_dimensional(self, *, x=None, v=None, p=None, beta=None):
        out = {}
        for name, val, s in (("x", x, self.length), ("v", v, self.velocity), ("p", p, self.pressure)):
            if val is not None:
                out[name] = np.asarray(val, dtype=float) * s
        if beta is not None:
            out["beta"] = beta / self.pressure
        return out

    def drag_model(self, law, alpha0, beta):
        """Dimensionless model from dimensional ``alpha0`` (per region) and ``beta``."""
        if np.isscalar(alpha0):
            alpha0 = {0: alpha0}
        return DragModel(law, {k: v / self.alpha_ref for k, v in alpha0.items()},
                         beta * self.pressure, self.A)
