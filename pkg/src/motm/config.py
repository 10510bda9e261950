"""Model configuration files and a uniform view over the supported model families.

A config is a JSON document ``{"model": <kind>, "params": {...}}`` with kinds
``bs``, ``localvol_power``, ``heston`` and ``three_halves``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable, Optional

import jsonschema

from . import bs, heston, models
from .bs import BSParams
from .energy import EnergyData
from .errors import DomainError
from .heston import HestonParams

__all__ = ["ModelSpec", "CONFIG_SCHEMA", "load_config", "bundled_config"]

_NUMBER = {"type": "number"}


def _params_schema(*names):
    return {
        "type": "object",
        "properties": {n: _NUMBER for n in names},
        "required": list(names),
        "additionalProperties": False,
    }


_PARAMS = {
    "bs": _params_schema("sigma"),
    "localvol_power": _params_schema("a", "b"),
    "heston": _params_schema("v0", "vbar", "kappa", "eta", "rho"),
    "three_halves": _params_schema("v0", "eta", "rho"),
}

CONFIG_SCHEMA = {
    "type": "object",
    "required": ["model", "params"],
    "additionalProperties": False,
    "properties": {
        "model": {"enum": sorted(_PARAMS)},
        "params": {"type": "object"},
    },
    "allOf": [
        {"if": {"properties": {"model": {"const": kind}}},
         "then": {"properties": {"params": schema}}}
        for kind, schema in _PARAMS.items()
    ],
}


@dataclass(frozen=True)
class ModelSpec:
    """One of the supported model families with its parameters."""

    kind: str
    params: tuple  # sorted (name, value) pairs

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelSpec":
        try:
            jsonschema.validate(doc, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            raise DomainError(f"invalid model config: {exc.message}") from None
        spec = cls(kind=doc["model"], params=tuple(sorted((k, float(v)) for k, v in doc["params"].items())))
        spec.model()  # enforce the parameter invariants now
        return spec

    @classmethod
    def heston(cls, p: HestonParams) -> "ModelSpec":
        return cls.from_dict({"model": "heston", "params": {
            "v0": p.v0, "vbar": p.vbar, "kappa": p.kappa, "eta": p.eta, "rho": p.rho}})

    @classmethod
    def black_scholes(cls, sigma: float) -> "ModelSpec":
        return cls.from_dict({"model": "bs", "params": {"sigma": sigma}})

    def to_dict(self) -> dict:
        return {"model": self.kind, "params": dict(self.params)}

    def __getitem__(self, name: str) -> float:
        return dict(self.params)[name]

    def model(self):
        """The concrete parameter object of the family."""
        q = dict(self.params)
        if self.kind == "bs":
            return BSParams(q["sigma"])
        if self.kind == "localvol_power":
            return models.LocalVolModel.power(q["a"], q["b"])
        if self.kind == "heston":
            return HestonParams(**q)
        return models.TwoFactorSVModel.three_halves(q["v0"], q["eta"], q["rho"])

    @property
    def spot_variance(self) -> float:
        return self.energy_data().spot_variance

    def energy_data(self) -> EnergyData:
        m = self.model()
        if self.kind == "bs":
            sigma = m.sigma
            return EnergyData(lam2=1.0 / sigma**2, lam3=0.0, lam4=0.0,
                              gamma0=1.0 / (math.sqrt(2.0 * math.pi) * sigma))
        if self.kind == "localvol_power":
            return models.localvol_energy_derivs(m)
        if self.kind == "heston":
            return heston.heston_energy_derivs(m)
        return models.energy_from_osajima(models.osajima_two_factor(m))

    def energy_function(self) -> Optional[Callable[[float], float]]:
        """The full energy function Lambda(k), when the family provides one."""
        m = self.model()
        if self.kind == "bs":
            return lambda k: bs.bs_energy(k, m)
        if self.kind == "localvol_power":
            return lambda k: models.localvol_energy(m, k)
        if self.kind == "heston":
            return lambda k: heston.heston_energy(m, k)
        return None

    @property
    def has_exact_pricer(self) -> bool:
        return self.kind in ("bs", "heston")

    def _require_exact(self, what: str) -> None:
        if not self.has_exact_pricer:
            raise DomainError(f"{what} is not available for model '{self.kind}'")

    def log_call(self, k: float, t: float) -> float:
        """Exact log of the normalized call price c(k, t)."""
        self._require_exact("exact pricing")
        m = self.model()
        if self.kind == "bs":
            return bs.bs_log_call(k, m.sigma * math.sqrt(t))
        return heston.heston_call(m, bs.OptionQuery.from_log_moneyness(k, t)).meta["log_price"]

    def log_digital(self, k: float, t: float) -> float:
        """Exact log P[X_t >= k]."""
        self._require_exact("exact digital pricing")
        m = self.model()
        if self.kind == "bs":
            return bs.bs_log_digital(k, m.sigma * math.sqrt(t))
        return heston.heston_digital(m, k, t).meta["log_prob"]

    def log_mgf(self, s: float, t: float) -> float:
        """log E[exp(s X_t)], +inf after explosion."""
        self._require_exact("the real moment generating function")
        m = self.model()
        if self.kind == "bs":
            return 0.5 * m.sigma**2 * t * (s * s - s)
        return heston.heston_log_mgf_real(m, s, t)

    def explosion_time(self, s: float) -> float:
        self._require_exact("the explosion time")
        if self.kind == "bs":
            return math.inf
        return heston.heston_explosion_time(self.model(), s)


def load_config(path) -> ModelSpec:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DomainError(f"config {path} is not valid JSON: {exc}") from None
    return ModelSpec.from_dict(doc)


def bundled_config(name: str) -> ModelSpec:
    """A config shipped with the package, e.g. ``heston_fig2``."""
    text = resources.files("motm").joinpath("configs", f"{name}.json").read_text()
    return ModelSpec.from_dict(json.loads(text))
