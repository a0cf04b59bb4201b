"""Model parameters and the plain-text ``key=value`` config format."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from pathlib import Path

from .errors import InvalidParams


@dataclass(frozen=True)
class GeometricLorenzParams:
    """Eigen-rates of the saddle block plus the return-map coefficients.

    ``a`` is not a free parameter: it is always ``lambda3 / lambda1``.
    """

    lambda1: float = 1.0
    lambda2: float = 2.0
    lambda3: float = 0.8
    k: float = 1.9
    b: float = 0.3
    c: float = 0.6
    tau_tube: float = 1.0
    a: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "a", self.lambda3 / self.lambda1)
        self.validate()

    @property
    def exponent_y(self) -> float:
        return self.lambda2 / self.lambda1

    def validate(self) -> None:
        l1, l2, l3 = self.lambda1, self.lambda2, self.lambda3
        if not (0 < l3 < l1 < l2):
            raise InvalidParams(f"need 0 < lambda3 < lambda1 < lambda2, got {l1}, {l2}, {l3}")
        if not (0 < self.a < 1):
            raise InvalidParams(f"a = {self.a} must lie in (0, 1)")
        if not self.k * self.a > math.sqrt(2):
            raise InvalidParams(f"k*a = {self.k * self.a} must exceed sqrt(2)")
        if not self.k < 2:
            raise InvalidParams(f"k = {self.k} must be < 2 so that alpha(1) < 1")
        if not (0 < self.b < 1):
            raise InvalidParams(f"b = {self.b} must lie in (0, 1)")
        if abs(self.c) + self.b > 1:
            raise InvalidParams(f"|c| + b = {abs(self.c) + self.b} exceeds 1")
        if not self.tau_tube > 0:
            raise InvalidParams("tau_tube must be positive")

    def return_map_params(self) -> "ReturnMapParams":
        return ReturnMapParams(k=self.k, a=self.a, b=self.b, c=self.c, exponent_y=self.exponent_y)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.init}


@dataclass(frozen=True)
class ReturnMapParams:
    k: float
    a: float
    b: float
    c: float
    exponent_y: float

    def __post_init__(self):
        if not (0 < self.a < 1 and self.k * self.a > math.sqrt(2) and self.k < 2):
            raise InvalidParams("return map violates alpha' > sqrt(2) or alpha(1) < 1")
        if not (0 < self.b < 1 and abs(self.c) + self.b <= 1):
            raise InvalidParams("beta must map into [-1, 1] and contract")


DEFAULT_PARAMS = GeometricLorenzParams()


def parse_key_values(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParams(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


_PARAM_KEYS = ("lambda1", "lambda2", "lambda3", "k", "b", "c", "tau_tube")


def params_from_mapping(values: dict[str, str]) -> GeometricLorenzParams:
    kw = {}
    for key in _PARAM_KEYS:
        if key in values:
            try:
                kw[key] = float(values[key])
            except ValueError as exc:
                raise InvalidParams(f"{key}: not a number: {values[key]!r}") from exc
    params = GeometricLorenzParams(**kw)
    if "a" in values and not math.isclose(float(values["a"]), params.a, rel_tol=0, abs_tol=1e-15):
        raise InvalidParams(f"a = {values['a']} disagrees with lambda3/lambda1 = {params.a}")
    return params


def load_params(path: str | Path) -> GeometricLorenzParams:
    return params_from_mapping(parse_key_values(Path(path).read_text()))


def dump_params(params: GeometricLorenzParams) -> str:
    return "".join(f"{k} = {v!r}\n" for k, v in params.to_dict().items())


__all__ = [
    "GeometricLorenzParams",
    "ReturnMapParams",
    "DEFAULT_PARAMS",
    "parse_key_values",
    "params_from_mapping",
    "load_params",
    "dump_params",
]
