"""Min-max label scalers, persisted with every model artifact."""

import math
from dataclasses import dataclass

from .errors import SchemaViolation

LABEL_FIELDS = ("g0", "v0_volt", "nu0", "beta", "gamma0")


@dataclass(frozen=True)
class MinMaxScaler:
    """Maps [lo, hi] onto [0, 1], optionally through log space.

    A degenerate range (lo == hi) pins the value: normalize returns 0 and
    denormalize returns lo regardless of input.
    """

    name: str
    lo: float
    hi: float
    transform: str = "linear"

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)
                and self.lo <= self.hi):
            raise SchemaViolation(f"bad scaler range for {self.name!r}: "
                                  f"[{self.lo}, {self.hi}]")
        if self.transform not in ("linear", "log"):
            raise SchemaViolation(f"bad transform {self.transform!r}")
        if self.transform == "log" and self.lo < self.hi and self.lo <= 0:
            raise SchemaViolation(f"log scaler for {self.name!r} needs "
                                  "lo > 0")

    def _fwd(self, x):
        return math.log(x) if self.transform == "log" else float(x)

    def _inv(self, t):
        return math.exp(t) if self.transform == "log" else float(t)

    def normalize(self, x: float) -> float:
        if self.lo == self.hi:
            return 0.0
        return ((self._fwd(x) - self._fwd(self.lo))
                / (self._fwd(self.hi) - self._fwd(self.lo)))

    def denormalize(self, u: float) -> float:
        if self.lo == self.hi:
            return self.lo
        u = min(1.0, max(0.0, float(u)))
        return self._inv(self._fwd(self.lo)
                         + u * (self._fwd(self.hi) - self._fwd(self.lo)))

    def to_dict(self) -> dict:
        return {"name": self.name, "lo": self.lo, "hi": self.hi,
                "transform": self.transform}

    @classmethod
    def from_dict(cls, d: dict) -> "MinMaxScaler":
        try:
            return cls(name=str(d["name"]), lo=float(d["lo"]),
                       hi=float(d["hi"]), transform=str(d["transform"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolation(f"bad scaler: {exc}") from None


def scalers_from_ranges(ranges: dict) -> dict:
    """Label and t_ox scalers from a dataset's sampling-range block.

    `ranges` maps parameter name to [lo, hi, "linear"|"log"], the layout
    of the dataset stats sidecar. t_ox is rescaled to nanometres (the
    network input unit).
    """
    out = {}
    for name in LABEL_FIELDS + ("t_ox",):
        if name not in ranges:
            raise SchemaViolation(f"ranges missing {name!r}")
        lo, hi, transform = ranges[name]
        if name == "t_ox":
            lo, hi = float(lo) * 1e9, float(hi) * 1e9
        out[name] = MinMaxScaler(name=name, lo=float(lo), hi=float(hi),
                                 transform=str(transform))
    return out


def scalers_to_dict(scalers: dict) -> dict:
    return {"labels": [scalers[n].to_dict() for n in LABEL_FIELDS],
            "t_ox": scalers["t_ox"].to_dict()}


def scalers_from_dict(d: dict) -> dict:
    try:
        labels = [MinMaxScaler.from_dict(s) for s in d["labels"]]
        t_ox = MinMaxScaler.from_dict(d["t_ox"])
    except (KeyError, TypeError) as exc:
        raise SchemaViolation(f"bad scalers payload: {exc}") from None
    if tuple(s.name for s in labels) != LABEL_FIELDS:
        raise SchemaViolation("label scalers out of order")
    out = {s.name: s for s in labels}
    out["t_ox"] = t_ox
    return out


def normalize_labels(params: dict, scalers: dict):
    return [scalers[n].normalize(float(params[n])) for n in LABEL_FIELDS]


def denormalize_labels(values, scalers: dict) -> dict:
    if len(values) != len(LABEL_FIELDS):
        raise SchemaViolation(f"expected {len(LABEL_FIELDS)} labels")
    return {n: scalers[n].denormalize(float(u))
            for n, u in zip(LABEL_FIELDS, values)}
