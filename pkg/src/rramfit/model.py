"""Compact model for bipolar filamentary resistive switching.

Conduction follows a tunneling-gap law

    i = i0 * exp(-g / g0) * sinh(v / v0)

and the filament gap g evolves under a field-accelerated growth law

    dg/dt = -nu0 * exp(-Ea / kT) * sinh(gamma * a0 / t_ox * q * v / kT)

with the field-enhancement factor weakened by a cubic of the gap,

    gamma = gamma0 - beta * g_nm**3        (g_nm is the gap in nanometres).

Positive voltage drives g toward g_min (set), negative voltage toward g_max
(reset).  Joule heating and stochastic gap noise are intentionally excluded:
the model is deterministic at fixed temperature.

Units: every length is metres except inside the cubic above, which is
evaluated on the gap expressed in nanometres; voltages in volts, currents in
amperes, time in seconds, activation energy in electron-volts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InvalidParams, NonFiniteState

# CODATA 2018 exact values.
BOLTZMANN_J_PER_K = 1.380649e-23
ELEMENTARY_CHARGE_C = 1.602176634e-19

# sinh overflow guard: arguments are capped, which saturates (never raises).
SINH_ARG_CAP = 50.0

# Gap-dynamics defaults shared by the simulator and dataset generation.
# The activation energy and the gap clamp were calibrated jointly against the
# four bundled benchmark devices (see devices.py); both are configurable.
DEFAULT_EA_EV = 0.95
DEFAULT_A0_M = 0.25e-9
DEFAULT_TEMPERATURE_K = 300.0
DEFAULT_G_MIN_M = 0.1e-9
DEFAULT_G_MAX_M = 1.45e-9


def _require(cond, message):
    if not cond:
        raise InvalidParams(message)


def _finite(*values):
    return all(math.isfinite(v) for v in values)


@dataclass(frozen=True)
class PhysicalConstants:
    """Material constants of the gap-dynamics law."""

    ea_ev: float = DEFAULT_EA_EV          # activation energy
    a0_m: float = DEFAULT_A0_M            # atomic hopping distance
    temperature_k: float = DEFAULT_TEMPERATURE_K

    def __post_init__(self):
        _require(_finite(self.ea_ev, self.a0_m, self.temperature_k),
                 "physical constants must be finite")
        _require(self.ea_ev > 0, "ea_ev must be positive")
        _require(self.a0_m > 0, "a0_m must be positive")
        _require(self.temperature_k > 0, "temperature_k must be positive")

    @property
    def kt_joule(self):
        return BOLTZMANN_J_PER_K * self.temperature_k

    def arrhenius(self):
        """exp(-Ea/kT), the thermally activated prefactor of gap motion."""
        return math.exp(-self.ea_ev * ELEMENTARY_CHARGE_C / self.kt_joule)


@dataclass(frozen=True)
class ModelParams:
    """The six fitted parameters of the compact model."""

    i0: float        # current scale (A)
    g0: float        # tunneling decay length (m)
    v0_volt: float   # conduction voltage scale (V)
    nu0: float       # gap velocity scale (m/s)
    beta: float      # cubic gap feedback strength (1/nm^3)
    gamma0: float    # zero-gap field enhancement

    def __post_init__(self):
        _require(_finite(self.i0, self.g0, self.v0_volt, self.nu0,
                         self.beta, self.gamma0),
                 "model parameters must be finite")
        _require(self.i0 > 0, "i0 must be positive")
        _require(self.g0 > 0, "g0 must be positive")
        _require(self.v0_volt > 0, "v0_volt must be positive")
        _require(self.nu0 >= 0, "nu0 must be non-negative")
        _require(self.beta >= 0, "beta must be non-negative")
        _require(self.gamma0 >= 0, "gamma0 must be non-negative")

    def to_dict(self):
        return {"i0": self.i0, "g0": self.g0, "v0_volt": self.v0_volt,
                "nu0": self.nu0, "beta": self.beta, "gamma0": self.gamma0}

    @classmethod
    def from_dict(cls, d):
        return cls(i0=float(d["i0"]), g0=float(d["g0"]),
                   v0_volt=float(d["v0_volt"]), nu0=float(d["nu0"]),
                   beta=float(d["beta"]), gamma0=float(d["gamma0"]))


@dataclass(frozen=True)
class SweepSpec:
    """Triangular bipolar sweep plus the device/integration configuration."""

    v_max: float = 4.0
    v_min: float = -4.0
    # Default ramp rate makes a full cycle exactly 4000 Euler steps at the
    # default dt: (2*v_max + 2*|v_min|) / ramp_rate = 4 s.
    ramp_rate: float = 4.0               # V/s
    dt: float = 1e-3                     # s; drop to 1e-4 for abrupt devices
    polarity_order: str = "positive-first"
    i_compliance: float = 0.1            # A
    t_ox: float = 10e-9                  # oxide thickness (m)
    g_min: float = DEFAULT_G_MIN_M
    g_max: float = DEFAULT_G_MAX_M
    g_init: Optional[float] = None       # defaults to g_max (HRS start)
    gamma_floor: bool = True             # floor gamma at zero

    def __post_init__(self):
        _require(_finite(self.v_max, self.v_min, self.ramp_rate, self.dt,
                         self.i_compliance, self.t_ox, self.g_min, self.g_max),
                 "sweep spec must be finite")
        _require(self.v_max > 0, "v_max must be positive")
        _require(self.v_min < 0, "v_min must be negative")
        _require(self.ramp_rate > 0, "ramp_rate must be positive")
        _require(self.dt > 0, "dt must be positive")
        _require(self.i_compliance > 0, "i_compliance must be positive")
        _require(self.t_ox > 0, "t_ox must be positive")
        _require(0 < self.g_min < self.g_max, "need 0 < g_min < g_max")
        _require(self.polarity_order in ("positive-first", "negative-first"),
                 "polarity_order must be positive-first or negative-first")
        if self.g_init is None:
            object.__setattr__(self, "g_init", self.g_max)
        _require(self.g_min <= self.g_init <= self.g_max,
                 "g_init must lie within [g_min, g_max]")

    @property
    def duration(self):
        return (2.0 * self.v_max + 2.0 * abs(self.v_min)) / self.ramp_rate

    def to_dict(self):
        return {"v_max": self.v_max, "v_min": self.v_min,
                "ramp_rate": self.ramp_rate, "dt": self.dt,
                "polarity_order": self.polarity_order,
                "i_compliance": self.i_compliance, "t_ox": self.t_ox,
                "g_min": self.g_min, "g_max": self.g_max,
                "g_init": self.g_init, "gamma_floor": self.gamma_floor}

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in known})


@dataclass(frozen=True)
class IVTrace:
    """Sampled sweep: time, voltage, current and (for simulations) the gap."""

    t: np.ndarray
    v: np.ndarray
    i: np.ndarray
    g: Optional[np.ndarray] = None
    sweep: Optional[SweepSpec] = None

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.v, dtype=float)
        i = np.asarray(self.i, dtype=float)
        g = None if self.g is None else np.asarray(self.g, dtype=float)
        _require(t.ndim == 1 and len(t) >= 8,
                 "trace needs at least 8 samples")
        _require(len(t) == len(v) == len(i), "t, v, i lengths differ")
        if g is not None:
            _require(len(g) == len(t), "g length differs from t")
        _require(bool(np.all(np.isfinite(t)) and np.all(np.isfinite(v))
                      and np.all(np.isfinite(i))),
                 "trace samples must be finite")
        _require(bool(np.all(np.diff(t) > 0)), "t must be strictly increasing")
        for name, arr in (("t", t), ("v", v), ("i", i), ("g", g)):
            if arr is None:
                continue
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return len(self.t)


def gamma_of_gap(gap_m, params, floor=True):
    """Field enhancement at a given gap; optionally floored at zero.

    Accepts scalars or arrays (the tunneling gap enters in nanometres
    cubed).
    """
    gap_nm = np.asarray(gap_m, dtype=float) * 1e9
    gamma = params.gamma0 - params.beta * gap_nm ** 3
    if floor:
        gamma = np.maximum(gamma, 0.0)
    return float(gamma) if np.ndim(gap_m) == 0 else gamma


def device_current(v, gap_m, params):
    """Unclamped conduction current at voltage v and gap g (amperes)."""
    arg = np.clip(np.asarray(v, dtype=float) / params.v0_volt,
                  -SINH_ARG_CAP, SINH_ARG_CAP)
    i = params.i0 * np.exp(-np.asarray(gap_m, dtype=float) / params.g0) \
        * np.sinh(arg)
    return float(i) if np.ndim(i) == 0 else i


def gap_velocity(v, gap_m, params, consts, t_ox, gamma_floor=True):
    """dg/dt (m/s): negative at positive bias (set), positive at negative."""
    gamma = gamma_of_gap(gap_m, params, floor=gamma_floor)
    arg = np.clip(gamma * consts.a0_m / t_ox
                  * ELEMENTARY_CHARGE_C * np.asarray(v, float)
                  / consts.kt_joule,
                  -SINH_ARG_CAP, SINH_ARG_CAP)
    rate = -params.nu0 * consts.arrhenius() * np.sinh(arg)
    return float(rate) if np.ndim(rate) == 0 else rate


def make_triangular_sweep(spec):
    """Sampled triangular bipolar waveform 0 -> apex -> 0 -> apex -> 0.

    Returns (t, v) arrays sampled every spec.dt including both endpoints.
    """
    leg_pos = spec.v_max / spec.ramp_rate
    leg_neg = abs(spec.v_min) / spec.ramp_rate
    if spec.polarity_order == "positive-first":
        knots_t = [0.0, leg_pos, 2 * leg_pos,
                   2 * leg_pos + leg_neg, 2 * leg_pos + 2 * leg_neg]
        knots_v = [0.0, spec.v_max, 0.0, spec.v_min, 0.0]
    else:
        knots_t = [0.0, leg_neg, 2 * leg_neg,
                   2 * leg_neg + leg_pos, 2 * leg_neg + 2 * leg_pos]
        knots_v = [0.0, spec.v_min, 0.0, spec.v_max, 0.0]
    total = knots_t[-1]
    n_steps = int(round(total / spec.dt))
    if abs(n_steps * spec.dt - total) > 1e-9 * total:
        n_steps = int(math.ceil(total / spec.dt))
    t = np.arange(n_steps + 1, dtype=float) * spec.dt
    v = np.interp(np.minimum(t, total), knots_t, knots_v)
    return t, v


def simulate_sweep(params, spec=None, consts=None):
    """Integrate the gap dynamics over one bipolar sweep (explicit Euler).

    Each step records the current computed from the pre-step gap, clamped to
    the compliance limit, then advances the gap and clamps it to
    [g_min, g_max].  Pure function of its inputs: identical inputs give a
    bit-identical trace.
    """
    spec = spec or SweepSpec()
    consts = consts or PhysicalConstants()
    t, v = make_triangular_sweep(spec)
    n = len(t)
    i_out = np.empty(n)
    g_out = np.empty(n)

    # Hoist loop constants; the step loop is the hot path.
    rate0 = params.nu0 * consts.arrhenius()
    geom = consts.a0_m / spec.t_ox * ELEMENTARY_CHARGE_C / consts.kt_joule
    inv_v0 = 1.0 / params.v0_volt
    inv_g0 = 1.0 / params.g0
    i0 = params.i0
    icc = spec.i_compliance
    g_lo, g_hi = spec.g_min, spec.g_max
    gamma0, beta = params.gamma0, params.beta
    floor = spec.gamma_floor
    dt = spec.dt
    cap = SINH_ARG_CAP
    exp, sinh = math.exp, math.sinh

    g = spec.g_init
    for k in range(n):
        vk = v[k]
        arg_i = vk * inv_v0
        if arg_i > cap:
            arg_i = cap
        elif arg_i < -cap:
            arg_i = -cap
        ik = i0 * exp(-g * inv_g0) * sinh(arg_i)
        if ik > icc:
            ik = icc
        elif ik < -icc:
            ik = -icc
        i_out[k] = ik
        g_out[k] = g

        gamma = gamma0 - beta * (g * 1e9) ** 3
        if floor and gamma < 0.0:
            gamma = 0.0
        arg_g = gamma * geom * vk
        if arg_g > cap:
            arg_g = cap
        elif arg_g < -cap:
            arg_g = -cap
        g = g - dt * rate0 * sinh(arg_g)
        if g < g_lo:
            g = g_lo
        elif g > g_hi:
            g = g_hi
        if not math.isfinite(g) or not math.isfinite(ik):
            raise NonFiniteState(
                f"non-finite state at step {k} (t={t[k]:g}); retry with a "
                f"smaller dt")

    return IVTrace(t=t, v=v, i=i_out, g=g_out, sweep=spec)


__all__ = [
    "BOLTZMANN_J_PER_K", "ELEMENTARY_CHARGE_C", "SINH_ARG_CAP",
    "DEFAULT_EA_EV", "DEFAULT_A0_M", "DEFAULT_TEMPERATURE_K",
    "DEFAULT_G_MIN_M", "DEFAULT_G_MAX_M",
    "PhysicalConstants", "ModelParams", "SweepSpec", "IVTrace",
    "gamma_of_gap", "device_current", "gap_velocity",
    "make_triangular_sweep", "simulate_sweep",
]
