"""Benchmark device registry.

Four published oxide-RRAM devices with compact-model parameters, the sweep
configuration that reproduces their published I-V loops, and the reference
switching metrics extracted from those loops. These serve as regression
targets for the simulator and as ground truth for fitter self-tests.

Oxide thickness and sweep window are per-device measurement conditions, not
model parameters; the registry pins the values under which the reference
metrics were taken.
"""
from __future__ import annotations

from dataclasses import dataclass

from .metrics import NvmMetrics
from .model import ModelParams, SweepSpec

__all__ = ["BenchmarkDevice", "BENCHMARK_DEVICES", "get_device"]


@dataclass(frozen=True)
class BenchmarkDevice:
    name: str
    stack: str
    params: ModelParams
    sweep: SweepSpec
    reference: NvmMetrics

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "stack": self.stack,
            "params": self.params.to_dict(),
            "sweep": self.sweep.to_dict(),
            "reference": self.reference.to_dict(),
        }


def _dev(name, stack, params, v_span, t_ox_nm, reference):
    sweep = SweepSpec(v_max=v_span, v_min=-v_span, t_ox=t_ox_nm * 1e-9)
    return BenchmarkDevice(name=name, stack=stack, params=params,
                           sweep=sweep, reference=reference)


BENCHMARK_DEVICES: dict[str, BenchmarkDevice] = {
    d.name: d for d in (
        _dev(
            "pt_hfo2", "Pt/HfO2",
            ModelParams(i0=1.70e-4, g0=2.18e-10, v0_volt=0.200,
                        nu0=10.5, beta=2.10, gamma0=20.8),
            1.2, 6.25,
            NvmMetrics(v_set=0.778, v_reset=-0.471, lrs_slope=0.0084,
                       area_lrs=3.66e-4, area_hrs=6.60e-7),
        ),
        _dev(
            "al_ge_taox", "Al/Ge/TaOx",
            ModelParams(i0=1.04e-3, g0=1.50e-10, v0_volt=0.250,
                        nu0=15.0, beta=1.50, gamma0=12.2),
            4.0, 13.0,
            NvmMetrics(v_set=3.055, v_reset=-1.474, lrs_slope=2.3032,
                       area_lrs=1.73e-1, area_hrs=6.30e-4),
        ),
        _dev(
            "ti_sio2", "Ti/SiO2",
            ModelParams(i0=3.74e-5, g0=1.85e-10, v0_volt=0.375,
                        nu0=1e-9, beta=1.80, gamma0=18.0),
            3.0, 6.25,
            NvmMetrics(v_set=2.116, v_reset=-1.191, lrs_slope=0.0049,
                       area_lrs=7.18e-4, area_hrs=4.09e-7),
        ),
        _dev(
            "pt_hfox_tiox_tin", "Pt/HfOx/TiOx/TiN",
            ModelParams(i0=1.00e-3, g0=2.50e-10, v0_volt=0.250,
                        nu0=10.0, beta=0.800, gamma0=16.0),
            2.5, 13.5,
            NvmMetrics(v_set=1.655, v_reset=-1.404, lrs_slope=0.0124,
                       area_lrs=4.74e-2, area_hrs=2.97e-4),
        ),
    )
}


def get_device(name: str) -> BenchmarkDevice:
    try:
        return BENCHMARK_DEVICES[name]
    except KeyError:
        known = ", ".join(sorted(BENCHMARK_DEVICES))
        raise KeyError(f"unknown device {name!r}; known devices: {known}")
