"""Scalar performance metrics computed from a simulation trace.

Error metrics use the true output (r - y), not the measured one: noise only
drives the controller, it is not a tracking error.  Integrals use the left
rectangle rule at the trace step, matching the ZOH stepping.  Actuation
activity implements the integral of the squared command rate, which is
step-size invariant up to discretization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sim import SimTrace

METRICS_CSV_HEADER = "controller,scenario,rise,settle,os,rms,mae,iae,itae,energy,activity,diverged"


@dataclass(frozen=True)
class StepMetrics:
    rise_s: float
    settle_s: float
    overshoot_pct: float
    not_risen: bool = False


@dataclass(frozen=True)
class MetricsReport:
    rise_s: float
    settle_s: float
    overshoot_pct: float
    rms: float
    mae: float
    iae: float
    itae: float
    energy: float
    activity: float
    diverged: bool = False


def step_metrics(trace: SimTrace) -> StepMetrics:
    """Rise (10-90%), settling (last exit from the +-2% band) and overshoot
    for a constant nonzero step reference."""
    r = float(trace.r[0])
    if r == 0.0 or not np.all(trace.r == r):
        raise ValueError("step metrics require a constant nonzero reference")
    t = trace.t
    yn = trace.y / r  # sign-normalized: thresholds work for negative steps too

    if np.max(yn) >= 0.9:
        k10 = int(np.argmax(yn >= 0.1))
        k90 = int(np.argmax(yn >= 0.9))
        rise = float(t[k90] - t[k10])
        not_risen = False
    else:
        rise = float(t[-1])
        not_risen = True

    outside = np.abs(yn - 1.0) > 0.02
    if not outside.any():
        settle = 0.0
    else:
        j = int(np.max(np.nonzero(outside)[0]))
        settle = float(t[j + 1]) if j + 1 < len(t) else float(t[-1])

    overshoot = max(0.0, float(np.max(yn)) - 1.0) * 100.0
    return StepMetrics(rise, settle, overshoot, not_risen)


def error_metrics(trace: SimTrace):
    """(rms, mae, iae, itae) of the true tracking error r - y."""
    e = trace.r - trace.y
    ae = np.abs(e)
    rms = float(np.sqrt(np.mean(e ** 2)))
    mae = float(np.mean(ae))
    iae = float(np.sum(ae[:-1]) * trace.dt)
    itae = float(np.sum(trace.t[:-1] * ae[:-1]) * trace.dt)
    return rms, mae, iae, itae


def actuation_metrics(trace: SimTrace):
    """(energy, activity): integral of u^2 and of the squared command rate."""
    if len(trace.u) < 2:
        raise ValueError("actuation metrics need at least two samples")
    u = trace.u
    energy = float(np.sum(u[:-1] ** 2) * trace.dt)
    activity = float(np.sum(np.diff(u) ** 2) / trace.dt)
    return energy, activity


def compute_metrics(trace: SimTrace) -> MetricsReport:
    sm = step_metrics(trace)
    rms, mae, iae, itae = error_metrics(trace)
    energy, activity = actuation_metrics(trace)
    return MetricsReport(sm.rise_s, sm.settle_s, sm.overshoot_pct,
                         rms, mae, iae, itae, energy, activity, trace.diverged)


def metrics_csv_row(controller: str, scenario: str, rep: MetricsReport) -> str:
    vals = [rep.rise_s, rep.settle_s, rep.overshoot_pct, rep.rms, rep.mae,
            rep.iae, rep.itae, rep.energy, rep.activity]
    return ",".join([controller, scenario] + [f"{v:.17g}" for v in vals]
                    + [str(int(rep.diverged))])
