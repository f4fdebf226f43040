"""Synthesis of the benchmark controller families.

Four families share the same unity-feedback loop: a filtered-derivative PID,
a model-reference design that inverts the plant against a well-damped
second-order target, an energy-oriented variant of it retuned on the wave
scenario, and an internal-model design built from a low-pass filter and the
invertible plant factor.

The model-based designs cancel the plant integrator against the structural
zero at s = 0 of (1 - target): that root exists exactly by construction
(unit DC gain of the target), so it is deflated explicitly instead of
trusting numerical root pairing.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .metrics import actuation_metrics, step_metrics
from .ratpoly import (Polynomial, TransferFunction, as_poly, deflate_origin,
                      min_phase_split, poly_mul, poly_roots, poly_sub,
                      tf_relative_degree)
from .sim import ScenarioConfig, gen_reference, gen_wave, simulate_closed_loop

CONTROLLER_TAGS = ("PID", "MRC", "MRC_R", "IMC")


@dataclass(frozen=True)
class PidParams:
    Kp: float
    Ki: float
    Kd: float
    Tf: float

    def __post_init__(self):
        if self.Kp < 0 or self.Ki < 0 or self.Kd < 0:
            raise ValueError("PID gains must be >= 0")
        if self.Tf <= 0:
            raise ValueError("derivative roll-off Tf must be > 0")


@dataclass(frozen=True)
class MrcParams:
    zeta: float = 0.9
    wn: float = 5.5    # rad/s
    tauf: float = 0.10  # s

    def __post_init__(self):
        if not 0 < self.zeta <= 1:
            raise ValueError("damping ratio must be in (0, 1]")
        if self.wn <= 0 or self.tauf <= 0:
            raise ValueError("wn and tauf must be > 0")


@dataclass(frozen=True)
class ImcParams:
    lam: float = 0.20  # filter time constant, s
    n: int = 3         # filter order

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("filter time constant must be > 0")
        if self.n < 1:
            raise ValueError("filter order must be >= 1")


@dataclass(frozen=True)
class ControllerSpec:
    tag: str
    label: str
    params: object

    def __post_init__(self):
        if self.tag not in CONTROLLER_TAGS:
            raise ValueError(f"unknown controller tag {self.tag!r}")
        expected = {"PID": PidParams, "MRC": MrcParams, "MRC_R": MrcParams,
                    "IMC": ImcParams}[self.tag]
        if not isinstance(self.params, expected):
            raise ValueError(f"{self.tag} controller needs {expected.__name__}")

    def synthesize(self, plant: TransferFunction) -> TransferFunction:
        if self.tag == "PID":
            return pid_controller(self.params)
        if self.tag in ("MRC", "MRC_R"):
            return mrc_controller(plant, self.params)
        return imc_controller(plant, self.params)


def pid_controller(p: PidParams) -> TransferFunction:
    """Parallel PID with first-order derivative roll-off, as one biproper
    rational function over den = s (1 + Tf s)."""
    num = [p.Kp * p.Tf + p.Kd, p.Kp + p.Ki * p.Tf, p.Ki]
    den = [p.Tf, 1.0, 0.0]
    return TransferFunction(num, den)


def mrc_reference_model(p: MrcParams) -> TransferFunction:
    """Second-order target with a roll-off pole for properness; unit DC gain."""
    second_order = TransferFunction([p.wn ** 2], [1.0, 2.0 * p.zeta * p.wn, p.wn ** 2])
    rolloff = TransferFunction([1.0], [p.tauf, 1.0])
    return second_order * rolloff


def _has_origin_pole(g: TransferFunction) -> bool:
    # structural test on the stored canonical coefficients
    return g.den.coeffs[-1] == 0.0


def _require_minimum_phase(plant: TransferFunction) -> None:
    zeros = plant.zeros()
    for z in zeros:
        if z.real >= -1e-12 * max(1.0, abs(z)):
            raise ValueError("non-minimum-phase plant: MRC inversion invalid")


def mrc_compensator(plant: TransferFunction, target: TransferFunction) -> TransferFunction:
    """Compensator making the unity loop follow ``target``: target/(plant*(1-target)).

    Requires target(0) = 1, which puts an exact zero of (1 - target) at the
    origin; that factor cancels the plant integrator (or stays as integral
    action when the plant has none).
    """
    _require_minimum_phase(plant)
    one_minus = poly_sub(target.den, target.num)
    q = deflate_origin(one_minus)  # exact: target has unit DC gain
    if _has_origin_pole(plant):
        num = poly_mul(target.num, deflate_origin(plant.den))
        den = poly_mul(plant.num, q)
    else:
        num = poly_mul(target.num, plant.den)
        den = poly_mul(plant.num, poly_mul(q, Polynomial([1.0, 0.0])))
    ctrl = TransferFunction(num, den)
    if tf_relative_degree(ctrl) < 0:
        raise ValueError("improper compensator: target rolls off slower than the plant")
    return ctrl


def mrc_controller(plant: TransferFunction, p: MrcParams) -> TransferFunction:
    return mrc_compensator(plant, mrc_reference_model(p))


def imc_filter(p: ImcParams) -> TransferFunction:
    """Unity-gain low-pass 1/(lam s + 1)^n."""
    den = as_poly([1.0])
    for _ in range(p.n):
        den = poly_mul(den, Polynomial([p.lam, 1.0]))
    return TransferFunction([1.0], den)


def imc_controller(plant: TransferFunction, p: ImcParams) -> TransferFunction:
    """Feedback-equivalent internal-model controller for a low-pass filter of
    order n: filter/((1 - filter) * invertible plant factor)."""
    split = min_phase_split(plant)
    g_min = split.minimum_phase
    rel = tf_relative_degree(g_min)
    if p.n < rel:
        raise ValueError(
            f"improper IMC controller: filter order {p.n} below plant relative degree {rel}")
    # (lam s + 1)^n - 1 has binomial coefficients and an exact root at s = 0
    filt_rest = Polynomial([math.comb(p.n, k) * p.lam ** k
                            for k in range(p.n, 0, -1)])
    if _has_origin_pole(g_min):
        num = deflate_origin(g_min.den)
        den = poly_mul(g_min.num, filt_rest)
    else:
        num = g_min.den
        den = poly_mul(g_min.num, poly_mul(filt_rest, Polynomial([1.0, 0.0])))
    return TransferFunction(num, den)


class RetuneInfeasibleError(RuntimeError):
    """Every grid candidate violated the overshoot cap."""

    def __init__(self, message: str, least_violating: MrcParams, overshoot_pct: float):
        super().__init__(message)
        self.least_violating = least_violating
        self.overshoot_pct = overshoot_pct


def mrc_energy_retune(plant: TransferFunction, grid_wn, grid_tauf,
                      os_cap: float, wave_cfg: ScenarioConfig,
                      zeta: float = 0.9) -> MrcParams:
    """Grid-select (wn, tauf) minimizing control energy on the wave scenario
    subject to a soft overshoot cap.

    Every grid point is simulated with the same wave realization; candidates
    whose overshoot exceeds ``os_cap`` percent are discarded.  Ties break
    toward smaller wn, then smaller tauf (slower designs are kinder to the
    actuator).  If nothing is feasible the error carries the least-violating
    candidate.
    """
    grid_wn = [float(w) for w in grid_wn]
    grid_tauf = [float(tf) for tf in grid_tauf]
    if not grid_wn or not grid_tauf:
        raise ValueError("retune grids must be non-empty")
    if wave_cfg.kind != "wave":
        raise ValueError("energy retune is defined on the wave scenario")
    reference = gen_reference(wave_cfg)
    wave = gen_wave(wave_cfg)
    best = None          # (energy, wn, tauf)
    least_bad = None     # (overshoot, wn, tauf)
    for wn in grid_wn:
        for tauf in grid_tauf:
            params = MrcParams(zeta=zeta, wn=wn, tauf=tauf)
            trace = simulate_closed_loop(plant, mrc_controller(plant, params),
                                         wave_cfg, reference=reference, wave=wave)
            if trace.diverged:
                continue
            overshoot = step_metrics(trace).overshoot_pct
            if overshoot <= os_cap:
                energy = actuation_metrics(trace)[0]
                if best is None or energy < best[0]:
                    best = (energy, wn, tauf)
            elif least_bad is None or overshoot < least_bad[0]:
                least_bad = (overshoot, wn, tauf)
    if best is None:
        if least_bad is None:
            raise RetuneInfeasibleError("overshoot cap infeasible on grid: all candidates diverged",
                                        MrcParams(zeta, grid_wn[0], grid_tauf[0]), math.inf)
        raise RetuneInfeasibleError(
            f"overshoot cap infeasible on grid: best overshoot {least_bad[0]:.2f}% > {os_cap}%",
            MrcParams(zeta, least_bad[1], least_bad[2]), least_bad[0])
    return MrcParams(zeta=zeta, wn=best[1], tauf=best[2])


def _row_get(row, key, cast=float):
    value = row.get(key, "").strip()
    return cast(value) if value else None


def builtin_controllers() -> list[ControllerSpec]:
    """The six bundled designs (three tuned PIDs, nominal and retuned MRC, IMC)."""
    text = resources.files("surgebench.data").joinpath("controller_params.csv").read_text()
    specs = []
    for row in csv.DictReader(text.splitlines()):
        tag = row["tag"].strip()
        if tag == "PID":
            params = PidParams(_row_get(row, "Kp"), _row_get(row, "Ki"),
                               _row_get(row, "Kd"), _row_get(row, "Tf"))
        elif tag in ("MRC", "MRC_R"):
            params = MrcParams(_row_get(row, "zeta"), _row_get(row, "wn"),
                               _row_get(row, "tauf"))
        else:
            params = ImcParams(_row_get(row, "lambda"), _row_get(row, "order", int))
        specs.append(ControllerSpec(tag=tag, label=row["label"].strip(), params=params))
    return specs
