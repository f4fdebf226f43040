"""Discretization and fixed-step closed-loop simulation.

The loop follows the unity-feedback interconnection: the controller sees
e_k = r_k - (y_k + n_k), its output u_k plus the wave force d_k drives the
plant over [t_k, t_k+1).  The plant is discretized by zero-order hold (the
physical hold on actuation), the controller by the bilinear (Tustin)
transform, both at the scenario step.  Runs are deterministic: the sensor
noise stream is derived from the scenario seed via a counter-based
generator, so identical configurations give bit-identical traces.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm
from scipy.signal import lfilter, ss2tf

from .ratpoly import StateSpace, TransferFunction, tf_relative_degree, tf_to_statespace

SCENARIO_KINDS = ("nominal", "noise", "wave", "noise_wave")

# |y| beyond this flags the run as diverged and stops the integration.
DIVERGENCE_LIMIT = 1e6
# state-magnitude guard checked periodically inside the stepping loop
_STATE_LIMIT = 1e12
_CHECK_EVERY = 256

TRACE_CSV_HEADER = "t,r,y,ym,u,d"


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation scenario; ``kind`` gates which injections are active."""

    kind: str = "nominal"
    ref_amplitude: float = 2.0    # m/s
    horizon: float = 50.0         # s
    dt: float = 0.005             # s
    wave_amplitude: float = 8.0   # N
    wave_freq: float = 0.03       # Hz
    noise_sigma: float = 0.12     # m/s
    seed: int = 42
    y0: float = 0.0               # initial plant output offset, m/s

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.horizon < self.dt:
            raise ValueError("horizon must be >= dt")
        if self.wave_amplitude < 0:
            raise ValueError("wave.amplitude must be >= 0")
        if self.wave_freq < 0:
            raise ValueError("wave.freq must be >= 0")
        if self.noise_sigma < 0:
            raise ValueError("noise.sigma must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")

    @property
    def wave_active(self) -> bool:
        return self.kind in ("wave", "noise_wave")

    @property
    def noise_active(self) -> bool:
        return self.kind in ("noise", "noise_wave")

    @property
    def n_samples(self) -> int:
        return int(np.floor(self.horizon / self.dt)) + 1

    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) * self.dt


@dataclass
class DiscreteSystem:
    """Discrete realization with its running state."""

    Ad: np.ndarray
    Bd: np.ndarray
    Cd: np.ndarray
    Dd: np.ndarray
    dt: float
    state: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.state is None:
            self.state = np.zeros(self.Ad.shape[0])

    def reset(self):
        self.state = np.zeros(self.Ad.shape[0])

    def step(self, u: float) -> float:
        """Output at the current instant, then advance one sample."""
        y = float(self.Cd @ self.state + self.Dd[0, 0] * u)
        self.state = self.Ad @ self.state + self.Bd[:, 0] * u
        return y


def c2d_zoh(ss: StateSpace, dt: float) -> DiscreteSystem:
    """Exact zero-order-hold discretization via the augmented matrix exponential."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    n, m = ss.A.shape[0], ss.B.shape[1]
    if n == 0:
        return DiscreteSystem(ss.A.copy(), ss.B.copy(), ss.C.copy(), ss.D.copy(), dt)
    M = np.zeros((n + m, n + m))
    M[:n, :n] = ss.A
    M[:n, n:] = ss.B
    E = expm(M * dt)
    return DiscreteSystem(E[:n, :n], E[:n, n:], ss.C.copy(), ss.D.copy(), dt)


def c2d_tustin(ss: StateSpace, dt: float) -> DiscreteSystem:
    """Bilinear (trapezoidal) discretization; preserves DC gain exactly."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    n = ss.A.shape[0]
    if n == 0:
        return DiscreteSystem(ss.A.copy(), ss.B.copy(), ss.C.copy(), ss.D.copy(), dt)
    I = np.eye(n)
    P = I - ss.A * (dt / 2.0)
    try:
        Ad = np.linalg.solve(P, I + ss.A * (dt / 2.0))
        Bd = np.linalg.solve(P, ss.B * dt)
        Cd = np.linalg.solve(P.T, ss.C.T).T
    except np.linalg.LinAlgError as exc:
        raise ValueError("Tustin singularity: I - A*dt/2 is not invertible") from exc
    Dd = ss.D + ss.C @ np.linalg.solve(P, ss.B) * (dt / 2.0)
    return DiscreteSystem(Ad, Bd, Cd, Dd, dt)


def gen_reference(cfg: ScenarioConfig) -> np.ndarray:
    """Constant speed setpoint, active from t = 0."""
    return np.full(cfg.n_samples, cfg.ref_amplitude)


def gen_wave(cfg: ScenarioConfig) -> np.ndarray:
    """Sinusoidal actuator-side wave force, or zeros when the scenario gates it off."""
    if not cfg.wave_active or cfg.wave_amplitude == 0.0:
        return np.zeros(cfg.n_samples)
    return cfg.wave_amplitude * np.sin(2.0 * np.pi * cfg.wave_freq * cfg.times())


def _normal_stream(n: int, seed: int) -> np.ndarray:
    # counter-based Philox uniforms pushed through Box-Muller: reproducible
    # for a fixed seed no matter how many streams run concurrently
    gen = np.random.Generator(np.random.Philox(key=seed))
    pairs = (n + 1) // 2
    u1 = 1.0 - gen.random(pairs)  # (0, 1]: keeps log() finite
    u2 = gen.random(pairs)
    radius = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(2.0 * np.pi * u2)
    z[1::2] = radius * np.sin(2.0 * np.pi * u2)
    return z[:n]


def gen_noise(cfg: ScenarioConfig) -> np.ndarray:
    """Per-sample white measurement noise, or zeros when gated off."""
    if not cfg.noise_active or cfg.noise_sigma == 0.0:
        return np.zeros(cfg.n_samples)
    return cfg.noise_sigma * _normal_stream(cfg.n_samples, cfg.seed)


@dataclass
class SimTrace:
    """Sampled closed-loop signals.  ym - y equals the injected noise."""

    t: np.ndarray
    r: np.ndarray
    y: np.ndarray
    ym: np.ndarray
    u: np.ndarray
    d: np.ndarray
    dt: float
    diverged: bool = False

    def to_csv(self, path) -> None:
        with open(path, "w", newline="\n") as fh:
            self.write_csv(fh)

    def write_csv(self, fh) -> None:
        fh.write(TRACE_CSV_HEADER + "\n")
        for row in zip(self.t, self.r, self.y, self.ym, self.u, self.d):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")

    @classmethod
    def from_csv(cls, path) -> "SimTrace":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        t, r, y, ym, u, d = (data[:, i] for i in range(6))
        dt = float(t[1] - t[0]) if len(t) > 1 else 1.0
        return cls(t=t, r=r, y=y, ym=ym, u=u, d=d, dt=dt)


def simulate_tf(g: TransferFunction, u: np.ndarray, dt: float) -> np.ndarray:
    """Open-loop response of g to the sampled input u, held between samples.

    Exact at the sample instants for piecewise-constant inputs (e.g. step
    references), which makes it the reference oracle for closed-loop
    transfer functions formed analytically.
    """
    ss = tf_to_statespace(g)
    dsys = c2d_zoh(ss, dt)
    if ss.n_states == 0:
        return dsys.Dd[0, 0] * np.asarray(u, dtype=float)
    num_d, den_d = ss2tf(dsys.Ad, dsys.Bd, dsys.Cd, dsys.Dd)
    return lfilter(num_d[0], den_d, np.asarray(u, dtype=float))


def simulate_closed_loop(plant: TransferFunction, controller: TransferFunction,
                         cfg: ScenarioConfig, *, reference: np.ndarray = None,
                         wave: np.ndarray = None, noise: np.ndarray = None) -> SimTrace:
    """Step the sampled feedback loop over the scenario horizon.

    Per sample: read y from the plant state (the plant must be strictly
    proper, so there is no feedthrough), form e = r - (y + n), produce u from
    the Tustin-discretized controller (biproper controllers act within the
    sample), then advance the ZOH-discretized plant with u + d.  Both blocks
    start from rest unless ``cfg.y0`` lifts the initial plant output.

    Pre-generated ``reference``/``wave``/``noise`` arrays override the
    scenario's own (deterministic) realizations; comparison runs pass them in
    so every controller sees identical injections.

    Diverging loops (|y| > 1e6 or non-finite state) are truncated at the
    first bad sample and flagged, not raised: tuners must be able to
    penalize unstable candidates.
    """
    if tf_relative_degree(plant) < 1:
        raise ValueError("algebraic loop risk: plant must be strictly proper")
    if tf_relative_degree(controller) < 0:
        raise ValueError("improper controller")

    ps = tf_to_statespace(plant)
    cs = tf_to_statespace(controller)
    pd = c2d_zoh(ps, cfg.dt)
    cd = c2d_tustin(cs, cfg.dt)

    t = cfg.times()
    N = cfg.n_samples
    r = gen_reference(cfg) if reference is None else np.asarray(reference, dtype=float)
    d = gen_wave(cfg) if wave is None else np.asarray(wave, dtype=float)
    n = gen_noise(cfg) if noise is None else np.asarray(noise, dtype=float)
    if not (len(r) == len(d) == len(n) == N):
        raise ValueError("injected signal length does not match the scenario grid")

    n_p, n_c = ps.n_states, cs.n_states
    Cp = ps.C[0]
    Cc = cd.Cd[0] if n_c else np.zeros(0)
    dc = cd.Dd[0, 0]
    Bp = pd.Bd[:, 0]

    # one combined recursion X+ = A X + B_r (r - n) + B_d d, X = [x_plant; x_ctrl]
    A = np.zeros((n_p + n_c, n_p + n_c))
    A[:n_p, :n_p] = pd.Ad - np.outer(Bp * dc, Cp)
    if n_c:
        A[:n_p, n_p:] = np.outer(Bp, Cc)
        A[n_p:, :n_p] = -np.outer(cd.Bd[:, 0], Cp)
        A[n_p:, n_p:] = cd.Ad
    B_r = np.concatenate([Bp * dc, cd.Bd[:, 0]]) if n_c else Bp * dc
    B_d = np.concatenate([Bp, np.zeros(n_c)])

    drive = np.outer(r - n, B_r) + np.outer(d, B_d)
    X = np.zeros((N, n_p + n_c))
    if cfg.y0 != 0.0:
        # minimum-norm plant state matching the requested initial output
        X[0, :n_p] = Cp * (cfg.y0 / float(Cp @ Cp))

    filled = N - 1
    x = X[0]
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(N - 1):
            x = A @ x + drive[k]
            X[k + 1] = x
            if k % _CHECK_EVERY == 0 and not (np.abs(x).max() < _STATE_LIMIT):
                filled = k + 1
                break

    X = X[:filled + 1]
    y = X[:, :n_p] @ Cp
    bad = ~np.isfinite(y) | (np.abs(y) > DIVERGENCE_LIMIT)
    diverged = filled < N - 1
    if bad.any():
        stop = int(np.argmax(bad))
        X, y = X[:stop + 1], y[:stop + 1]
        diverged = True
    m = len(y)
    e = r[:m] - y - n[:m]
    with np.errstate(over="ignore", invalid="ignore"):
        u = (X[:, n_p:] @ Cc if n_c else 0.0) + dc * e
    return SimTrace(t=t[:m], r=r[:m], y=y, ym=y + n[:m], u=u, d=d[:m],
                    dt=cfg.dt, diverged=diverged)
