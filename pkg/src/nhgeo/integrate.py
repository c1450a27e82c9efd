"""Fixed-step RK4 and adaptive Dormand–Prince 5(4) over flat state vectors.

Both drivers keep every accepted step (time, state, derivative), so the
trajectory can be resampled anywhere by cubic Hermite interpolation.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .errors import IntegrationError, NhgeoError

MIN_STEP = 1e-14

# Dormand–Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4

SAFETY = 0.9
GROW_MIN, GROW_MAX = 0.2, 5.0
_PI_ALPHA, _PI_BETA = 0.7 / 5, 0.4 / 5


@dataclass(frozen=True)
class IntegratorConfig:
    method: str = "rk4"
    dt: float = 1e-3
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    t_end: float = 1.0
    sample_count: int | None = None
    max_steps: int = 10_000_000

    def __post_init__(self):
        if self.method not in ("rk4", "rk45"):
            raise ValueError(f"unknown method {self.method!r}; expected 'rk4' or 'rk45'")
        for name in ("dt", "rel_tol", "abs_tol", "t_end"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")
        if self.sample_count is not None and (int(self.sample_count) != self.sample_count or self.sample_count < 2):
            raise ValueError("sample_count must be an integer >= 2")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class Trajectory:
    """Samples of a flat state vector plus the raw accepted steps.

    ``times``/``ys`` are the requested samples (the raw steps when no
    ``sample_count`` was given).  ``step_t``, ``step_y``, ``step_f`` hold the
    accepted grid used for dense output.
    """

    times: np.ndarray
    ys: np.ndarray
    step_t: np.ndarray
    step_y: np.ndarray
    step_f: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def n_steps(self) -> int:
        return len(self.step_t) - 1

    def at(self, ts) -> np.ndarray:
        """Cubic Hermite dense output at times ``ts`` (inside [t0, t_end])."""
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        t = self.step_t
        if ts.size and (ts.min() < t[0] - 1e-12 * max(1.0, abs(t[0])) or ts.max() > t[-1] + 1e-12 * max(1.0, abs(t[-1]))):
            raise ValueError("requested time outside the integrated interval")
        k = np.clip(np.searchsorted(t, ts, side="right") - 1, 0, len(t) - 2)
        h = (t[k + 1] - t[k])[:, None]
        s = ((ts - t[k])[:, None]) / h
        y0, y1 = self.step_y[k], self.step_y[k + 1]
        f0, f1 = self.step_f[k], self.step_f[k + 1]
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        # h00 = 1 − h01, written so that constant segments are reproduced exactly
        out = y0 + h01 * (y1 - y0) + h10 * h * f0 + h11 * h * f1
        # exact hits return the stored state
        hit = np.isclose(s[:, 0], 0.0, rtol=0, atol=1e-15)
        out[hit] = y0[hit]
        hit1 = np.isclose(s[:, 0], 1.0, rtol=0, atol=1e-15)
        out[hit1] = y1[hit1]
        return out


def _eval(rhs, t, y, last_t):
    try:
        f = np.asarray(rhs(t, y), dtype=float)
    except (NhgeoError, ArithmeticError, ValueError) as exc:
        raise IntegrationError(f"right-hand side failed at t = {t!r}: {exc}", last_t) from exc
    if not np.all(np.isfinite(f)):
        raise IntegrationError(f"non-finite derivative at t = {t!r}", last_t)
    return f


def _rk4(rhs, y0, cfg: IntegratorConfig):
    n_steps = max(1, math.ceil(cfg.t_end / cfg.dt - 1e-9))
    if n_steps > cfg.max_steps:
        raise IntegrationError(f"{n_steps} steps exceed max_steps = {cfg.max_steps}", 0.0)
    h = cfg.t_end / n_steps
    ts = np.arange(n_steps + 1) * h
    ts[-1] = cfg.t_end
    ys = np.empty((n_steps + 1, y0.size))
    fs = np.empty_like(ys)
    y = y0.copy()
    ys[0] = y
    t = 0.0
    k1 = _eval(rhs, t, y, t)
    fs[0] = k1
    for i in range(n_steps):
        k2 = _eval(rhs, t + 0.5 * h, y + 0.5 * h * k1, t)
        k3 = _eval(rhs, t + 0.5 * h, y + 0.5 * h * k2, t)
        k4 = _eval(rhs, t + h, y + h * k3, t)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise IntegrationError("non-finite state", t)
        t = ts[i + 1]
        ys[i + 1] = y
        k1 = _eval(rhs, t, y, ts[i])
        fs[i + 1] = k1
    return ts, ys, fs, {"steps": n_steps, "rejected": 0, "h": h}


def _initial_step(rhs, y0, f0, cfg):
    scale = cfg.abs_tol + cfg.rel_tol * np.abs(y0)
    d0 = np.sqrt(np.mean((y0 / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, cfg.t_end)
    f1 = _eval(rhs, h0, y0 + h0 * f0, 0.0)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, cfg.t_end)


def _rk45(rhs, y0, cfg: IntegratorConfig):
    t = 0.0
    y = y0.copy()
    f = _eval(rhs, t, y, t)
    h = _initial_step(rhs, y, f, cfg)
    ts, ys, fs = [t], [y.copy()], [f.copy()]
    err_prev = 1.0
    rejected = 0
    k = np.empty((7, y.size))
    while t < cfg.t_end:
        if len(ts) > cfg.max_steps:
            raise IntegrationError(f"exceeded max_steps = {cfg.max_steps}", t)
        if h < MIN_STEP:
            raise IntegrationError(f"step size underflow (h = {h:.3e})", t)
        last = False
        if t + h >= cfg.t_end * (1 - 1e-14):
            h = cfg.t_end - t
            last = True
        k[0] = f
        for s in range(1, 7):
            ys_ = y + h * np.dot(_A[s], k[:s])
            k[s] = _eval(rhs, t + _C[s] * h, ys_, t)
        y_new = ys_  # stage 7 argument is the 5th-order solution (FSAL)
        err_vec = h * np.dot(_E, k)
        scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(y), np.abs(y_new))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        if not math.isfinite(err):
            raise IntegrationError("non-finite error estimate", t)
        if err <= 1.0:
            t = cfg.t_end if last else t + h
            y = y_new
            f = k[6].copy()
            ts.append(t)
            ys.append(y.copy())
            fs.append(f)
            e = max(err, 1e-10)
            fac = SAFETY * e ** (-_PI_ALPHA) * err_prev**_PI_BETA
            h *= min(GROW_MAX, max(GROW_MIN, fac))
            err_prev = e
        else:
            rejected += 1
            fac = SAFETY * err ** (-1 / 5)
            h *= min(1.0, max(GROW_MIN, fac))
    return np.array(ts), np.array(ys), np.array(fs), {"steps": len(ts) - 1, "rejected": rejected}


def integrate(rhs: Callable[[float, np.ndarray], np.ndarray], y0, cfg: IntegratorConfig) -> Trajectory:
    """Integrate ``y' = rhs(t, y)`` from t = 0 to ``cfg.t_end``."""
    y0 = np.asarray(y0, dtype=float).copy()
    if y0.ndim != 1:
        raise ValueError("y0 must be a flat vector")
    if not np.all(np.isfinite(y0)):
        raise IntegrationError("non-finite initial state", 0.0)
    driver = _rk4 if cfg.method == "rk4" else _rk45
    st, sy, sf, info = driver(rhs, y0, cfg)
    meta = {"method": cfg.method, "config_hash": cfg.digest(), **info}
    if cfg.sample_count is None:
        times, ys = st, sy
    else:
        times = np.linspace(0.0, cfg.t_end, int(cfg.sample_count))
        traj = Trajectory(st, sy, st, sy, sf)
        ys = traj.at(times)
    return Trajectory(times, ys, st, sy, sf, meta)
