"""Parameter estimation from bench data.

Propulsion coefficients come from dynamometer sweeps (quadratic thrust and
moment laws, affine throttle-to-speed map), the motor time constant from a
step response, and the body inertias from bifilar-pendulum periods, with
the oscillation period extracted either from the time trace or from a
periodogram peak.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DetectionError, DomainError, FitError

# First-order step response level at one time constant (1 - 1/e).
STEP_RESPONSE_LEVEL = 1.0 - math.exp(-1.0)


@dataclass(frozen=True)
class FitResult:
    coefficients: dict[str, float]
    r_squared: float
    residual_norm: float


def _r_squared(y, residuals) -> float:
    ss_res = float(np.sum(residuals ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else 0.0
    return 1.0 - ss_res / ss_tot


def fit_thrust_moment(speeds, loads, name: str = "c_t") -> FitResult:
    """Least squares for the no-intercept quadratic law load = c * speed^2."""
    w = np.asarray(speeds, dtype=float)
    y = np.asarray(loads, dtype=float)
    if w.size < 2 or np.all(w == 0.0):
        raise FitError("need at least two samples with nonzero speed")
    x = w ** 2
    c = float(np.dot(x, y) / np.dot(x, x))
    res = y - c * x
    return FitResult({name: c}, _r_squared(y, res), float(np.linalg.norm(res)))


def fit_speed_map(sigma, speeds, exclude_low: float | None = 0.2,
                  exclude_high: float | None = 0.95) -> FitResult:
    """Affine throttle-to-speed fit, optionally excluding the dead zone.

    The low-throttle dead zone and the near-full-throttle saturation bow the
    curve; excluding them (defaults 0.2 and 0.95) fits the linear region.
    """
    s = np.asarray(sigma, dtype=float)
    w = np.asarray(speeds, dtype=float)
    keep = np.ones(s.shape, dtype=bool)
    if exclude_low is not None:
        keep &= s >= exclude_low
    if exclude_high is not None:
        keep &= s <= exclude_high
    s, w = s[keep], w[keep]
    if np.unique(s).size < 2:
        raise FitError("need at least two distinct throttle values")
    a = np.column_stack([s, np.ones_like(s)])
    coef, *_ = np.linalg.lstsq(a, w, rcond=None)
    res = w - a @ coef
    return FitResult({"c_r": float(coef[0]), "omega_b": float(coef[1])},
                     _r_squared(w, res), float(np.linalg.norm(res)))


def fit_time_constant(t, speeds) -> float:
    """Time constant from a step response: first crossing of the 63.2% level.

    Initial level is the first sample, final level the mean of the last
    tenth; the crossing is linearly interpolated between samples.
    """
    t = np.asarray(t, dtype=float)
    w = np.asarray(speeds, dtype=float)
    if t.size < 3:
        raise FitError("need at least three samples")
    w0 = w[0]
    w_inf = float(np.mean(w[-max(1, w.size // 10):]))
    if w_inf == w0:
        raise FitError("no step present")
    level = w0 + STEP_RESPONSE_LEVEL * (w_inf - w0)
    rising = w_inf > w0
    for i in range(1, w.size):
        crossed = w[i] >= level if rising else w[i] <= level
        if crossed:
            if w[i] == w[i - 1]:
                return float(t[i])
            frac = (level - w[i - 1]) / (w[i] - w[i - 1])
            return float(t[i - 1] + frac * (t[i] - t[i - 1]))
    raise FitError("response never crosses the 63.2% level")


def bifilar_inertia(m: float, g: float, filament_sep: float,
                    filament_len: float, t_pend: float) -> float:
    """Moment of inertia from a bifilar pendulum period.

    J = m g d^2 T^2 / (16 pi^2 L) with d the filament separation and L the
    filament length.
    """
    for name, v in (("m", m), ("g", g), ("filament_sep", filament_sep),
                    ("filament_len", filament_len), ("t_pend", t_pend)):
        if v <= 0.0:
            raise DomainError(f"{name} must be > 0")
    return (m * g * filament_sep ** 2 * t_pend ** 2
            / (16.0 * math.pi ** 2 * filament_len))


def periodogram_peak(series, dt: float, window: str = "hann") -> float:
    """Dominant oscillation period from the power spectrum.

    The peak must rise above the rest of the spectrum (mean plus three
    standard deviations, with the peak's leakage neighbourhood excluded)
    and concentrate a minimum share of total power; a flat spectrum fails
    both and raises. The peak location is refined by quadratic
    interpolation over the adjacent bins.
    """
    y = np.asarray(series, dtype=float)
    if y.size < 16:
        raise DomainError("need at least 16 samples")
    if dt <= 0.0:
        raise DomainError("dt must be > 0")
    y = y - np.mean(y)
    if window == "hann":
        y = y * np.hanning(y.size)
    elif window != "rectangular":
        raise DomainError(f"unknown window {window!r}")
    power = np.abs(np.fft.rfft(y)) ** 2
    power[0] = 0.0
    k = int(np.argmax(power))
    rest = np.delete(power, range(max(0, k - 2), min(power.size, k + 3)))
    neighborhood = power[max(0, k - 2):k + 3].sum()
    total = power.sum()
    if (total <= 0.0
            or power[k] <= np.mean(rest) + 3.0 * np.std(rest)
            or neighborhood < 0.05 * total):
        raise DetectionError("no spectral peak above the noise floor")
    # quadratic refinement on the log-power of the three bins around the
    # peak; skipped when the neighbours are pure leakage-free noise floor
    if (1 <= k < power.size - 1
            and power[k - 1] > 1e-9 * power[k]
            and power[k + 1] > 1e-9 * power[k]):
        la, lb, lc = (math.log(power[k - 1]), math.log(power[k]),
                      math.log(power[k + 1]))
        denom = la - 2.0 * lb + lc
        delta = 0.5 * (la - lc) / denom if denom != 0.0 else 0.0
        delta = min(max(delta, -0.5), 0.5)
    else:
        delta = 0.0
    freq = (k + delta) / (y.size * dt)
    if freq <= 0.0:
        raise DetectionError("refined peak at zero frequency")
    return 1.0 / freq


# --------------------------------------------------------------------------
# Bench-data CSV readers and the parameter fragment writer
# --------------------------------------------------------------------------

def read_columns(path, names) -> list[np.ndarray]:
    """Read the named columns from a headered CSV."""
    with open(path) as fh:
        header = [h.strip() for h in fh.readline().split(",")]
        try:
            idx = [header.index(n) for n in names]
        except ValueError as exc:
            raise FitError(f"{path}: expected columns {names}, "
                           f"found {header}") from exc
        rows = [[float(p) for p in line.split(",")]
                for line in fh if line.strip()]
    data = np.asarray(rows, dtype=float)
    if data.size == 0:
        raise FitError(f"{path}: no data rows")
    return [data[:, i] for i in idx]


def params_fragment(coefficients: dict[str, float]) -> str:
    """Vehicle-parameter fragment mergeable into a scenario config."""
    lines = ["[vehicle]"]
    for key, value in coefficients.items():
        lines.append(f"{key} = {value:.9g}")
    return "\n".join(lines) + "\n"
