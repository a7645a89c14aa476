"""Scenario and preset configuration files.

INI-style key/value sections (stdlib configparser). All keys are optional;
anything omitted takes the shipped defaults. Schema:

    [vehicle]      c_t, c_m, c_r, omega_b, t_m, d, m, j_xx, j_yy, j_zz, g, t_s
    [sim]          duration, settle, seed, plant_substeps
    [controller]   kind = pd | pid | lqr | lqri | empc
                   gain_preset = experiment | simulation     (PD/PID tables)
                   empc_resolution = <nodes per grid axis>
    [trajectory]   type = circle | step
                   circle: radius, incline_deg, speed, accel_phase, lead_in,
                           laps, center = x,y,z, heading = tangent | fixed
                   step:   start = x,y,z, step_pos = x,y,z, step_yaw,
                           step_time
    [sensors]      mocap_hz, baro_hz, rangefinder_hz, noise = true|false,
                   accel_bias = x,y,z, gyro_z_bias,
                   dropouts = t0:t1[, t0:t1 ...],
                   *_std overrides (accel_std = x,y,z, gyro_std, ...)
    [estimator]    preset = used | measured, scale_accel_by_mass,
                   enabled = true|false
    [disturbance]  force = x,y,z, t_start, t_end

Preset files ship inside the package; additional directories are searched
via the QUADFC_PRESET_PATH environment variable (colon separated).
"""

from __future__ import annotations

import configparser
import math
import os
from importlib import resources

from .errors import ConfigError
from .guidance import CircleScenario, StepScenario
from .sim import DisturbanceConfig, SensorConfig, SimScenario
from .vehicle import VehicleParams

PRESET_PATH_ENV = "QUADFC_PRESET_PATH"


def preset_dirs() -> list[str]:
    dirs = []
    env = os.environ.get(PRESET_PATH_ENV, "")
    dirs.extend(p for p in env.split(":") if p)
    dirs.append(str(resources.files("quadfc") / "presets"))
    return dirs


def list_presets() -> list[str]:
    names = []
    for d in preset_dirs():
        if os.path.isdir(d):
            names.extend(sorted(f for f in os.listdir(d) if f.endswith(".cfg")))
    return names


def resolve_config_path(name: str) -> str:
    """A literal path, or a preset name searched on the preset path."""
    if os.path.exists(name):
        return name
    candidates = [name] if name.endswith(".cfg") else [name + ".cfg", name]
    for d in preset_dirs():
        for c in candidates:
            p = os.path.join(d, c)
            if os.path.exists(p):
                return p
    raise ConfigError(f"config {name!r} not found (searched {preset_dirs()})")


def _floats(raw: str, n: int | None = None):
    vals = tuple(float(v) for v in raw.replace(";", ",").split(","))
    if n is not None and len(vals) != n:
        raise ConfigError(f"expected {n} comma-separated values, got {raw!r}")
    return vals


def _windows(raw: str):
    out = []
    for part in raw.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            t0, t1 = part.split(":")
            out.append((float(t0), float(t1)))
        except ValueError as exc:
            raise ConfigError(f"bad dropout window {part!r} "
                              "(expected t0:t1)") from exc
    return tuple(out)


def load_scenario(path_or_name: str) -> SimScenario:
    path = resolve_config_path(path_or_name)
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        read = cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not read:
        raise ConfigError(f"cannot read config {path}")
    try:
        return _scenario_from(cp)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _scenario_from(cp: configparser.ConfigParser) -> SimScenario:
    veh_kwargs = {}
    if cp.has_section("vehicle"):
        for key, raw in cp.items("vehicle"):
            veh_kwargs[key] = float(raw)
    vehicle = VehicleParams(**veh_kwargs)

    traj = _trajectory_from(cp)

    sens_kwargs = {}
    if cp.has_section("sensors"):
        s = cp["sensors"]
        for key in ("mocap_hz", "baro_hz", "rangefinder_hz", "gyro_std",
                    "attitude_std", "mocap_pos_std", "mocap_yaw_std",
                    "baro_std", "rangefinder_std", "gyro_z_bias"):
            if key in s:
                sens_kwargs[key] = float(s[key])
        if "noise" in s:
            sens_kwargs["noise"] = s.getboolean("noise")
        if "accel_bias" in s:
            sens_kwargs["accel_bias"] = _floats(s["accel_bias"], 3)
        if "accel_std" in s:
            sens_kwargs["accel_std"] = _floats(s["accel_std"], 3)
        if "dropouts" in s:
            sens_kwargs["dropouts"] = _windows(s["dropouts"])
    sensors = SensorConfig(**sens_kwargs)

    dist = DisturbanceConfig()
    if cp.has_section("disturbance"):
        d = cp["disturbance"]
        dist = DisturbanceConfig(
            force=_floats(d.get("force", "0,0,0"), 3),
            t_start=float(d.get("t_start", 0.0)),
            t_end=float(d.get("t_end", math.inf)),
        )

    scn = SimScenario(vehicle=vehicle, trajectory=traj, sensors=sensors,
                      disturbance=dist)
    if cp.has_section("sim"):
        s = cp["sim"]
        if "duration" in s:
            scn.duration = float(s["duration"])
        if "settle" in s:
            scn.settle = float(s["settle"])
        if "seed" in s:
            scn.seed = int(s["seed"])
        if "plant_substeps" in s:
            scn.plant_substeps = int(s["plant_substeps"])
    if cp.has_section("controller"):
        c = cp["controller"]
        scn.controller = c.get("kind", "lqr").strip()
        scn.gain_preset = c.get("gain_preset", "experiment").strip()
        if "empc_resolution" in c:
            scn.empc_resolution = int(c["empc_resolution"])
    if cp.has_section("estimator"):
        e = cp["estimator"]
        scn.estimator_preset = e.get("preset", "used").strip()
        if "scale_accel_by_mass" in e:
            scn.scale_accel_by_mass = e.getboolean("scale_accel_by_mass")
        if "enabled" in e:
            scn.use_estimator = e.getboolean("enabled")
    return scn


def _trajectory_from(cp: configparser.ConfigParser):
    if not cp.has_section("trajectory"):
        return CircleScenario()
    t = cp["trajectory"]
    kind = t.get("type", "circle").strip()
    if kind == "circle":
        kwargs = {}
        if "radius" in t:
            kwargs["radius"] = float(t["radius"])
        if "incline_deg" in t:
            kwargs["incline"] = math.radians(float(t["incline_deg"]))
        if "speed" in t:
            kwargs["tangential_speed"] = float(t["speed"])
        if "accel_phase" in t:
            kwargs["accel_phase"] = float(t["accel_phase"])
        if "lead_in" in t:
            kwargs["lead_in"] = float(t["lead_in"])
        if "laps" in t:
            kwargs["laps"] = float(t["laps"])
        if "center" in t:
            kwargs["center"] = _floats(t["center"], 3)
        if "heading" in t:
            kwargs["heading_mode"] = t["heading"].strip()
        if "fixed_heading" in t:
            kwargs["fixed_heading"] = float(t["fixed_heading"])
        return CircleScenario(**kwargs)
    if kind == "step":
        kwargs = {}
        if "start" in t:
            kwargs["start"] = _floats(t["start"], 3)
        if "step_pos" in t:
            kwargs["step_pos"] = _floats(t["step_pos"], 3)
        if "step_yaw" in t:
            kwargs["step_yaw"] = float(t["step_yaw"])
        if "step_time" in t:
            kwargs["step_time"] = float(t["step_time"])
        return StepScenario(**kwargs)
    raise ConfigError(f"unknown trajectory type {kind!r}")
