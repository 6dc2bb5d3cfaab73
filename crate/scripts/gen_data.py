"""Regenerates the bundled parameter maps and example weather traces.

Output goes to crates/core/data/. The weather traces are synthetic: a
seasonal + diurnal ambient model with AR(1) noise and a clear-sky irradiance
model with daily cloudiness. They are stand-ins for measured traces; replace
them with real CSVs (time_s, ambient_C, irradiance_Wm2) when available.
"""
import json
import math
import os

import numpy as np

ROOT = os.path.join(os.path.dirname(__file__), "..", "crates", "core", "data")


def r(v, n=5):
    return round(float(v), n)


def cell():
    soc = [0.0, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.98, 1.0]
    ocv25 = [2.50, 2.90, 3.05, 3.18, 3.24, 3.26, 3.275, 3.285, 3.295, 3.31, 3.33, 3.35, 3.38, 3.45, 3.55]
    temps = [-30.0, -10.0, 0.0, 10.0, 25.0, 40.0, 60.0]
    # Mild temperature dependence of OCV (mV/K), stronger resistance rise in the cold.
    ocv = [[r(v + 0.0002 * (t - 25.0)) for t in temps] for v in ocv25]
    def r0(s, t):
        base = 0.018
        cold = math.exp(0.035 * (25.0 - t)) if t < 25.0 else 1.0 - 0.003 * (t - 25.0)
        low_soc = 1.0 + 0.8 * max(0.0, 0.2 - s) / 0.2
        return base * cold * low_soc
    res = [[r(r0(s, t), 6) for t in temps] for s in soc]
    return {
        "name": "lfp-3v2-5ah",
        "nominal_voltage": 3.2,
        "capacity_ah": 5.0,
        "max_voltage": 3.65,
        "ocv": {"x": soc, "y": temps, "z": ocv},
        "r0": {"x": soc, "y": temps, "z": res},
    }


def hvac():
    dts = [0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 80.0]
    cop = [4.5, 4.1, 3.6, 3.2, 2.8, 2.5, 2.2, 1.8]
    return {
        "mass_flow": 0.6,
        "supply_temp_heat": 40.0,
        "supply_temp_cool": 10.0,
        "cp_air": 1005.0,
        "cop": {"x": dts, "y": cop},
        "shr": 0.8,
        "pressure_drop": 250.0,
        "fan_eff": 0.7,
        "air_density": 1.2,
        "mode_threshold": 20.0,
    }


def house():
    return {
        "ceiling_height_m": 2.5,
        "air_density": 1.2,
        "cv_air": 718.0,
        "effective_mass_factor": 8.0,
        "ua_per_floor_m2": 0.8,
        "hvac_mass_flow_per_1000_ft2": 0.3,
    }


def pv():
    temps = [-30.0, -10.0, 0.0, 10.0, 20.0, 30.0, 40.0, 50.0]
    irr = [0.0, 200.0, 400.0, 600.0, 800.0, 1000.0, 1400.0]
    def eta(t, g):
        t_cell = t + 0.03 * g
        return max(0.0, 0.18 * (1.0 - 0.004 * (t_cell - 25.0)))
    return {"efficiency": {"x": temps, "y": irr, "z": [[r(eta(t, g)) for g in irr] for t in temps]}}


CITIES = {
    # mean, seasonal amplitude, diurnal half-swing, latitude, cloudiness
    "columbus": (11.5, 12.5, 5.0, 40.0, 0.35),
    "los_angeles": (18.5, 4.5, 5.0, 34.0, 0.15),
    "san_antonio": (21.0, 8.5, 6.0, 29.4, 0.25),
    "boston": (10.5, 12.5, 4.5, 42.4, 0.35),
}


def weather(name, mean, amp, diurnal, lat, cloud, seed):
    rng = np.random.default_rng(seed)
    hours = 365 * 24
    rows = []
    noise = 0.0
    day_cloud = 0.0
    for h in range(hours + 1):
        d = h / 24.0
        hod = h % 24
        if hod == 0:
            day_cloud = float(np.clip(rng.normal(cloud, 0.2), 0.0, 0.9))
        noise = 0.95 * noise + rng.normal(0.0, 0.45)
        seasonal = -amp * math.cos(2 * math.pi * (d - 20.0) / 365.0)
        daily = diurnal * math.cos(2 * math.pi * (hod - 15.0) / 24.0)
        amb = mean + seasonal + daily + noise
        decl = 23.45 * math.sin(2 * math.pi * (284 + d) / 365.0)
        ha = 15.0 * (hod - 12.0)
        sin_el = (math.sin(math.radians(lat)) * math.sin(math.radians(decl))
                  + math.cos(math.radians(lat)) * math.cos(math.radians(decl)) * math.cos(math.radians(ha)))
        g = 1000.0 * max(0.0, sin_el) ** 1.15 * (1.0 - 0.75 * day_cloud)
        rows.append((h * 3600, r(amb, 2), r(max(g, 0.0), 1)))
    path = os.path.join(ROOT, "weather", f"{name}.csv")
    with open(path, "w") as f:
        f.write("time_s,ambient_C,irradiance_Wm2\n")
        for t, a, g in rows:
            f.write(f"{t},{a},{g}\n")


def main():
    os.makedirs(os.path.join(ROOT, "weather"), exist_ok=True)
    for fname, obj in [("cell.json", cell()), ("hvac.json", hvac()), ("house.json", house()), ("pv.json", pv())]:
        with open(os.path.join(ROOT, fname), "w") as f:
            json.dump(obj, f, indent=1)
            f.write("\n")
    for i, (name, p) in enumerate(CITIES.items()):
        weather(name, *p, seed=100 + i)


if __name__ == "__main__":
    main()
