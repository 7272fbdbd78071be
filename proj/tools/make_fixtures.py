#!/usr/bin/env python3
"""Regenerates the bundled network fixtures under data/.

ieee39.json is built from the public New England 39-bus data shipped with
pypower. Loads follow the original 19-load data set (the later revision adds
small loads at buses 1 and 9, which are dropped here). Zero-sequence line
impedance is taken as three times the positive-sequence value.

Machine parameters are typical round-rotor values, not data from any
particular study; inertia constants follow the usual 39-bus data set on a
1000 MVA machine base.
"""

import json
import pathlib

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"

TYPICAL = {
    "rs": 0.003, "xd": 1.8, "xq": 1.7, "xd_p": 0.3, "xq_p": 0.55,
    "xd_pp": 0.25, "xq_pp": 0.25, "xl": 0.15,
    "tdo_p": 7.0, "tqo_p": 0.75, "tdo_pp": 0.035, "tqo_pp": 0.05,
}

IEEE39_INERTIA = {39: 50.0, 31: 3.03, 32: 3.58, 33: 2.86, 34: 2.6,
                  35: 3.48, 36: 2.64, 37: 2.43, 38: 3.45, 30: 4.2}
IEEE39_DAMPING = 4.0
IEEE39_DROPPED_LOADS = {1, 9}


def write(name, doc):
    path = DATA / name
    path.write_text(json.dumps(doc, indent=1) + "\n")
    print("wrote", path)


def ieee39():
    from pypower.case39 import case39

    case = case39()
    base = float(case["baseMVA"])
    buses, loads, branches, transformers, machines = [], [], [], [], []
    for row in case["bus"]:
        bid, pd, qd, kv = int(row[0]), float(row[2]), float(row[3]), float(row[9])
        buses.append({"id": str(bid), "base_kv": kv})
        if (pd or qd) and bid not in IEEE39_DROPPED_LOADS:
            loads.append({"id": f"L{bid}", "bus": str(bid), "p_mw": pd, "q_mvar": qd,
                          "zip": {"z": 1.0, "i": 0.0, "p": 0.0}})
    for k, row in enumerate(case["branch"]):
        f, t = str(int(row[0])), str(int(row[1]))
        r, x, b, ratio = float(row[2]), float(row[3]), float(row[4]), float(row[8])
        if ratio != 0.0:
            transformers.append({"id": f"T{f}-{t}", "from": f, "to": t, "connection": "wye-g/wye-g",
                                 "r": r, "x": x, "tap": ratio})
        else:
            branches.append({"id": f"L{f}-{t}", "from": f, "to": t,
                             "z1": [r, x], "z0": [3 * r, 3 * x], "b1": b, "b0": 0.6 * b})
    for row in case["gen"]:
        bid = int(row[0])
        params = dict(TYPICAL, h=IEEE39_INERTIA[bid], d=IEEE39_DAMPING)
        machines.append({"id": f"G{bid}", "bus": str(bid), "mva_base": 1000.0, "p_mw": float(row[1]),
                         "v_pu": float(row[5]), "slack": bid == 31, "params": params})
    write("ieee39.json", {
        "name": "IEEE 39-bus (New England)", "mva_base": base, "frequency_hz": 60,
        "buses": buses, "branches": branches, "transformers": transformers, "loads": loads,
        "switches": [], "sources": [], "injections": [], "machines": machines,
    })


def smib():
    write("smib.json", {
        "name": "single machine against an infinite bus",
        "mva_base": 100.0,
        "buses": [
            {"id": "INF", "base_kv": 230.0},
            {"id": "HV", "base_kv": 230.0},
            {"id": "GEN", "base_kv": 13.8},
        ],
        "sources": [{"bus": "INF", "v_pu": 1.0, "angle_deg": 0.0}],
        "transformers": [
            {"id": "GSU", "from": "GEN", "to": "HV", "connection": "delta/wye-g", "r": 0.002, "x": 0.1},
        ],
        "branches": [
            {"id": "LINE1", "from": "HV", "to": "INF", "z1": [0.01, 0.8], "z0": [0.03, 2.4], "b1": 0.05},
            {"id": "LINE2", "from": "HV", "to": "INF", "z1": [0.01, 0.8], "z0": [0.03, 2.4], "b1": 0.05},
        ],
        "loads": [
            {"id": "LHV", "bus": "HV", "p_mw": 30.0, "q_mvar": 10.0, "zip": {"z": 1.0, "i": 0.0, "p": 0.0}},
        ],
        "machines": [
            {"id": "G1", "bus": "GEN", "mva_base": 100.0, "p_mw": 80.0, "v_pu": 1.0,
             "params": dict(TYPICAL, h=3.5, d=2.0)},
        ],
    })


def two_feeder_substation():
    """Transmission-fed substation with two distribution feeders.

    A bus-section fault on X60 is cleared by breakers B1 and B2, which also
    drops feeder 2 (fed from F60). Closing the normally-open tie B3 restores
    feeder 2 from M1 with the faulted section left isolated.
    """
    # per-mile phase impedance of a typical four-wire overhead line, ohm,
    # given here in sequence form so the pre-disturbance state is balanced
    feeder_z1 = [0.306, 0.627]
    feeder_z0 = [0.771, 1.964]
    miles = 2.0
    buses = [
        ("SUB230", 230.0), ("N115", 115.0), ("G115", 115.0), ("GEN", 13.8),
        ("M1", 60.0), ("X60", 60.0), ("F60", 60.0),
        ("FDR1_12", 12.47), ("FDR1_END", 12.47), ("FDR2_12", 12.47), ("FDR2_END", 12.47),
    ]
    doc = {
        "name": "substation with two distribution feeders",
        "mva_base": 10.0,
        "buses": [{"id": b, "base_kv": kv} for b, kv in buses],
        "sources": [{"bus": "SUB230", "v_pu": 1.0, "angle_deg": 0.0}],
        "transformers": [
            {"id": "TX1", "from": "SUB230", "to": "N115", "connection": "wye-g/wye-g", "r": 0.0005, "x": 0.012},
            {"id": "GSU", "from": "GEN", "to": "G115", "connection": "delta/wye-g", "r": 0.001, "x": 0.04},
            {"id": "TX2", "from": "N115", "to": "M1", "connection": "wye-g/wye-g", "r": 0.002, "x": 0.05},
            {"id": "TR1", "from": "M1", "to": "FDR1_12", "connection": "delta/wye-g", "r": 0.006, "x": 0.08},
            {"id": "TR2", "from": "F60", "to": "FDR2_12", "connection": "delta/wye-g", "r": 0.006, "x": 0.08},
        ],
        "branches": [
            {"id": "TIE", "from": "G115", "to": "N115", "z1": [0.002, 0.02], "z0": [0.006, 0.06], "b1": 0.0005},
            {"id": "FDR1", "from": "FDR1_12", "to": "FDR1_END", "units": "ohm",
             "z1": [feeder_z1[0] * miles, feeder_z1[1] * miles],
             "z0": [feeder_z0[0] * miles, feeder_z0[1] * miles]},
            {"id": "FDR2", "from": "FDR2_12", "to": "FDR2_END", "units": "ohm",
             "z1": [feeder_z1[0] * miles, feeder_z1[1] * miles],
             "z0": [feeder_z0[0] * miles, feeder_z0[1] * miles]},
        ],
        "switches": [
            {"id": "B1", "from": "M1", "to": "X60", "status": "closed"},
            {"id": "B2", "from": "X60", "to": "F60", "status": "closed"},
            {"id": "B3", "from": "M1", "to": "F60", "status": "open", "normally_open": True},
        ],
        "loads": [
            {"id": "LN115", "bus": "N115", "p_mw": 6.0, "q_mvar": 2.0, "zip": {"z": 1.0}},
            {"id": "S1", "bus": "FDR1_END", "p_mw": 2.4, "q_mvar": 0.8, "zip": {"z": 0.5, "i": 0.2, "p": 0.3}},
            {"id": "S2", "bus": "FDR2_END", "p_mw": 1.8, "q_mvar": 0.6, "zip": {"z": 0.5, "i": 0.2, "p": 0.3}},
        ],
        "injections": [
            {"id": "TIE_FLOW", "bus": "N115", "p_mw": 3.0, "q_mvar": 0.5},
        ],
        "machines": [
            {"id": "G1", "bus": "GEN", "mva_base": 12.0, "p_mw": 8.0, "v_pu": 1.02,
             "params": dict(TYPICAL, h=3.0, d=12.0, tdo_p=5.0)},
        ],
    }
    # single-phase service transformers, one per phase, on each feeder end
    for feeder in ("FDR1", "FDR2"):
        for ph in "ABC":
            bus = f"{feeder}_SVC_{ph}"
            doc["buses"].append({"id": bus, "base_kv": 0.208, "phases": ph})
            doc["transformers"].append({"id": f"{feeder}_XF_{ph}", "from": f"{feeder}_END", "to": bus,
                                        "connection": "single-phase", "phase": ph, "r": 0.1, "x": 0.5})
            doc["loads"].append({"id": f"{feeder}_SVC_{ph}", "bus": bus, "phases": ph,
                                 "p_mw": 0.05, "q_mvar": 0.015, "zip": {"z": 1.0}})
    write("two_feeder_substation.json", doc)


if __name__ == "__main__":
    DATA.mkdir(exist_ok=True)
    ieee39()
    smib()
    two_feeder_substation()
