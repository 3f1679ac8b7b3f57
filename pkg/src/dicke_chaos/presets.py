"""Bundled run configs for each reproduced figure."""
from __future__ import annotations

import math

from .cli import RunConfig

_BATH = {"gamma": 0.01, "kappa": 0.01, "temperature": 1.0}
_AUTO7 = {"n_atoms": 7, "fock_dim": "auto", "truncation_tol": 1e-6, "fock_cap": 80}
_AUTO25 = {"n_atoms": 25, "fock_dim": "auto", "truncation_tol": 1e-6, "fock_cap": 80}
_GD = {"variant": "generalized_dicke", "omega_a": 2.0, "omega_c": 2.0, "lam": 1.5,
       "lam_prime": 1.8}
_FD = {"variant": "floquet_dicke", "omega_a": 2.0, "omega_c": 2.0, "lam0": 0.65,
       "delta_lam": 0.75, "drive_freq": math.pi}


def _dicke(lam):
    return {"variant": "nqubit_dicke", "omega_a": 2.0, "omega_c": 2.0, "lam": lam}


def _tc(lam):
    return {"variant": "tavis_cummings", "omega_a": 2.0, "omega_c": 2.0, "lam": lam}


def _grid(t_max, per_unit=20):
    return {"t_max": t_max, "n_points": int(per_unit * t_max) + 1}


_RAW = {
    "fig1": [("", {"task": "phase-diagram", "model": {"omega_a": 1.0, "omega_c": 1.0},
                   "bath": {"kappa": 1.0, "gamma": 0.0}, "grid": {"stop": 2.0, "num": 201},
                   "options": {"s_z": -0.5}})],
    "fig2": [("", {"task": "ground-scan", "model": _dicke(0.0),
                   "geometry": {"n_atoms": 20, "fock_dim": "auto", "truncation_tol": 1e-8,
                                "fock_cap": 80},
                   "grid": {"start": 0.0, "stop": 2.0, "num": 201}})],
    "fig3": [("", {"task": "ground-scan", "model": _tc(0.0),
                   "geometry": {"n_atoms": 7, "fock_dim": 40},
                   "grid": {"start": 0.0, "stop": 3.0, "num": 301}})],
    "fig4": [("", {"task": "ground-scan", "model": _FD,
                   "geometry": {"n_atoms": 7, "fock_dim": 40},
                   "grid": {"axis": "time", "start": 0.0, "stop": 6.0, "num": 301}})],
    "fig5": [("", {"task": "otoc", "model": _GD, "bath": _BATH, "geometry": _AUTO7,
                   "grid": _grid(10)})],
    "fig6": [("", {"task": "lyapunov", "model": _GD, "bath": _BATH, "geometry": _AUTO7,
                   "grid": _grid(10), "options": {"window": [1.5, 3.5],
                                                   "fit_mode": "squared"}})],
    "fig7": [("", {"task": "skew-relations", "model": _GD, "bath": _BATH, "geometry": _AUTO7,
                   "grid": _grid(10)})],
    "fig8": [("", {"task": "alpha", "model": _GD, "bath": _BATH, "geometry": _AUTO7,
                   "grid": _grid(10)})],
    "fig9": [
        ("", {"task": "long-time", "model": _dicke(1.2), "bath": _BATH, "geometry": _AUTO25,
              "grid": _grid(20, 10),
              "sweep": {"parameter": "bath.kappa", "values": [0.01, 0.05, 0.1, 0.5]}}),
        # strong damping settles slowly; a longer run shows the decay to zero
        ("kappa_0.5_long", {"task": "long-time", "model": _dicke(1.2), "geometry": _AUTO25,
                            "bath": dict(_BATH, kappa=0.5), "grid": _grid(60, 10)}),
    ],
    "fig10": [("", {"task": "lyapunov", "model": _dicke(1.2), "bath": _BATH,
                    "geometry": _AUTO25, "grid": _grid(10),
                    "options": {"window": [2.0, 4.5], "fit_mode": "squared"}})],
    "fig11": [("", {"task": "lyapunov", "model": _tc(4.5), "bath": _BATH, "geometry": _AUTO7,
                    "grid": _grid(10), "options": {"fit_mode": "squared"},
                    "sweep": {"parameter": "model.lam", "values": [1.5, 2.5, 3.5, 4.5]}})],
    "fig12": [
        ("a", {"task": "long-time", "bath": _BATH, "geometry": _AUTO7, "grid": _grid(40, 10),
               "model": dict(_GD, lam_prime=1.2)}),
        ("b", {"task": "long-time", "bath": _BATH, "geometry": _AUTO7, "grid": _grid(40, 10),
               "model": _dicke(1.5)}),
        ("c", {"task": "long-time", "bath": _BATH, "geometry": _AUTO7, "grid": _grid(40, 10),
               "model": _tc(4.5)}),
        ("d", {"task": "long-time", "bath": _BATH, "geometry": _AUTO7, "grid": _grid(40, 10),
               "model": _FD}),
    ],
    "fig13": [
        ("a", {"task": "otoc", "model": _dicke(1.5), "bath": _BATH,
               "geometry": {"n_atoms": 4, "spin_mode": "full_sectors", "fock_dim": "auto",
                            "truncation_tol": 1e-6, "fock_cap": 80},
               "grid": _grid(10), "sweep": {"parameter": "model.lam",
                                            "values": [0.5, 1.0, 1.15, 1.5]}}),
        ("b", {"task": "otoc", "model": _dicke(1.5), "bath": _BATH,
               "geometry": {"n_atoms": 4, "spin_mode": "full_sectors", "fock_dim": "auto",
                            "truncation_tol": 1e-6, "fock_cap": 80},
               "grid": _grid(10), "sweep": {"parameter": "bath.kappa",
                                            "values": [0.01, 0.05, 0.1, 0.5]}}),
    ],
    "fig14": [("", {"task": "g2", "model": _dicke(1.5), "bath": _BATH, "geometry": _AUTO7,
                    "operators": "aa", "grid": _grid(10),
                    "sweep": {"parameter": "model.lam", "values": [0.5, 1.0, 1.5]}})],
    "fig15": [("", {"task": "g2", "model": _dicke(1.5), "bath": _BATH, "geometry": _AUTO7,
                    "operators": "aa", "grid": _grid(10),
                    "options": {"window": [1.0, 3.5], "fit_mode": "squared"}})],
}

FIGURES = tuple(_RAW)


def figure_configs(fig: str):
    """[(subdirectory, RunConfig), ...] for a figure id such as "fig6"."""
    if fig not in _RAW:
        raise KeyError(f"unknown figure {fig!r}")
    return [(name, RunConfig.from_dict(d)) for name, d in _RAW[fig]]
