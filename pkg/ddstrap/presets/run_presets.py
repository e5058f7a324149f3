"""
Bundled run configurations

Same unit-bearing form as configuration files; ``ddstrap.utils.config`` validates
them through the file path.

- fig2e: planar SiO2/Au/Si stack at the reference operating point
- fig4:  planar stack with the Rabi frequency used for the fixed-position lifetime scans
- fig6:  100 nm SiO2-ridge grating on Au/Si, two-beam 1529 nm dressing
- fig7:  grating operating point of the 780 nm detuning/power scans

Scan presets vary one dotted parameter of a run preset; optimization presets
span the stack (fig2b) and grating (fig5b) search boxes.
"""

PLANAR_STACK = {
    "incidence": "vacuum",
    "layers": [
        {"material": "SiO2", "thickness": "158 nm"},
        {"material": "Au", "thickness": "41 nm"},
    ],
    "substrate": "Si",
}

RIDGE_GRATING = {
    "period": "100 nm",
    "ridge_width": "25 nm",
    "ridge_height": "500 nm",
    "ridge_material": "SiO2",
    "groove_material": "vacuum",
    "cover": "vacuum",
    "layers": [{"material": "Au", "thickness": "10 nm"}],
    "substrate": "Si",
}

PRESETS = {
    "fig2e": {
        "name": "fig2e",
        "surface": PLANAR_STACK,
        "lasers": {
            "power_1529_back": "400 mW",
            "wavelength_1529": "1529.34 nm",
            "waist_1529": "200 um",
            "power_780": "200 mW",
            "waist_780": "200 um",
            "detuning_780": "30 GHz",
            "rabi_frequency": "132 MHz",
        },
        "grids": {"z_min": "2 nm", "z_max": "2 um", "n_z": 600},
    },
    "fig4": {
        "name": "fig4",
        "surface": PLANAR_STACK,
        "lasers": {
            "power_1529_back": "400 mW",
            "wavelength_1529": "1529.34 nm",
            "waist_1529": "200 um",
            "power_780": "200 mW",
            "waist_780": "200 um",
            "detuning_780": "30 GHz",
            "rabi_frequency": "162 MHz",
        },
        "grids": {"z_min": "2 nm", "z_max": "2 um", "n_z": 600},
    },
    "fig6": {
        "name": "fig6",
        "grating": RIDGE_GRATING,
        "lasers": {
            "power_1529_back": "500 mW",
            "alpha_1529": 7.0,
            "wavelength_1529": "1529.34 nm",
            "waist_1529": "200 um",
            "power_780": "0.1 mW",
            "waist_780": "200 um",
            "detuning_780": "16.5 GHz",
        },
        "grids": {"z_min": "2 nm", "z_max": "1 um", "n_z": 400, "n_x": 32, "grating_z_points": 64},
        "quadrature": {"n_kx": 6, "ky_panels": 8, "ky_nodes_per_panel": 6},
        "rcwa": {"truncation": 15, "adaptive": False},
    },
    "fig7": {
        "name": "fig7",
        "grating": RIDGE_GRATING,
        "lasers": {
            "power_1529_back": "500 mW",
            "alpha_1529": 7.0,
            "wavelength_1529": "1529.34 nm",
            "waist_1529": "200 um",
            "power_780": "0.2 mW",
            "waist_780": "200 um",
            "detuning_780": "17.45 GHz",
        },
        "grids": {"z_min": "2 nm", "z_max": "1 um", "n_z": 400, "n_x": 32, "grating_z_points": 64},
        "quadrature": {"n_kx": 6, "ky_panels": 8, "ky_nodes_per_panel": 6},
        "rcwa": {"truncation": 15, "adaptive": False},
    },
}

SCAN_PRESETS = {
    "fig4": {
        "axes": [{"parameter": "lasers.power_1529_back", "start": "200 mW", "stop": "1 W", "count": 9}],
        "metrics": ["z_b", "z_t", "U0", "U_b", "tau_out", "tau_tunnel", "tau_antidamping", "tau_adiabatic", "tau"],
        "hold_trap_position": "50 nm",
    },
    "fig7-detuning": {
        "axes": [{"parameter": "lasers.detuning_780", "start": "17.45 GHz", "stop": "15.27 GHz", "count": 12}],
        "metrics": ["z_b", "z_t", "U0", "U_l"],
    },
    "fig7-power": {
        "axes": [{"parameter": "lasers.power_780", "start": "0.2 mW", "stop": "4.2 mW", "count": 11}],
        "metrics": ["z_b", "z_t", "U0", "U_l"],
    },
}

OPTIMIZE_PRESETS = {
    "fig2b": {
        "name": "fig2b",
        "stack": {
            "dielectric": "SiO2",
            "metal": "Au",
            "substrate": "Si",
            "dielectric_thickness": {"start": "120 nm", "stop": "200 nm", "count": 17},
            "metal_thickness": {"start": "30 nm", "stop": "50 nm", "count": 11},
        },
        "objective": {"window_start": "50 nm", "window_stop": "100 nm"},
        "wavelength": "1529.34 nm",
        "power": "400 mW",
        "waist": "200 um",
    },
    "fig5b": {
        "name": "fig5b",
        "grating": {
            "period": "100 nm",
            "ridge_material": "SiO2",
            "metal": "Au",
            "substrate": "Si",
            "ridge_height": {"start": "300 nm", "stop": "700 nm", "count": 9},
            "ridge_width": {"start": "15 nm", "stop": "45 nm", "count": 7},
            "metal_thickness": {"start": "5 nm", "stop": "20 nm", "count": 4},
        },
        "objective": {"window_start": "50 nm", "window_stop": "100 nm"},
        "wavelength": "1529.34 nm",
        "power": "500 mW",
        "waist": "200 um",
        "truncation": 15,
    },
}
