"""Measurement harness: per-vertex corner functional from determinant FDs.

For a polygon family and vertex-velocity field, compares the finite
difference of the MPS+zeta log-determinant with the regularized boundary
term; the remainder is the corner functional sum(g(alpha_i) d alpha_i).
Writes JSON rows for offline fitting.  Internal tool, not part of the
package API.
"""

import json
import sys
import time

import numpy as np

from polydet.eigensolve import EigConfig
from polydet.geometry import build_polygon, field_from_vertex_velocities
from polydet.scmap import solve_parameter_problem
from polydet.validation import fd_logdet_derivative
from polydet.varform import main_formula

RICH = dict(basis_safety=1.9, basis_min=26, basis_extra=8,
            points_per_wavelength=9, interior_factor=1.0, threads=2)


def probe(name, verts, vel, lam_max, tau0, rows):
    p = build_polygon(verts)
    f = field_from_vertex_velocities(p, vel)
    m = solve_parameter_problem(p)
    dv = main_formula(p, m, f)
    t0 = time.time()
    fd = fd_logdet_derivative(p, f, lam_max, tau0)
    needed = fd - dv.boundary_term
    row = {"name": name, "angles": list(p.angles), "da": list(f.delta_angles),
           "boundary": dv.boundary_term, "fd": fd, "needed": needed,
           "corner_printed": dv.corner_term, "lam_max": lam_max, "tau0": tau0}
    rows.append(row)
    print(f"{name}: angles {np.round(p.angles, 4)} da {np.round(f.delta_angles, 4)} "
          f"needed {needed:+.7f} printed {dv.corner_term:+.7f} [{time.time()-t0:.0f}s]",
          flush=True)


def main(out_path, batch):
    rows = []
    if batch == "iso":
        for h in (0.35, 0.5, 0.65, 0.8, 1.0, 1.25):
            lam = 2200.0 if h < 0.5 else (1500.0 if h < 0.9 else 1200.0)
            tau0 = 14.0 / lam
            probe(f"iso{h}", [0.0, 1.0, 0.5 + 1j * h], [0, 0, 0.5j], lam, tau0, rows)
    elif batch == "tri":
        probe("tri1a", [0.0, 1.0, 0.3 + 0.8j], [0, 0, 1.0], 1500.0, 0.014, rows)
        probe("tri1b", [0.0, 1.0, 0.3 + 0.8j], [0, 0, 0.7j], 1500.0, 0.014, rows)
        probe("tri1c", [0.0, 1.0, 0.3 + 0.8j], [0, 0.5, 0], 1500.0, 0.014, rows)
        probe("tri2a", [0.0, 1.2, 0.7 + 0.6j], [0, 0, 1.0], 1800.0, 0.012, rows)
        probe("tri2b", [0.0, 1.2, 0.7 + 0.6j], [0.3j, 0, 0], 1800.0, 0.012, rows)
    elif batch == "quad":
        q = [0.0, 1.0, 1.2 + 0.9j, -0.1 + 0.8j]
        probe("quadA", q, [0, 0, 0.5, 0], 1100.0, 0.016, rows)
        probe("quadB", q, [0, 0, 0.4j, 0], 1100.0, 0.016, rows)
        probe("quadC", q, [0, 0, 0, 0.4], 1100.0, 0.016, rows)
        # near-regular pentagon: all angles obtuse
        pent = [1.05 * np.exp(2j * np.pi * k / 5 + 0.1j * (k % 2)) for k in range(5)]
        probe("pentA", pent, [0, 0, 0.4, 0, 0], 900.0, 0.02, rows)
        probe("pentB", pent, [0, 0.3j, 0, 0, 0], 900.0, 0.02, rows)
    with open(out_path, "w") as fh:
        json.dump(rows, fh, indent=1)
    print("wrote", out_path)


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
