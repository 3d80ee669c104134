"""Recovering the dynamics from an event log.

Simulates a two-node system with known parameters, fits the influence
matrix and baselines by projected gradient ascent on the exact
log-likelihood, and picks the decay rate by chronological
cross-validation.

Run:  python demos/04_fitting_dynamics_from_logs.py  (about a minute)
"""

import numpy as np

import hawksteer as hs

B_true = np.array([[0.0, 0.8],
                   [0.3, 0.0]])
lam0_true = np.array([0.5, 0.5])
omega_true = 2.0
T = 7000.0

seq = hs.simulate_uncontrolled(B_true, lam0_true, omega_true, 0.0, T,
                               hs.stream(11, "fitdemo"))
print(f"simulated {len(seq)} events over T={T:g}")

result = hs.fit(seq, omega_true, max_iters=300, tf=T)
print("true B:\n", B_true)
print("fitted B:\n", np.round(result.B, 3))
print("fitted baselines:", np.round(result.lam0, 3), "(true", lam0_true, ")")
rel = np.linalg.norm(result.B - B_true) / np.linalg.norm(B_true)
print(f"relative L2 error of the influence matrix: {rel:.1%}")

short = hs.simulate_uncontrolled(B_true, lam0_true, omega_true, 0.0, 2000.0,
                                 hs.stream(12, "cv"))
picked = hs.select_omega(short, [0.5, 2.0, 8.0], holdout=0.3, max_iters=150)
print(f"decay rate picked by held-out likelihood: {picked} (true {omega_true})")
