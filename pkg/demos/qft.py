"""
QFT gate synthesis
==================

The n-qubit QFT is the d x d DFT matrix. Here a 2-qubit and a 3-qubit
Ising chain with individual x/y controls are steered to it with PP-Krotov
(L = 1) and with pull-only Krotov from the same guesses.
"""
import numpy as np

from pushpull import krotov, systems
from pushpull.krotov import KrotovConfig
from pushpull.linalg import RngStream

print("QFT(1) is the Hadamard gate:\n", np.round(systems.qft_target(1) * np.sqrt(2), 12).real)

settings = {2: (60, 15e-3, 2e-3), 3: (100, 30e-3, 4e-3)}
for n, (segments, duration, lam) in settings.items():
    problem = systems.qft_problem(n, 100.0, n_segments=segments, dt=duration / segments)
    u_max = systems.hz(500.0)
    base = dict(delta=0.1, eta=0.1, penalties=(lam,), max_iterations=100, fidelity_goal=1.0)
    out = {0: [], 1: []}
    for seed in range(3):
        guess = RngStream(seed).uniform(-u_max, u_max, problem.shape)
        for L in out:
            cfg = KrotovConfig(orthogonal_L=L, push_weight=0.2 if L else 0.0, rng_seed=seed, **base)
            out[L].append(1 - krotov.run(problem, guess, cfg).final_fidelity)
    print(f"n={n}: mean 1-F pull-only {np.mean(out[0]):.3e}, PP-Krotov {np.mean(out[1]):.3e}")
