"""
Push-weight sweep
=================

Mean final infidelity of PP-GRAPE on CNOT as a function of the push weight
alpha, with L = 5 and the same guesses at every alpha. Negative weights
pull towards the orthogonal operators instead of pushing away.
"""
import numpy as np

from pushpull import grape, systems
from pushpull.grape import GrapeConfig
from pushpull.linalg import RngStream

problem = systems.ising_two_qubit(100.0, n_segments=50, dt=1e-4)
u_max = systems.hz(1000.0)
guesses = [RngStream(s).uniform(-u_max, u_max, problem.shape) for s in range(4)]

for alpha in (-0.4, -0.2, 0.0, 0.2, 0.4, 0.6):
    infid = []
    for seed, g in enumerate(guesses):
        cfg = GrapeConfig(step_size=1e6, max_iterations=150, fidelity_goal=1.0,
                          orthogonal_L=5, push_weight=alpha, rng_seed=seed)
        infid.append(1 - grape.run(problem, g, cfg).final_fidelity)
    print(f"alpha={alpha:+.1f}: mean 1-F = {np.mean(infid):.3e}")
