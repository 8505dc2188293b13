"""
CNOT with GRAPE and PP-GRAPE
============================

Two Ising-coupled qubits, 50 piecewise-constant segments over 5 ms. The same
random guesses are optimized pull-only and with a push term against L = 5
random operators orthogonal to the CNOT target.
"""
import numpy as np

from pushpull import grape, systems
from pushpull.grape import GrapeConfig
from pushpull.linalg import RngStream

problem = systems.ising_two_qubit(100.0, n_segments=50, dt=1e-4)
u_max = systems.hz(1000.0)

# the push weight only acts when L > 0
pull = GrapeConfig(step_size=1e6, max_iterations=300, fidelity_goal=1.0)
push = GrapeConfig(step_size=1e6, max_iterations=300, fidelity_goal=1.0,
                   orthogonal_L=5, push_weight=0.2)

rows = []
for seed in range(5):
    guess = RngStream(seed).uniform(-u_max, u_max, problem.shape)
    a = grape.run(problem, guess, pull)
    b = grape.run(problem, guess, push)
    rows.append((seed, 1 - a.final_fidelity, 1 - b.final_fidelity))
    print(f"guess {seed}: pull-only 1-F = {rows[-1][1]:.3e}, push-pull 1-F = {rows[-1][2]:.3e}")

rows = np.array(rows)
print("mean infidelity ratio (pull / push):", rows[:, 1].mean() / rows[:, 2].mean())
