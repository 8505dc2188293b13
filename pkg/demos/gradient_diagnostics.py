"""
Pull and push gradients during PP-GRAPE
=======================================

With ``record_gradients`` the run keeps the pull gradient, the mean push
gradient and the combined ascent direction of every iteration. All three
are printed as norms, which shows how strongly the push term tilts the step.
"""
import numpy as np

from pushpull import grape, systems
from pushpull.grape import GrapeConfig
from pushpull.linalg import RngStream

problem = systems.ising_two_qubit(100.0, n_segments=50, dt=1e-4)
guess = RngStream(1).uniform(-systems.hz(1000.0), systems.hz(1000.0), problem.shape)
cfg = GrapeConfig(step_size=1e6, max_iterations=120, fidelity_goal=1.0, orthogonal_L=5,
                  push_weight=0.2, record_gradients=True)
trace = grape.run(problem, guess, cfg)

for i in (0, 10, 30, 60, 119):
    d = trace.diagnostics[i]
    print(f"iteration {i:3d}: F = {trace.fidelities[i]:.6f}, |pull| = {np.linalg.norm(d['pull']):.3e}, "
          f"|push| = {np.linalg.norm(d['push']):.3e}, |total| = {np.linalg.norm(d['total']):.3e}")
