"""
CNOT with PP-Krotov
===================

Krotov sweeps update one segment at a time with the current forward state,
so each iteration is monotone in the penalized objective. The push term adds
a repulsion from one orthogonal operator per member of the set.
"""
from pushpull import krotov, systems
from pushpull.krotov import KrotovConfig
from pushpull.linalg import RngStream

problem = systems.ising_two_qubit(100.0, n_segments=50, dt=1e-4)
guess = RngStream(3).uniform(-systems.hz(1000.0), systems.hz(1000.0), problem.shape)

base = dict(delta=0.1, eta=0.1, kappa=0.01, penalties=(3e-4,), max_iterations=150, fidelity_goal=1.0)
for L, alpha in ((0, 0.0), (5, 0.2)):
    trace = krotov.run(problem, guess, KrotovConfig(orthogonal_L=L, push_weight=alpha, **base))
    f = trace.fidelities
    print(f"L={L} alpha={alpha}: F after 10, 50, 150 iterations = "
          f"{f[10]:.5f}, {f[50]:.5f}, {f[-1]:.6f}")
