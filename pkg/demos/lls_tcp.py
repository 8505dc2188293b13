"""
Long-lived singlet order on a proton pair
=========================================

Two protons with offsets of +-63.8 Hz and J = 8.8 Hz. The thermal
deviation Iz_A + Iz_B is steered to singlet-triplet order -I_A . I_B in
45 ms with 1000 segments, optimizing the mean fidelity over RF amplitude
errors of +-5 %. The conventional sequence needs 1/(2J) + 3/(4 dnu).
"""
from pushpull import krotov, systems
from pushpull.bench.profile import rf_profile
from pushpull.krotov import KrotovConfig
from pushpull.linalg import RngStream

dnu, J = 127.6, 8.8
print(f"standard sequence: {systems.standard_lls_duration(dnu, J) * 1e3:.2f} ms")

problem = systems.nmr_pair(dnu, J, n_segments=1000, dt=45e-3 / 1000)
u_max = systems.hz(50.0)
guess = RngStream(0).uniform(-u_max, u_max, problem.shape)
scales = (0.95, 1.0, 1.05)
cfg = KrotovConfig(delta=0.5, eta=0.5, penalties=(1e-3,), max_iterations=60, fidelity_goal=1.0,
                   orthogonal_L=1, push_weight=0.2, rf_scales=scales)
trace = krotov.run(problem, guess, cfg)
print(f"{trace.n_iterations} iterations, ensemble fidelity {trace.final_fidelity:.4f}")

# the normalized fidelity can exceed 1 here: rho0 is not a rotated copy of rho_t
profile = rf_profile(problem, trace.final_pulse, scales)
for s, c in zip(profile.scales, profile.curves):
    print(f"RF scale {s:.2f}: F after 250, 500, 750, 1000 segments = "
          + ", ".join(f"{c[j]:.3f}" for j in (250, 500, 750, 1000)))
