"""Walk through the jammer-user channel model on one frozen scenario.

Run:  python demos/channel_anatomy.py
"""

import numpy as np

import majam

cfg = majam.SystemConfig()
rng = majam.realization_rng(master_seed=1, realization=0)
envs = majam.sample_scenario(cfg, rng)

print("Scenario: base station at", cfg.geometry.bs_position,
      "| jammer at", cfg.geometry.jammer_position)
for k, env in enumerate(envs):
    print(f"  user {k}: position ({env.user_position[0]:6.1f}, "
          f"{env.user_position[1]:6.1f})  d_bs {env.d_bs:6.1f} m  "
          f"d_jam {env.d_jam:6.1f} m")

# Every path response is a pure phase: moving an antenna re-phases the
# paths without touching their strength.
env = envs[0]
p = np.array([0.004, -0.01, 0.002])
frv = majam.transmit_frv(p, env.angles.transmit, cfg.wavelength_m)
print("\nTransmit field response at offset", p, "(user 0):")
print("  magnitudes:", np.round(np.abs(frv), 12))
print("  phases (rad):", np.round(np.angle(frv), 3))

# The channel entries interfere constructively or destructively as one
# antenna slides along the array axis.
ys = np.linspace(-cfg.array_half_length_m, cfg.array_half_length_m, 17)
mags = [abs(majam.jammer_channel(np.array([[0.0], [y], [0.0]]), env,
                                 cfg.wavelength_m)[0]) for y in ys]
print("\n|h(y)| for one antenna sliding along y (user 0):")
for y, mag in zip(ys, mags):
    bars = "#" * int(round(40 * mag / max(mags)))
    print(f"  y = {y:+.3f} m  |h| = {mag:.3e}  {bars}")

expected = np.sqrt(np.sum(np.abs(env.effective_path_vector) ** 2))
print(f"\nRMS entry level sqrt(sum |b_i|^2) = {expected:.3e} "
      "(positions only move phases around this level)")
