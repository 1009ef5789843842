"""How mirror-point Gaussian calibration sets per-class thresholds.

For each seen class, take the model's probabilities on its own training
examples, mirror them about 1 (p -> 2-p) to complete a half-Gaussian, and
use the std of the mirrored sample to tighten that class's threshold:
t_i = max(0.5, 1 - alpha * sigma_i). A confidently-modeled class earns a
strict threshold; a noisy one keeps the default 0.5.
"""

import numpy as np

from opentc.calibration import fit_sigma

rng = np.random.default_rng(0)

print(f"{'class probabilities':<42} {'sigma':>8} {'t (a=3)':>8}")
for name, probs in [
    ("tight: 200 draws near 0.98", np.clip(rng.normal(0.98, 0.01, 200), 0.01, 1.0)),
    ("medium: 200 draws near 0.90", np.clip(rng.normal(0.90, 0.05, 200), 0.01, 1.0)),
    ("sloppy: 200 draws near 0.75", np.clip(rng.normal(0.75, 0.10, 200), 0.01, 1.0)),
    ("hand example {0.9, 1.0}", np.array([0.9, 1.0])),
    ("hand example {0.5}", np.array([0.5])),
]:
    sigma = fit_sigma(probs)
    t = max(0.5, 1.0 - 3.0 * sigma)
    print(f"{name:<42} {sigma:>8.4f} {t:>8.4f}")

print()
print("The mirror trick in one line: std([p, 2-p]) has mean exactly 1,")
print("so sigma^2 = mean((1-p)^2) - the RMS distance of p from certainty.")
p = rng.uniform(0.5, 1.0, 1000)
print(f"  fit_sigma(p)              = {fit_sigma(p):.6f}")
print(f"  sqrt(mean((1-p)**2))      = {np.sqrt(np.mean((1 - p) ** 2)):.6f}")
