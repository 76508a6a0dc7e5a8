"""SimpleMKL on a toy problem: one useful kernel among noise.

Three Gram matrices are offered: one built from a noisy copy of the label,
two from pure noise. The learned simplex weights should pile onto the first.
"""

import numpy as np

from mklob import KernelSpec, MKLProblem, gram, train_simplemkl

rng = np.random.default_rng(0)
n = 60
y = np.where(rng.random(n) < 0.5, 1.0, -1.0)

signal = y[:, None] + 0.3 * rng.standard_normal((n, 1))
noise_a = rng.standard_normal((n, 4))
noise_b = rng.standard_normal((n, 2))
grams = [
    gram(signal, signal, KernelSpec("rbf", rbf_sigma_sq=1.0)).values,
    gram(noise_a, noise_a, KernelSpec("rbf", rbf_sigma_sq=4.0)).values,
    gram(noise_b, noise_b, KernelSpec("polynomial", poly_degree=2)).values,
]
grams = [G / np.mean(np.diag(G)) for G in grams]

model = train_simplemkl(MKLProblem(grams, y))
print("weights:", np.round(model.weights, 4))
print(f"J = {model.objective:.5f} after {model.iterations} outer iterations, gap {model.duality_gap:.2e}")
print("objective path:", " > ".join(f"{j:.4f}" for j in model.history))
