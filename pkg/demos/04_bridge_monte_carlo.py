"""The bridge-measure Monte Carlo estimator of the exact joint density.

The joint density factorizes as a Gaussian prefactor times the expectation of
a Girsanov exponential under the terminal-pinned driftless law.  Sampling
that bridge directly gives an unbiased-in-the-limit estimator of the exact
density: increments are conditioned on the terminal constraint, paths are
rebuilt with Volterra weights, and the drift integrand is pushed through the
inverse kernel transform.
"""

from modalbridge import (Hurst, ModelSpec, SimConfig, bridge_mc_density,
                         exact_timeonly_density, gaussian_prefactor, parse_drift)

print("=== sanity: zero drifts collapse to the prefactor with zero variance ===")
model = ModelSpec(Hurst(0.3), 0.5, 0.0, 0.0, 0.5, parse_drift("0"), parse_drift("0"))
endpoint = (0.2, -0.1)
est = bridge_mc_density(model, endpoint, SimConfig(n_paths=2000, n_steps=64, seed=1))
print(f"estimate      {est.value:.12f}")
print(f"prefactor     {gaussian_prefactor(0.2, -0.1, model):.12f}")
print(f"std error     {est.std_err:.2e}   halving bias {est.discretization_bias:.2e}")

print()
print("=== time-only drifts: estimator vs the exact Gaussian density ===")
for H, rho in ((0.5, 0.7), (0.3, 0.5), (0.7, -0.4)):
    model = ModelSpec(Hurst(H), rho, 0.1, -0.3, 0.5,
                      parse_drift("0.2"), parse_drift("-0.1"))
    endpoint = (0.4, -0.6)
    est = bridge_mc_density(model, endpoint,
                            SimConfig(n_paths=30_000, n_steps=128, seed=2))
    exact = exact_timeonly_density(model, endpoint)
    pull = abs(est.value - exact) / max(est.std_err + est.discretization_bias, 1e-15)
    print(f"H={H}, rho={rho:+}: estimate {est.value:.6f}  exact {exact:.6f}  "
          f"combined-error pull {pull:.2f}")

print()
print("=== a state-dependent system (no closed form exists) ===")
model = ModelSpec(Hurst(0.4), 0.3, 0.0, 0.0, 0.25,
                  parse_drift("0.3*x + 0.1"), parse_drift("0.2*y"))
endpoint = (0.15, -0.1)
for n_steps in (64, 128, 256):
    est = bridge_mc_density(model, endpoint,
                            SimConfig(n_paths=20_000, n_steps=n_steps, seed=3))
    print(f"n_steps={n_steps:4}: estimate {est.value:.6f} ± {est.std_err:.6f}  "
          f"(halving bias {est.discretization_bias:.2e})")
print("the halving-bias column is the built-in discretization diagnostic")
