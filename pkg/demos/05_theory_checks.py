"""Numerical checks of the greedy value-iteration guarantees on a small instance.

Termination scores are set to k times the largest score so that every
display ends the session with probability at least 1/2 (B >= 2).
"""

import numpy as np

from oneshot.theory import (
    beta,
    check_nemhauser,
    check_theorem1,
    check_theorem2,
    classical_beta,
    conforming_model,
    coverage_function,
    heuristic_lambda,
)

rng = np.random.default_rng(3)
model = conforming_model(rng, num_types=3, num_items=6, k=3)
rep = check_theorem1(model, k=3, gamma=0.9, t=5, resolution=5)
print(f"B = {rep.B:.3f}, hypothesis B >= 2 met: {rep.hypothesis_met}")
print(f"greedy <= exact: max residual {rep.upper_residual.max():.3g}")
for name, d in rep.lower.items():
    print(f"lower bound with beta={d['beta']:.4f} ({name}): max residual {d['residual'].max():.3g}")
finite = rep.lambda_bound[np.isfinite(rep.lambda_bound)]
print(f"lambda bound over the grid: {finite.min():.3f} .. {finite.max():.3f}")

print("\nrough slack estimate for B=2, gamma=0.75:", heuristic_lambda(2.0, 0.75))
print("beta(3) two readings:", beta(3), classical_beta(3))

f = coverage_function(rng, 10)
nem = check_nemhauser(f, 10, 3, theta=0.0, epsilon=0.0)
print(f"\ncoverage function: greedy {nem.greedy_value:.3f}, optimum {nem.optimum:.3f}")

small = conforming_model(rng, 2, 5, 2)
for r in (4, 8, 16):
    t2 = check_theorem2(small, 2, 0.9, 4, r, 32)
    print(f"grid r={r:2d}: |greedy - fine exact| <= {np.abs(t2.gap).max():.4f} (bound {t2.bound:.3f})")
