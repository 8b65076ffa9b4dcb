"""A linear reward does not make the Q function monotone or submodular.

Three states, three items, sets of at most two items.  The reward of showing
{i, j} in state s is s * (i + j), so each round on its own favours large sets.
Transitions depend on the set shown, and that is enough to break both
properties once future value enters Q.
"""

from oneshot import build_appendix_example, optimal_values, q_probe, value_iteration
from oneshot.finite_mdp import counterexample_rows

gamma = 0.5
toy = build_appendix_example(gamma)

# Two sweeps of pooled-greedy value iteration from zero.
V2 = value_iteration(toy, "greedy", gamma, iterations=2).values
print("V after two greedy sweeps:", V2)

# In state 1, adding item 1 to {3} lowers Q: the greedy Q is not monotone.
print("Q({3}, 1)   =", toy.q(V2, 1, (3,)))
print("Q({1,3}, 1) =", toy.q(V2, 1, (1, 3)))

# With the optimal value function the marginal gain of item 2 grows with the base set.
V = optimal_values(toy, gamma)
print("\noptimal V:", V)
print("gain of {2} over {}  :", toy.q(V, 1, (2,)) - toy.q(V, 1, ()))
print("gain of {2} over {1} :", toy.q(V, 1, (1, 2)) - toy.q(V, 1, (1,)))

probe = q_probe(toy, V, gamma)
print("\nworst submodularity violation under V*:", probe.max_submodularity_violation,
      "at (state, a, b, item) =", probe.submodularity_argmax)

print("\nreference values vs computed:")
for r in counterexample_rows(gamma):
    flag = "ok" if r["passed"] else "differs"
    print(f"  {r['value_function']:8s} {r['quantity']:22s} {r['computed']:7.3f}  expected {r['expected']:6.2f}  {flag}")
# The two 'optimal' mismatches come from the reference optimal values;
# solving the three-state system directly gives V* = (14, 17, 22).
