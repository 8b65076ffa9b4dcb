"""Beliefs over user types, Bayes updates and the simplex grid the planner works on."""

import numpy as np

from oneshot import UserTypeModel, assumption_b, build_net, check_iia, mixture_choice_prob, posterior

# Two user types, three items.  Type 0 likes item 0, type 1 likes item 2.
model = UserTypeModel(
    scores=np.array([[0.9, 0.3, 0.1], [0.1, 0.3, 0.9]]),
    termination_scores=np.array([0.5, 0.5]),
)
display = (0, 2)
for m in range(2):
    print(f"type {m}: click probs {model.choice_probs(m, display)}, continues w.p. {model.continuation_prob(m, display):.3f}")

# The session stops each round with probability at least 1 - 1/B.
print("B =", assumption_b(model, 2))
# Ratio models satisfy the quantitative IIA identity exactly.
print("IIA residual:", check_iia(model, 2).max_residual)

c = np.array([0.5, 0.5])
for item in display:
    print(f"click on {item}: prob {mixture_choice_prob(model, c, display, item):.3f}, "
          f"posterior {posterior(model, c, display, item)}")

# The planner only sees grid beliefs: multiples of 1/r on the simplex.
net = build_net(3, 4)
print(f"\ngrid with 3 types, r=4: {len(net)} points, covering radius {net.covering_radius}")
belief = np.array([0.62, 0.30, 0.08])
i = net.snap(belief)
print("belief", belief, "snaps to", net.points[i])

# Vectorised snapping agrees with the linear scan.
rng = np.random.default_rng(0)
many = rng.dirichlet(np.ones(3), size=1000)
assert np.array_equal(net.snap_many(many), [net.snap(b) for b in many])
print("snap_many agrees with snap on 1000 random beliefs")
