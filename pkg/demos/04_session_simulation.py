"""Mean session length of the four policies on the synthetic protocol.

A small run (5 repetitions of 2000 sessions); the full-size run lives in the
acceptance suite and the ``oneshot simulate`` command.
"""

from oneshot import ExperimentConfig, run_experiment

config = ExperimentConfig.preset("main", repetitions=5, sessions=2000, vi_iterations=(1, 3, 6), seed=1)
result = run_experiment(config)

print(f"{'arm':14s} {'sweeps':>6s} {'mean':>7s} {'stderr':>7s}")
for row in result.summary:
    print(f"{row['arm']:14s} {row['vi_iterations']:6d} {row['mean_length']:7.3f} {row['stderr']:7.3f}")

# the same numbers as CSV, one row per repetition plus pooled rows
print()
print(result.to_csv(include_repetitions=False))
