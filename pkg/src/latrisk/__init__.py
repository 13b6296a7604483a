"""Latency-aware shared-autonomy driving simulator and collision-risk engine.

The package couples a 2D kinematic traffic world with a probabilistic risk
engine: beliefs over obstacle motion, collision probability under delayed
decision execution, a bird's-eye-view risk map, a simulated-operator
evaluation harness and a live operator session gateway.
"""

__version__ = "0.1.0"
