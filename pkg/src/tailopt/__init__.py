"""Heavy-tail-robust stochastic optimization in smooth normed spaces.

Subpackages:

- ``spaces``: l_q / l_r norm pairs, duality maps, dual-norm clipping.
- ``problems``: synthetic smooth objectives and heavy-tailed gradient oracles.
- ``optimizers``: clipped normalized momentum steppers, schedules,
  burn-in certificates and output selection.
- ``concentration``: executable martingale / truncated-vector bounds with
  Monte-Carlo coverage testing.
- ``analysis``: smoothness and one-step-descent verifiers, rate fitting.
- ``harness``: experiment runner, config files, trajectory persistence,
  sweep and verification drivers (CLI in ``tailopt.cli``).
"""

from tailopt.spaces import NormedSpace

__all__ = ["NormedSpace"]
__version__ = "0.1.0"
