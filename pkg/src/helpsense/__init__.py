"""Goal inference over interface event streams.

The package turns a stream of time-stamped interface events into modeled
observations via a compiled temporal pattern language, infers a distribution
over user goals with a discrete Bayesian network whose evidence influence
decays with age, folds in free-text query analysis, and decides when to offer
assistance autonomously.
"""

__version__ = "0.1.0"
