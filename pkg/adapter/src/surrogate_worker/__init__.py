"""Reference evaluator worker for the supernet search engine.

Speaks the engine's line-delimited JSON protocol on stdin/stdout and answers
every request with the deterministic synthetic surrogate, so searches routed
through a subprocess reproduce in-process results bit for bit.  The worker
deliberately avoids any deep-learning dependency; swapping the surrogate for
a real weight-sharing measurement means replacing one function
(:func:`surrogate_worker.surrogate.measure_error`).
"""

__version__ = "0.1.0"

from .surrogate import SurrogateConstants, hash_noise, measure_error

__all__ = ["SurrogateConstants", "hash_noise", "measure_error", "__version__"]
