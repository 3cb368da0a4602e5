"""Random matrix tools for quantum information.

Modules: ``permcore`` (symmetric group, non-crossing partitions),
``weingarten`` (Haar and Gaussian integrals), ``tensorlin`` (bipartite linear
algebra), ``ensembles`` (seeded samplers), ``freeprob`` (spectral laws, free
convolution), ``criteria`` (entanglement criteria and thresholds),
``channels`` (quantum channels) and ``cli`` (the ``rmtq`` command).
"""

__version__ = "0.1.0"
