"""Smallest singular values of sparse random matrices.

Modules: ``ensemble`` (matrix models and conditions), ``spectra`` (singular
values and column distances), ``geometry`` (sphere decomposition and nets),
``bounds`` (closed-form constants), ``probe`` (Monte Carlo and exact oracles)
and ``cli``.
"""

__version__ = "0.1.0"
