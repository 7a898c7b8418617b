"""haarsim: Haar-orthogonal matrix simulation and density-ratio experiments.

Library layout:

- ``numerics``: special functions, probability bounds, quadrature
- ``linalg``: Gram matrices, Jacobi eigenvalues, modified Gram-Schmidt
- ``sampler``: counter-based Gaussian streams and the Haar coupling
- ``density``: block densities and the density-ratio factorization
- ``moments``: trace moments of Wishart-type Gram matrices
- ``experiments``: reproducible Monte Carlo sweeps with CSV/JSON output

Hot kernels run in a compiled extension when available; a pure-NumPy
fallback with the same contracts is selected otherwise (see
``haarsim.backend_name()``).
"""

from haarsim._backend import BACKEND

__version__ = "0.1.0"


def backend_name() -> str:
    """Which kernel backend is active: 'compiled' or 'python'."""
    return BACKEND
