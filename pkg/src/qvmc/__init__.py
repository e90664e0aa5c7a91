"""Quantum-enhanced variational Monte Carlo with RBM wavefunctions.

Submodules: ``hamiltonians`` (Pauli sums, TFIM builders), ``rbm``
(wavefunction, learner Hamiltonian), ``statevector`` (dense simulator and
Trotter circuits), ``samplers`` (Metropolis-Hastings with classical and
quantum proposals), ``transition`` (exact transition matrices and spectral
gaps), ``vmc`` (stochastic reconfiguration), ``otoc`` (OTOCs and I-eta
diagnostics), ``config``/``experiments``/``cli`` (orchestration).
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .hamiltonians import PauliString, PauliSum, build_ctfim, build_tfim  # noqa: F401
from .rbm import RbmParameters  # noqa: F401
