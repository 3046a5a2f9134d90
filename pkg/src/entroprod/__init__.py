"""entroprod: entropy production for open classical and quantum systems.

Submodules
----------
core          operator algebra, entropies and divergences
episodes      system+environment unitary episodes and entropy balances
trajectories  two-point-measurement ensembles and fluctuation theorems
collisional   repeated-interaction models and stroke-based engines
lindblad      continuous-time master equations and Liouvillian spectra
gaussian      Lyapunov/phase-space formulations for linear dynamics
classical     rate matrices, Schnakenberg entropy production, FCS
resource      thermo-majorization and Renyi second laws
cli           scenario runner and verification suites
"""

__version__ = "0.1.0"
