"""Post-selected high-harmonic light states: Fock-space simulation, Wigner functions and homodyne tomography.

Submodules are imported on demand (``hhgps.fock``, ``hhgps.postselect``,
``hhgps.wigner``, ``hhgps.tomography``, ``hhgps.analysis``) so that the CLI can
configure BLAS threading before numpy loads.
"""

__version__ = "0.1.0"
