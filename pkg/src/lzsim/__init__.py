"""Two-band interferometry of cold atoms in tilted optical lattices.

Subpackage layout:

- :mod:`lzsim.numerics`: Bessel functions, eigensolver, quadrature, ODE kernels
- :mod:`lzsim.lattice`: Bloch bands, Wannier functions, tight-binding parameters
- :mod:`lzsim.model`: driven two-band Hamiltonians and the LZS parameter map
- :mod:`lzsim.dynamics`: exact time evolution and long-time averages
- :mod:`lzsim.magnus`: Magnus-expansion transition-probability formulas
- :mod:`lzsim.spectral`: Wannier-Stark perturbation theory and resonances
- :mod:`lzsim.sweep`: parameter-sweep heatmaps and their file formats
- :mod:`lzsim.cli`: command-line entry point
"""

__version__ = "0.1.0"
