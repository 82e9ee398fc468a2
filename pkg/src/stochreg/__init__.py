"""stochreg: a numerical laboratory for stochastic convolutions against
analytic semigroups and the maximal L^p-regularity inequalities they satisfy.

Layout:
    grid, spectral   diagonal/Fourier models, semigroup calculus, mixed norms
    kernels          sector Poisson kernels, kernel-class seminorms
    stochastic       noise sampling, Ito integrals, convolution schemes
    convops          J/I operator families, R-bounds, maximal functions
    maxreg           regularity ratio probes and the p = 2 blow-up harness
    config/runner    experiment configs, orchestration, persistence
    cli              command-line front end
"""

__version__ = "0.1.0"
