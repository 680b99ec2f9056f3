"""Secrecy/resolvability exponents of discrete memoryless wiretap channels.

Subpackages by theme:

- :mod:`secrecy_exponents.prob` -- distributions, channels, information measures
- :mod:`secrecy_exponents.method_of_types` -- n-types, type classes, counting
- :mod:`secrecy_exponents.ensembles` -- i.i.d. / constant-composition codeword laws
- :mod:`secrecy_exponents.iid` -- exact i.i.d.-ensemble exponent and grid oracle
- :mod:`secrecy_exponents.cc` -- constant-composition exponent and its lower bound
- :mod:`secrecy_exponents.finite_length` -- finite-blocklength exponents, type sums
- :mod:`secrecy_exponents.simulate` -- random-codebook sampling and exact leakage
- :mod:`secrecy_exponents.cli` -- command-line front end
"""

__version__ = "0.1.0"
