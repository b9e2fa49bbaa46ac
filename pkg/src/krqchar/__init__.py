"""q-characters of Kirillov-Reshetikhin modules: cluster mutation on the
semi-infinite quiver G^-, and quiver Grassmannians of generic kernels over
the Jacobian algebra of (Gamma^-, S)."""

from .cartan import CartanData, cartan_data, positive_roots
from .krchar import KREngine, KRLabel, dimension, engine_for, kr_qcharacter, verify_periodicity
from .laurent import LaurentPoly, VarId, Y, parse_text, v, z
from .qpa import generic_kernel, geometric_qcharacter, km_module, module_fpolynomial, truncated_algebra
from .tsystem import tsystem_equation, verify_tsystem

__all__ = [
    "CartanData",
    "cartan_data",
    "positive_roots",
    "KREngine",
    "KRLabel",
    "dimension",
    "engine_for",
    "kr_qcharacter",
    "verify_periodicity",
    "LaurentPoly",
    "VarId",
    "Y",
    "z",
    "v",
    "parse_text",
    "generic_kernel",
    "geometric_qcharacter",
    "km_module",
    "module_fpolynomial",
    "truncated_algebra",
    "tsystem_equation",
    "verify_tsystem",
]

__version__ = "0.1.0"
