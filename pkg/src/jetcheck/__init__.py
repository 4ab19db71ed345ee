"""Exact verification of dynamic-equivalence certificates for control systems.

The symbolic kernel works with rational functions over Q in jet variables,
so "identically zero" is decided exactly. On top of it sit prolongation,
certificate checks, ruledness tests of velocity sets and the one-sided
non-equivalence verdicts they support.
"""

from .dsl import ParseError, SourceFile, parse, parse_file, serialize
from .equiv import Certificate, JetMap, check_certificate, check_domains
from .ruled import find_ruling, is_ruled_sampled
from .system import ExplicitSystem, JetPoint
from .verdict import flatness_verdict, nonequivalence_verdict, static_obstruction

__version__ = "0.1.0"

__all__ = [
    "Certificate", "ExplicitSystem", "JetMap", "JetPoint", "ParseError", "SourceFile",
    "check_certificate", "check_domains", "find_ruling", "flatness_verdict",
    "is_ruled_sampled", "nonequivalence_verdict", "parse", "parse_file", "serialize",
    "static_obstruction",
]
