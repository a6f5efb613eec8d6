"""Continuous logic of finite-dimensional tracial von Neumann algebras."""
from .algebra import (AlgElement, TracialAlgebra, double_embed, hs_dist, in_unit_ball,
                      interpolate, matrix_algebra, random_unit_ball, trace)
from .evaluate import (CertifiedValue, certify, enclose, eval_qf, eval_term, optimize)
from .formula import bounds, classify, dualize, lipschitz_modulus
from .numerics import Dyadic, DyadicInterval, interval_hull, monus
from .parser import format_formula, parse_algebra, parse_formula

__version__ = "0.1.0"
