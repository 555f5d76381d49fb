"""Named oracle fields with closed-form frequencies."""
from __future__ import annotations

import math
import re

import numpy as np

from .errors import ConfigError
from .fields import HarmonicPolynomial, OneSidedLinear, WedgeEigenfunction, solve_dirichlet
from .geometry import ConvexDomain

WEDGE_ANGLES = ("pi", "3pi/4", "2pi/3", "pi/2")
ORACLE_NAMES = ("half_plane_linear", "poly_Re_z2", "poly_Im_z2", "poly_Im_z3") + tuple(
    f"wedge_{a}" for a in WEDGE_ANGLES)


def parse_angle(text):
    """'2pi/3', 'pi', '3*pi/4', '1.5' -> radians."""
    s = str(text).replace(" ", "").replace("*", "").replace("π", "pi")
    m = re.fullmatch(r"([0-9.]*)pi(?:/([0-9.]+))?", s)
    if m:
        num = float(m.group(1)) if m.group(1) else 1.0
        den = float(m.group(2)) if m.group(2) else 1.0
        val = num * math.pi / den
    else:
        try:
            val = float(s)
        except ValueError:
            raise ConfigError(f"cannot parse angle {text!r}") from None
    if not 0 < val <= math.pi:
        raise ConfigError(f"wedge opening must lie in (0, pi], got {text!r}")
    return val


def preset(name, dim=2):
    """Field for a preset name; its domain is attached as field.domain."""
    if name == "half_plane_linear":
        n = np.zeros(dim)
        n[1] = 1.0
        return OneSidedLinear(n)
    if name == "poly_Re_z2":
        return HarmonicPolynomial(2, [1, 0])
    if name == "poly_Im_z2":
        return HarmonicPolynomial(2, [0, 1], domain=ConvexDomain.upper_half())
    if name == "poly_Im_z3":
        return HarmonicPolynomial(3, [0, 1], domain=ConvexDomain.upper_half())
    if name.startswith("wedge_"):
        return WedgeEigenfunction(parse_angle(name[len("wedge_"):]), 1, dim)
    raise ConfigError(f"unknown preset {name!r}")


def oracle_point(name):
    """The distinguished point of a preset (vertex or origin) and its exact frequency there."""
    f = preset(name)
    if name == "half_plane_linear":
        return np.zeros(2), 1.0
    if name == "poly_Re_z2" or name == "poly_Im_z2":
        return np.zeros(2), 2.0
    if name == "poly_Im_z3":
        return np.zeros(2), 3.0
    return np.zeros(2), float(f.exponent)


def oracle_library():
    return {name: (preset(name),) + oracle_point(name) for name in ORACLE_NAMES}


def grid_preset(name, resolution):
    """Grid solution on domain ∩ B_2(0) with the preset as boundary data."""
    f = preset(name)
    dom = f.domain if f.domain is not None else ConvexDomain.whole_space(f.dim)
    return solve_dirichlet(dom, f.eval, resolution)
