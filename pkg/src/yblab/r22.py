"""Construction of the 4x4 R-matrix families and presets.

Every family is an evaluatable model mapping a pair of multi-component
spectral points (plain ``{name: value}`` dicts) to the eight-vertex matrix

        [ a1  0   0  d1 ]
        [ 0   b1  c1 0  ]
        [ 0   c2  b2 0  ]
        [ d2  0   0  a2 ]

normalized so that P R(u,u) is the identity (for the scaled models: the
identity times a reported scalar).  Off the normalization convention c1 = c2
= 1, color asymmetry in the c entries is reintroduced either by the gauge
coordinates t/s of the six-vertex branches or by :func:`gauge_transform`.

Vanishing denominators raise :class:`SingularPoint`; callers that sweep the
parameter box are expected to resample, not to perturb.  Square roots are
taken on the principal branch, so entries may come out complex when a
radicand goes negative; shipped configurations keep radicands positive.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from . import ellip
from .errors import ConfigError, SingularPoint
from .exprlang import Expr, eval_expr, free_vars, parse

_FLOOR = 1e-12  # below this, a denominator counts as singular
_ZERO_TOL = 1e-10  # tolerance for normalization values at the declared zero point

Point = Mapping[str, float]


@dataclass(frozen=True)
class EightVertexElements:
    a1: complex
    a2: complex
    b1: complex
    b2: complex
    c1: complex
    c2: complex
    d1: complex
    d2: complex

    def to_matrix(self) -> np.ndarray:
        return np.array(
            [
                [self.a1, 0, 0, self.d1],
                [0, self.b1, self.c1, 0],
                [0, self.c2, self.b2, 0],
                [self.d2, 0, 0, self.a2],
            ],
            dtype=complex,
        )


_IDENTITY_ELEMENTS = EightVertexElements(1, 1, 0, 0, 1, 1, 0, 0)

# Required config fields per branch: (constant names, function names, coordinates
# fixed by the parameterization or None when the config chooses them).
BRANCH_SCHEMAS: dict[str, tuple[tuple[str, ...], tuple[str, ...], tuple[str, ...] | None]] = {
    "A": (("d0",), ("d",), None),
    "B_xxz": (("u0", "c0"), (), ("u", "p", "t")),
    "B_ff": (("u0",), (), ("u", "p", "pbar", "t")),
    "C_xyz": (("phi0", "k"), ("phi",), None),
    "C_ff2": ((), ("phi", "g"), None),
    "D_sym": (("x0", "f0"), ("f_x",), None),
    "D_colored": (("x_f",), ("d", "f_z"), None),
    "E_general": (("x_f", "xbar0"), ("d", "f_g"), None),
    "preset_xyz8v": (("lam", "k", "gamma"), (), ("u",)),
    "preset_ff2p": (("gamma",), (), ("u", "v")),
    "preset_ising": (("u0", "k", "gamma"), (), ("u",)),
    "preset_colored": (("k",), (), ("u", "p")),
}

_OPTIONAL_CONSTANTS = {
    "A": {"sign_a": 1.0},
    "D_sym": {"sign": 1.0},
    "D_colored": {"sign_g": 1.0},
    "E_general": {"sign_G": 1.0},
    "preset_ising": {"sign": 1.0},
}


@dataclass(frozen=True)
class FamilySpec:
    branch: str
    constants: dict[str, float]
    functions: dict[str, Expr]
    coordinates: tuple[str, ...]
    zero: dict[str, float]

    @classmethod
    def from_config(cls, doc: Mapping) -> "FamilySpec":
        branch = doc.get("family")
        if branch not in BRANCH_SCHEMAS:
            raise ConfigError(f"unknown family {branch!r}")
        want_consts, want_fns, fixed_coords = BRANCH_SCHEMAS[branch]

        constants = dict(_OPTIONAL_CONSTANTS.get(branch, {}))
        given = doc.get("constants", {})
        for name in want_consts:
            if name not in given:
                raise ConfigError(f"family {branch}: missing constant {name!r}")
        for name, value in given.items():
            constants[name] = float(value)

        functions = {}
        given_fns = doc.get("functions", {})
        for name in want_fns:
            if name not in given_fns:
                raise ConfigError(f"family {branch}: missing function {name!r}")
            functions[name] = parse(given_fns[name])

        if fixed_coords is not None:
            coordinates = fixed_coords
        else:
            coordinates = tuple(doc.get("coordinates", ()))
            if not coordinates:
                # default: free variables of the declared functions, sorted
                names: set[str] = set()
                for e in functions.values():
                    names |= set(free_vars(e))
                coordinates = tuple(sorted(names)) or ("u",)
        zero = {c: 0.0 for c in coordinates}
        if branch in ("B_xxz", "B_ff"):
            # colors and gauge coordinates enter multiplicatively there
            for c in ("p", "pbar", "t"):
                if c in zero:
                    zero[c] = 1.0
        zero.update({k: float(v) for k, v in doc.get("zero", {}).items()})
        spec = cls(branch, constants, functions, coordinates, zero)
        _validate(spec)
        return spec


def _validate(spec: FamilySpec) -> None:
    c = spec.constants

    def fn_at_zero(name):
        return eval_expr(spec.functions[name], spec.zero)

    def need_zero(name):
        v = fn_at_zero(name)
        if abs(v) > _ZERO_TOL:
            raise ConfigError(
                f"family {spec.branch}: {name} must vanish at the zero point, got {v}"
            )

    for name in ("sign_a", "sign", "sign_g", "sign_G"):
        if name in c and c[name] not in (1.0, -1.0):
            raise ConfigError(f"{name} must be +1 or -1")
    if spec.branch == "A":
        need_zero("d")
    elif spec.branch == "B_xxz":
        if abs(math.sin(c["u0"])) < _FLOOR:
            raise ConfigError("sin(u0) vanishes")
        if c["c0"] == 0:
            raise ConfigError("c0 must be nonzero")
    elif spec.branch == "B_ff":
        if abs(math.sinh(c["u0"])) < _FLOOR:
            raise ConfigError("sinh(u0) vanishes")
    elif spec.branch == "C_xyz":
        if not (0.0 <= c["k"] < 1.0):
            raise ConfigError("elliptic modulus k out of range [0, 1)")
        need_zero("phi")
        if abs(ellip.jacobi(c["phi0"], c["k"]).sn) < _FLOOR:
            raise ConfigError("sn(phi0) vanishes")
    elif spec.branch == "C_ff2":
        need_zero("phi")
        g0 = fn_at_zero("g")
        if abs(g0 - 1.0) > _ZERO_TOL:
            raise ConfigError(f"g must equal 1 at the zero point, got {g0}")
    elif spec.branch == "D_sym":
        need_zero("f_x")
        if c["f0"] == 0:
            raise ConfigError("f0 must be nonzero")
    elif spec.branch == "D_colored":
        need_zero("d")
        need_zero("f_z")
    elif spec.branch == "E_general":
        need_zero("d")
        need_zero("f_g")
    elif spec.branch == "preset_xyz8v":
        if not (0.0 <= c["k"] < 1.0):
            raise ConfigError("elliptic modulus k out of range [0, 1)")
        if abs(ellip.jacobi(c["lam"], c["k"]).sn) < _FLOOR:
            raise ConfigError("sn(lam) vanishes")
    elif spec.branch == "preset_ising":
        if not (0.0 <= c["k"] < 1.0):
            raise ConfigError("elliptic modulus k out of range [0, 1)")
        if abs(ellip.jacobi(c["u0"], c["k"]).sn) < _FLOOR:
            raise ConfigError("sn(u0) vanishes")
    elif spec.branch == "preset_colored":
        if not (0.0 <= c["k"] < 1.0):
            raise ConfigError("elliptic modulus k out of range [0, 1)")


@dataclass(frozen=True)
class RMatrixModel:
    """Evaluatable R-matrix with metadata.

    ``normalized`` is True when P R(u,u) is exactly the identity by
    construction; scaled models (the colored preset) report the coincidence
    scalar through the a1 element instead.
    """

    dim: int
    branch: str
    coordinates: tuple[str, ...]
    zero: dict[str, float]
    elements: Callable[[Point, Point], EightVertexElements]
    normalized: bool = True
    spec: FamilySpec | None = None
    gauge: tuple[Expr, Expr] | None = None
    meta: dict = field(default_factory=dict)

    def matrix(self, u: Point, w: Point) -> np.ndarray:
        return self.elements(u, w).to_matrix()

    def point(self, **coords: float) -> dict[str, float]:
        p = dict(self.zero)
        p.update(coords)
        return p


def _guard(value: complex, what: str, point=None) -> complex:
    if abs(value) < _FLOOR:
        raise SingularPoint(what, point)
    return value


def _coincident(u: Point, w: Point, coords) -> bool:
    return all(u[c] == w[c] for c in coords)


# ---------------------------------------------------------------------------
# family A:  b = 0, one arbitrary function d and one constant d0


def _family_a(spec: FamilySpec):
    d_expr = spec.functions["d"]
    d0 = spec.constants["d0"]
    sign_a = spec.constants["sign_a"]

    def elem_d(p: Point) -> complex:
        return eval_expr(d_expr, p)

    def elem_a(p: Point) -> complex:
        dv = elem_d(p)
        return sign_a * cmath.sqrt(dv * dv + 1.0 - dv * d0)

    def elements(u: Point, w: Point) -> EightVertexElements:
        du, dw = elem_d(u), elem_d(w)
        den = _guard(1.0 + (du - d0) * dw, "family A denominator", (u, w))
        a = elem_a(u) * elem_a(w) / den
        d = (du - dw) / den
        return EightVertexElements(a, a, 0, 0, 1, 1, d, d)

    return elements


# ---------------------------------------------------------------------------
# family B_xxz:  d = 0, six-vertex solution with colors p, q and gauge t/s


def _family_b_xxz(spec: FamilySpec):
    u0 = spec.constants["u0"]
    c0 = spec.constants["c0"]
    s0 = math.sin(u0)

    def elements(u: Point, w: Point) -> EightVertexElements:
        p, q = _guard(u["p"], "color p", u), _guard(w["p"], "color q", w)
        t, s = _guard(u["t"], "gauge t", u), _guard(w["t"], "gauge s", w)
        du = u["u"] - w["u"]
        a1 = q * math.sin(du + u0) / (p * s0)
        a2 = p * math.sin(du + u0) / (q * s0)
        b1 = p * q * math.sin(du) / (c0 * s0)
        b2 = c0 * math.sin(du) / (p * q * s0)
        return EightVertexElements(a1, a2, b1, b2, t / s, s / t, 0, 0)

    return elements


# ---------------------------------------------------------------------------
# family B_ff:  d = 0, free-fermionic, three independent functions


def _family_b_ff(spec: FamilySpec):
    u0 = spec.constants["u0"]
    s2 = math.sinh(u0) ** 2

    def elements(u: Point, w: Point) -> EightVertexElements:
        p, pb = _guard(u["p"], "color p", u), _guard(u["pbar"], "color pbar", u)
        q, qb = _guard(w["p"], "color q", w), _guard(w["pbar"], "color qbar", w)
        t, s = _guard(u["t"], "gauge t", u), _guard(w["t"], "gauge s", w)
        uu, ww = u["u"], w["u"]
        sh = math.sinh
        a1 = p * sh(uu + u0) * sh(u0 - ww) / (q * s2) + qb * sh(uu) * sh(ww) / (pb * s2)
        a2 = q * sh(ww + u0) * sh(u0 - uu) / (p * s2) + pb * sh(uu) * sh(ww) / (qb * s2)
        b1 = pb * sh(uu) * sh(u0 - ww) / (q * s2) - qb * sh(u0 - uu) * sh(ww) / (p * s2)
        b2 = q * sh(ww + u0) * sh(uu) / (pb * s2) - p * sh(uu + u0) * sh(ww) / (qb * s2)
        return EightVertexElements(a1, a2, b1, b2, t / s, s / t, 0, 0)

    return elements


# ---------------------------------------------------------------------------
# family C_xyz:  symmetric eight-vertex (a1=a2, b1=b2), elliptic


def _family_c_xyz(spec: FamilySpec):
    phi_expr = spec.functions["phi"]
    phi0 = spec.constants["phi0"]
    modulus = spec.constants["k"]
    sn0 = ellip.jacobi(phi0, modulus).sn
    # constant in the d = const * a * b relation, fixed by the parameterization
    k_const = modulus * sn0 * sn0

    def elem_ab(p: Point) -> tuple[complex, complex]:
        phi = eval_expr(phi_expr, p)
        if abs(phi.imag) > 0:
            raise SingularPoint("phi must be real", p)
        return (
            ellip.jacobi(phi.real + phi0, modulus).sn / sn0,
            ellip.jacobi(phi.real, modulus).sn / sn0,
        )

    def elements(u: Point, w: Point) -> EightVertexElements:
        au, bu = elem_ab(u)
        aw, bw = elem_ab(w)
        _guard(aw, "a(w)", w)
        den_a = _guard(1.0 - k_const ** 2 * au * au * bw * bw, "a denominator", (u, w))
        den_b = _guard(1.0 - k_const ** 2 * au * aw * bu * bw, "b denominator", (u, w))
        a = (au / aw * (1.0 - bw * bw) + (1.0 - k_const ** 2 * au * au) * bu * bw) / den_a
        b = (aw * bu - au * bw) / den_b
        d = k_const * a * b
        return EightVertexElements(a, a, b, b, 1, 1, d, d)

    return elements


# ---------------------------------------------------------------------------
# family C_ff2:  a1=a2, b1=-b2, free-fermionic, two arbitrary functions


def _family_c_ff2(spec: FamilySpec):
    phi_expr = spec.functions["phi"]
    g_expr = spec.functions["g"]

    def elem(p: Point) -> tuple[complex, complex, complex]:
        phi = eval_expr(phi_expr, p)
        g = eval_expr(g_expr, p)
        r = cmath.sqrt(g * g - 1.0)
        return phi, g, r

    def elements(u: Point, w: Point) -> EightVertexElements:
        phu, gu, ru = elem(u)
        phw, gw, rw = elem(w)
        den = _guard(1.0 + ru * rw, "free-fermionic denominator", (u, w))
        a = cmath.cosh(phu - phw) * gu * gw / den
        b = cmath.sinh(phu - phw) * gu * gw / den
        d = (ru - rw) / den
        return EightVertexElements(a, a, b, -b, 1, 1, d, d)

    return elements


# ---------------------------------------------------------------------------
# family D_sym:  a1 b1 = a2 b2 case; one arbitrary function, constants x0, f0


def _dsym_elementary(e: complex, x0: float, f0: float, sign: float):
    """Elementary a1, a2, b1, b2, d and the ratio helpers Q = b1/a2, g = a1/a2.

    Cancellation-free rearrangement of the closed form: with
    s = sqrt(1-e^2), A = sqrt(1-x0^2 e^2), B = sqrt(1-(x0^2+f0^2) e^2),
    the normalizing factor obeys F^2 (1 - sign*s) (A+B) = e^2, which fixes
    F(0) = 1 without subtractive loss.
    """
    if e == 0:
        return (1.0 + 0j, 1.0 + 0j, 0j, 0j, 0j, 0j, 1.0 + 0j)
    s = cmath.sqrt(1.0 - e * e)
    A = cmath.sqrt(1.0 - x0 * x0 * e * e)
    B = cmath.sqrt(1.0 - (x0 * x0 + f0 * f0) * e * e)
    omq = e * e / (1.0 + s) if sign > 0 else 1.0 + s  # = 1 - sign*sqrt(1-e^2)
    Q = omq / e
    F = cmath.sqrt(e * e / ((A + B) * omq))
    rp = cmath.sqrt(1.0 + x0 * e)
    rm = cmath.sqrt(1.0 - x0 * e)
    a1, a2 = rp * F, rm * F
    b1, b2 = rm * Q * F, rp * Q * F
    d = f0 * F * F * Q
    g = rp / rm
    return a1, a2, b1, b2, d, Q, g


def _family_d_sym(spec: FamilySpec):
    fx_expr = spec.functions["f_x"]
    x0 = spec.constants["x0"]
    f0 = spec.constants["f0"]
    sign = spec.constants["sign"]

    def elements(u: Point, w: Point) -> EightVertexElements:
        eu = eval_expr(fx_expr, u)
        ew = eval_expr(fx_expr, w)
        a1u, a2u, b1u, b2u, du, Qu, gu = _dsym_elementary(eu, x0, f0, sign)
        a1w, a2w, b1w, b2w, dw, Qw, gw = _dsym_elementary(ew, x0, f0, sign)
        if ew == 0:
            return EightVertexElements(a1u, a2u, b1u, b2u, 1, 1, du, du)
        if eu == 0:
            return EightVertexElements(a2w, a1w, -b1w, -b2w, 1, 1, -dw, -dw)
        if eu == ew:
            if _coincident(u, w, spec.coordinates):
                return _IDENTITY_ELEMENTS
            raise SingularPoint("coinciding function values", (u, w))
        # the (du - dw)/(eu - ew) and du^2 - dw^2 combinations are removable but
        # cancellation-prone; resample rather than lose digits near them
        if abs(eu - ew) < 1e-4:
            raise SingularPoint("nearly coinciding function values", (u, w))
        den_e = eu - ew
        den_q = _guard(Qu + Qw, "b-ratio sum", (u, w))
        den_d = _guard(1.0 + du * dw, "d product", (u, w))
        den_g = _guard(1.0 + gu * gw, "a-ratio product", (u, w))
        d_uw = ((Qu - Qw) / den_q) * ((du - dw) / den_d) * ((eu + ew) * (gu + gw)) / (den_g * den_e)
        den_a = du * du - dw * dw
        if abs(den_a) < 1e-6:
            raise SingularPoint("d squared difference", (u, w))
        den_b = _guard(du * du * dw * dw - 1.0, "d squared product", (u, w))
        a1 = d_uw * (du * (a1u * a1w - b2u * b2w) + dw * (a2u * a2w - b1u * b1w)) / den_a
        a2 = d_uw * (du * (a2u * a2w - b1u * b1w) + dw * (a1u * a1w - b2u * b2w)) / den_a
        b1 = (a2u * b1w - a2w * b1u + du * dw * (a1u * b2w - a1w * b2u)) / den_b
        b2 = (a1u * b2w - a1w * b2u + du * dw * (a2u * b1w - a2w * b1u)) / den_b
        return EightVertexElements(a1, a2, b1, b2, 1, 1, d_uw, d_uw)

    return elements


# ---------------------------------------------------------------------------
# family D_colored:  a1 b2 + a2 b1 = 0 case; colored, constants x_f and a sign


def _dcol_elementary(dv: complex, fz: complex, x_f: float, sign: float):
    df = 2.0 * dv / (1.0 + dv * dv)
    gx = x_f * df + sign * cmath.sqrt(1.0 + x_f * x_f * df * df)
    one_m_fz2 = _guard(1.0 - fz * fz, "1 - f_z^2")
    a2 = cmath.sqrt((1.0 + dv * dv) / (_guard(gx, "g_x") * one_m_fz2))
    return gx * a2, a2, -gx * fz * a2, fz * a2, df, gx


def _family_d_colored(spec: FamilySpec):
    d_expr = spec.functions["d"]
    fz_expr = spec.functions["f_z"]
    x_f = spec.constants["x_f"]
    sign = spec.constants["sign_g"]

    def elements(u: Point, w: Point) -> EightVertexElements:
        du, fzu = eval_expr(d_expr, u), eval_expr(fz_expr, u)
        dw, fzw = eval_expr(d_expr, w), eval_expr(fz_expr, w)
        a1u, a2u, b1u, b2u, dfu, gxu = _dcol_elementary(du, fzu, x_f, sign)
        a1w, a2w, b1w, b2w, dfw, gxw = _dcol_elementary(dw, fzw, x_f, sign)
        den = dfu * gxw + dfw * gxu - 2.0 * x_f * dfu * dfw
        if abs(den) < _FLOOR:
            if _coincident(u, w, spec.coordinates):
                return _IDENTITY_ELEMENTS
            raise SingularPoint("shared denominator", (u, w))
        d_uw = 2.0 * (du * du - dw * dw) / ((1.0 + du * du) * (1.0 + dw * dw) * den)
        rgg = cmath.sqrt(gxu * gxw)
        pref = 2.0 / cmath.sqrt(
            (1.0 + du * du) * (1.0 + dw * dw) * (1.0 - fzu * fzu) * (1.0 - fzw * fzw)
        ) / den
        a1 = pref * (du * rgg + dw / rgg - fzu * fzw * (du / rgg + dw * rgg))
        a2 = pref * (dw * rgg + du / rgg - fzu * fzw * (dw / rgg + du * rgg))
        den_b = _guard(du * du * dw * dw - 1.0, "d squared product", (u, w))
        b1 = a2u * a2w * (gxu * fzu - gxw * fzw + du * dw * (gxu * fzw - gxw * fzu)) / den_b
        b2 = a2u * a2w * (gxu * fzw - gxw * fzu + du * dw * (gxu * fzu - gxw * fzw)) / den_b
        return EightVertexElements(a1, a2, b1, b2, 1, 1, d_uw, d_uw)

    return elements


# ---------------------------------------------------------------------------
# family E_general:  general free-fermionic case, two functions, two constants


def _e_elementary(dv: complex, fg: complex, x_f: float, xb: float, sign: float):
    df = 2.0 * dv / (1.0 + dv * dv)
    gt = cmath.sqrt(1.0 - (xb * xb - x_f * x_f) * df * df)
    gx_num = x_f * df + sign * gt
    mix = _guard(1.0 - xb * fg * df, "1 - xbar0 f_g d_f")
    gx = gx_num / mix
    fp = (-xb * df + fg) / (-mix)
    one_m_fg2 = _guard(1.0 - fg * fg, "1 - f_g^2")
    a2 = cmath.sqrt((1.0 + dv * dv) * mix / (one_m_fg2 * _guard(gx, "g_x")))
    return gx * a2, a2, fg * gx * a2, fp * a2, df, gx, fp, mix


def _family_e(spec: FamilySpec):
    d_expr = spec.functions["d"]
    fg_expr = spec.functions["f_g"]
    x_f = spec.constants["x_f"]
    xb = spec.constants["xbar0"]
    sign = spec.constants["sign_G"]

    def elements(u: Point, w: Point) -> EightVertexElements:
        du, fgu = eval_expr(d_expr, u), eval_expr(fg_expr, u)
        dw, fgw = eval_expr(d_expr, w), eval_expr(fg_expr, w)
        a1u, a2u, b1u, b2u, dfu, gxu, fpu, mixu = _e_elementary(du, fgu, x_f, xb, sign)
        a1w, a2w, b1w, b2w, dfw, gxw, fpw, mixw = _e_elementary(dw, fgw, x_f, xb, sign)
        den = dfu * gxw + dfw * gxu - 2.0 * x_f * dfu * dfw
        if abs(den) < _FLOOR:
            if _coincident(u, w, spec.coordinates):
                return _IDENTITY_ELEMENTS
            raise SingularPoint("shared denominator", (u, w))
        d_uw = sign * 2.0 * (du * du - dw * dw) / ((1.0 + du * du) * (1.0 + dw * dw) * den)
        pref = 2.0 * cmath.sqrt(mixu * mixw) / cmath.sqrt(
            gxu * gxw
            * (1.0 + du * du) * (1.0 + dw * dw)
            * (1.0 - fgu * fgu) * (1.0 - fgw * fgw)
        ) / den
        a1 = pref * (du * (gxu * gxw - fpu * fpw) + dw * (1.0 - fgu * fgw * gxu * gxw))
        a2 = pref * (dw * (gxu * gxw - fpu * fpw) + du * (1.0 - fgu * fgw * gxu * gxw))
        den_b = _guard(du * du * dw * dw - 1.0, "d squared product", (u, w))
        b1 = a2u * a2w * (gxw * fgw - gxu * fgu + du * dw * (gxu * fpw - gxw * fpu)) / den_b
        b2 = a2u * a2w * (gxu * fpw - gxw * fpu + du * dw * (gxw * fgw - gxu * fgu)) / den_b
        return EightVertexElements(a1, a2, b1, b2, 1, 1, d_uw, d_uw)

    return elements


# ---------------------------------------------------------------------------
# appendix presets


def _preset_xyz8v(spec: FamilySpec):
    lam = spec.constants["lam"]
    modulus = spec.constants["k"]
    gamma = spec.constants["gamma"]
    sn0 = ellip.jacobi(lam, modulus).sn

    def elements(u: Point, w: Point) -> EightVertexElements:
        du = u["u"] - w["u"]
        s_shift = ellip.jacobi(du + lam, modulus).sn
        s_plain = ellip.jacobi(du, modulus).sn
        a = s_shift / sn0
        b = s_plain / sn0
        d = modulus * s_shift * s_plain
        return EightVertexElements(
            a, a, b, b, 1, 1, math.exp(gamma / 2) * d, math.exp(-gamma / 2) * d
        )

    return elements


def _preset_ff2p(spec: FamilySpec):
    gamma = spec.constants["gamma"]

    def elements(u: Point, w: Point) -> EightVertexElements:
        du = u["u"] - w["u"]
        dv = u["v"] - w["v"]
        a = math.cosh(du)
        b = math.sinh(du)
        c = math.cos(dv)
        d = math.sin(dv)
        return EightVertexElements(
            a, a, b, -b, c, c, math.exp(gamma / 2) * d, math.exp(-gamma / 2) * d
        )

    return elements


def _preset_ising(spec: FamilySpec):
    u0 = spec.constants["u0"]
    modulus = spec.constants["k"]
    gamma = spec.constants["gamma"]
    sign = spec.constants["sign"]
    t0 = ellip.jacobi(u0, modulus)

    def elements(u: Point, w: Point) -> EightVertexElements:
        du = u["u"] - w["u"]
        t = ellip.jacobi(du, modulus)
        cn = _guard(t.cn, "cn(u)", (u, w))
        shear = sign * t0.dn * t.sn / t0.sn
        a1 = t.dn / cn + shear
        a2 = t.dn / cn - shear
        b = t.sn / t0.sn
        d = t.dn * t.sn / cn
        return EightVertexElements(
            a1, a2, b, b, 1, 1, math.exp(gamma / 2) * d, math.exp(-gamma / 2) * d
        )

    return elements


def _preset_colored(spec: FamilySpec):
    modulus = spec.constants["k"]

    def elements(u: Point, w: Point) -> EightVertexElements:
        du = u["u"] - w["u"]
        p, q = u["p"], w["p"]
        e = ellip.e_fn(du, modulus)
        half = ellip.jacobi(du / 2.0, modulus)
        s2, c2, d2 = half.sn, half.cn, half.dn
        # (1 - e)/(2 sn(u/2)) in a form regular at u = 0
        c_entry = 1j * d2 * (s2 * d2 - 1j * c2) / (1.0 - modulus ** 2 * s2 ** 4)
        root = cmath.sqrt((1.0 - p * p) * (1.0 - q * q))
        a1 = 1.0 - e * p * q
        a2 = e - p * q
        b1 = p - q * e
        b2 = q - p * e
        c = root * c_entry
        d = modulus * root * s2 * (1.0 + e) / 2.0
        return EightVertexElements(a1, a2, b1, b2, c, c, d, d)

    return elements


_BUILDERS = {
    "A": _family_a,
    "B_xxz": _family_b_xxz,
    "B_ff": _family_b_ff,
    "C_xyz": _family_c_xyz,
    "C_ff2": _family_c_ff2,
    "D_sym": _family_d_sym,
    "D_colored": _family_d_colored,
    "E_general": _family_e,
    "preset_xyz8v": _preset_xyz8v,
    "preset_ff2p": _preset_ff2p,
    "preset_ising": _preset_ising,
    "preset_colored": _preset_colored,
}


def build_model(spec: FamilySpec) -> RMatrixModel:
    elements = _BUILDERS[spec.branch](spec)
    return RMatrixModel(
        dim=4,
        branch=spec.branch,
        coordinates=spec.coordinates,
        zero=dict(spec.zero),
        elements=elements,
        normalized=(spec.branch != "preset_colored"),
        spec=spec,
        meta={"constants": dict(spec.constants)},
    )


def preset(name: str, params: Mapping[str, float]) -> RMatrixModel:
    """Build one of the fixed closed-form models: xyz8v, ff2p, ising, colored."""
    branch = f"preset_{name}"
    if branch not in BRANCH_SCHEMAS:
        raise ConfigError(f"unknown preset {name!r}")
    spec = FamilySpec.from_config({"family": branch, "constants": dict(params)})
    return build_model(spec)


def gauge_transform(model: RMatrixModel, f0: Expr, f1: Expr) -> RMatrixModel:
    """Rescale the basis of each tensor factor by (f0, f1).

    Only the c and d entries change; a and b entries are untouched.  The
    Yang-Baxter property and the free-fermionic combination c1 c2 + d1 d2 are
    invariant.
    """
    if model.dim != 4:
        raise ConfigError("gauge_transform applies to 4x4 models")
    inner = model.elements

    def ratio(p: Point) -> complex:
        v0 = eval_expr(f0, p)
        v1 = eval_expr(f1, p)
        if abs(v0) < _FLOOR or abs(v1) < _FLOOR:
            raise SingularPoint("zero gauge function", p)
        return v0 / v1

    def elements(u: Point, w: Point) -> EightVertexElements:
        el = inner(u, w)
        ru, rw = ratio(u), ratio(w)
        return EightVertexElements(
            el.a1,
            el.a2,
            el.b1,
            el.b2,
            el.c1 * ru / rw,
            el.c2 * rw / ru,
            el.d1 * ru * rw,
            el.d2 / (ru * rw),
            )

    return RMatrixModel(
        dim=4,
        branch=model.branch,
        coordinates=model.coordinates,
        zero=dict(model.zero),
        elements=elements,
        normalized=model.normalized,
        spec=model.spec,
        gauge=(f0, f1),
        meta=dict(model.meta),
    )
