"""The 15-vertex 9x9 colored R-matrix, its spin-operator form, and the
nearest-neighbor Hamiltonian carried by its first-order expansion.

The model keeps the overall scalar a1(u,w) = f(u) + x_f (1 - f(w)) as
constructed (it is reported, not divided out); P R(u,u) equals that scalar
times the identity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import ConfigError, NonConvergence, SingularPoint
from .exprlang import Expr, eval_expr, free_vars, parse
from .tensor_core import permutation_matrix

_FLOOR = 1e-12
_ZERO_TOL = 1e-10

Point = Mapping[str, float]


# ---------------------------------------------------------------------------
# spin-1 operator set


def _unit(i: int, j: int) -> np.ndarray:
    m = np.zeros((3, 3), dtype=complex)
    m[i, j] = 1.0
    return m


@dataclass(frozen=True)
class SpinOperatorSet:
    """Normalized spin-1 generators and the projector/ladder products built
    from them: e_plus + e_zero + e_minus is the identity, and every s_xy is
    the matrix product of the two single-site ladders named by its suffix."""

    j_plus: np.ndarray
    j_minus: np.ndarray
    j_z: np.ndarray
    e_plus: np.ndarray
    e_zero: np.ndarray
    e_minus: np.ndarray
    s_zp: np.ndarray
    s_mz: np.ndarray
    s_pz: np.ndarray
    s_zm: np.ndarray
    s_pp: np.ndarray
    s_mm: np.ndarray


def _make_spin_ops() -> SpinOperatorSet:
    rt2 = math.sqrt(2.0)
    j_plus = (_unit(0, 1) + _unit(1, 2)) / rt2
    j_minus = (_unit(1, 0) + _unit(2, 1)) / rt2
    j_z = np.diag([1.0, 0.0, -1.0]).astype(complex)
    s_plus = rt2 * j_plus
    s_minus = rt2 * j_minus
    s_z = j_z
    return SpinOperatorSet(
        j_plus=j_plus,
        j_minus=j_minus,
        j_z=j_z,
        e_plus=s_z @ (s_z + np.eye(3)) / 2.0,
        e_zero=np.eye(3, dtype=complex) - s_z @ s_z,
        e_minus=s_z @ (s_z - np.eye(3)) / 2.0,
        s_zp=s_z @ s_plus,
        s_mz=s_minus @ s_z,
        s_pz=s_plus @ s_z,
        s_zm=s_z @ s_minus,
        s_pp=s_plus @ s_plus,
        s_mm=s_minus @ s_minus,
    )


SPIN = _make_spin_ops()


def _pair(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # The 9-dim basis is enumerated (i, j) -> 3i + j; in the operator sums
    # below the left factor of each pair acts on the j slot.
    return np.kron(b, a)


# ---------------------------------------------------------------------------
# the solution


@dataclass(frozen=True)
class FifteenVertexElements:
    a1: complex
    a2: complex
    a3: complex
    b1: complex
    b2: complex
    b3: complex
    b1b: complex
    b2b: complex
    b3b: complex
    c1: complex
    c2: complex
    c3: complex
    c1b: complex
    c2b: complex
    c3b: complex

    def to_matrix(self) -> np.ndarray:
        r = np.zeros((9, 9), dtype=complex)
        idx = lambda i, j: 3 * i + j
        r[idx(0, 0), idx(0, 0)] = self.a1
        r[idx(1, 1), idx(1, 1)] = self.a2
        r[idx(2, 2), idx(2, 2)] = self.a3
        r[idx(0, 1), idx(0, 1)] = self.b1
        r[idx(1, 0), idx(1, 0)] = self.b1b
        r[idx(0, 2), idx(0, 2)] = self.b3
        r[idx(2, 0), idx(2, 0)] = self.b3b
        r[idx(1, 2), idx(1, 2)] = self.b2
        r[idx(2, 1), idx(2, 1)] = self.b2b
        r[idx(1, 0), idx(0, 1)] = self.c1
        r[idx(0, 1), idx(1, 0)] = self.c1b
        r[idx(2, 0), idx(0, 2)] = self.c3
        r[idx(0, 2), idx(2, 0)] = self.c3b
        r[idx(2, 1), idx(1, 2)] = self.c2
        r[idx(1, 2), idx(2, 1)] = self.c2b
        return r


@dataclass(frozen=True)
class R33Spec:
    f: Expr
    c1: Expr
    c3: Expr
    x_f: float
    alpha: int
    alphabar: int
    gamma: float
    eps1: float | None = None
    eps3: float | None = None
    gauge: tuple[Expr, Expr] | None = None
    coordinates: tuple[str, ...] = ("u",)
    zero: dict[str, float] = field(default_factory=lambda: {"u": 0.0})

    @classmethod
    def from_config(cls, doc: Mapping) -> "R33Spec":
        consts = doc.get("constants", {})
        fns = doc.get("functions", {})
        for name in ("x_f", "alpha", "alphabar", "gamma"):
            if name not in consts:
                raise ConfigError(f"r33: missing constant {name!r}")
        alpha = int(consts["alpha"])
        alphabar = int(consts["alphabar"])
        if alpha not in (1, -1) or alphabar not in (1, -1):
            raise ConfigError("alpha and alphabar must be +1 or -1")
        gamma = float(consts["gamma"])
        if gamma == 0:
            raise ConfigError("gamma must be nonzero")
        if "f" not in fns:
            raise ConfigError("r33: missing function 'f'")
        eps1 = consts.get("eps1")
        eps3 = consts.get("eps3")
        have_exprs = "c1" in fns or "c3" in fns
        if have_exprs and (eps1 is not None or eps3 is not None):
            warnings.warn("r33: both color expressions and eps constants given; "
                          "expressions win, eps ignored")
            eps1 = eps3 = None
        if "c1" in fns:
            c1 = parse(fns["c1"])
        elif eps1 is not None:
            c1 = parse(f"exp({float(eps1) / 2.0!r})")
        else:
            raise ConfigError("r33: provide function 'c1' or constant 'eps1'")
        if "c3" in fns:
            c3 = parse(fns["c3"])
        elif eps3 is not None:
            c3 = parse(f"exp({float(eps3) / 2.0!r})")
        else:
            raise ConfigError("r33: provide function 'c3' or constant 'eps3'")
        f = parse(fns["f"])
        gauge = None
        if "gauge" in doc:
            g = doc["gauge"]
            gauge = (parse(g["s_ratio"]), parse(g["t_ratio"]))
        coordinates = tuple(doc.get("coordinates", ()))
        if not coordinates:
            names = set(free_vars(f)) | set(free_vars(c1)) | set(free_vars(c3))
            coordinates = tuple(sorted(names)) or ("u",)
        zero = {c: 0.0 for c in coordinates}
        zero.update({k: float(v) for k, v in doc.get("zero", {}).items()})
        spec = cls(f, c1, c3, float(consts["x_f"]), alpha, alphabar, gamma,
                   eps1=None if eps1 is None else float(eps1),
                   eps3=None if eps3 is None else float(eps3),
                   gauge=gauge, coordinates=coordinates, zero=zero)
        f0 = eval_expr(f, zero)
        if abs(f0 - 1.0) > _ZERO_TOL:
            raise ConfigError(f"r33: f must equal 1 at the zero point, got {f0}")
        return spec


@dataclass(frozen=True)
class R33Model:
    """9x9 model; duck-compatible with the 4x4 RMatrixModel for the verifier."""

    dim: int
    branch: str
    coordinates: tuple[str, ...]
    zero: dict[str, float]
    spec: R33Spec
    elements15: Callable[[Point, Point], FifteenVertexElements]
    normalized: bool = False
    meta: dict = field(default_factory=dict)

    def matrix(self, u: Point, w: Point) -> np.ndarray:
        return self.elements15(u, w).to_matrix()

    def scalar(self, u: Point) -> complex:
        """The coincidence scalar: P R(u,u) equals this times the identity."""
        fu = eval_expr(self.spec.f, u)
        return self.spec.x_f + fu * (1.0 - self.spec.x_f)

    def point(self, **coords: float) -> dict[str, float]:
        p = dict(self.zero)
        p.update(coords)
        return p


def eval_r33(spec: R33Spec, u: Point, w: Point) -> FifteenVertexElements:
    import cmath

    x_f = spec.x_f
    fu, fw = eval_expr(spec.f, u), eval_expr(spec.f, w)
    c1u, c1w = eval_expr(spec.c1, u), eval_expr(spec.c1, w)
    c3u, c3w = eval_expr(spec.c3, u), eval_expr(spec.c3, w)
    for v, name, pt in ((c1u, "c1", u), (c1w, "c1", w), (c3u, "c3", u), (c3w, "c3", w)):
        if abs(v) < _FLOOR:
            raise SingularPoint(f"color function {name} vanishes", pt)
    xu = x_f + fu * (1.0 - x_f)
    xw = x_f + fw * (1.0 - x_f)
    diff = fu - fw
    avg = lambda sgn: ((sgn + 1) * (fu + x_f * (1 - fw)) + (1 - sgn) * (fw + x_f * (1 - fu))) / 2.0
    el = FifteenVertexElements(
        a1=fu + x_f * (1.0 - fw),
        a2=(c1u ** 2 / c1w ** 2) * avg(spec.alpha),
        a3=(c3u ** 2 / c3w ** 2) * avg(spec.alphabar),
        b1=c1u ** 2 * diff,
        b3=x_f * c3u ** 2 * diff,
        b1b=x_f * diff / c1w ** 2,
        b2=x_f * spec.gamma * c3u ** 2 * diff / c1w ** 2,
        b3b=diff / c3w ** 2,
        b2b=c1u ** 2 * diff / (spec.gamma * c3w ** 2),
        c1=c1u * cmath.sqrt(xu) * cmath.sqrt(xw) / c1w,
        c3=c3u * cmath.sqrt(xu) * cmath.sqrt(xw) / c3w,
        c1b=c1u * cmath.sqrt(xu) * cmath.sqrt(xw) / c1w,
        c3b=c3u * cmath.sqrt(xu) * cmath.sqrt(xw) / c3w,
        c2=c1u * c3u * xu / (c1w * c3w),
        c2b=c1u * c3u * xw / (c1w * c3w),
    )
    if spec.gauge is not None:
        g1, g2 = spec.gauge
        s = eval_expr(g1, u) / eval_expr(g1, w)
        t = eval_expr(g2, u) / eval_expr(g2, w)
        if abs(s) < _FLOOR or abs(t) < _FLOOR:
            raise SingularPoint("zero gauge ratio", (u, w))
        el = FifteenVertexElements(
            a1=el.a1, a2=el.a2, a3=el.a3,
            b1=el.b1, b2=el.b2, b3=el.b3,
            b1b=el.b1b, b2b=el.b2b, b3b=el.b3b,
            c1=s * el.c1, c1b=el.c1b / s,
            c3=t * el.c3, c3b=el.c3b / t,
            c2=s * t * el.c2, c2b=el.c2b / (s * t),
        )
    return el


def build_r33_model(spec: R33Spec) -> R33Model:
    return R33Model(
        dim=9,
        branch="r33",
        coordinates=spec.coordinates,
        zero=dict(spec.zero),
        spec=spec,
        elements15=lambda u, w: eval_r33(spec, u, w),
        meta={"x_f": spec.x_f, "alpha": spec.alpha, "alphabar": spec.alphabar,
              "gamma": spec.gamma},
    )


# ---------------------------------------------------------------------------
# structural relations satisfied by the solution


def check_r33_relations(model: R33Model, samples: int = 30, seed: int = 0) -> dict[str, float]:
    """Max residual of each structural relation over random sample triples.

    Relations checked: the c-entry cocycle, the six pairwise b-exchange
    identities, the w-independence of the bbar/b ratios, and the constancy of
    the cross b ratios.  Singular draws are resampled.
    """
    rng = np.random.default_rng(seed)
    coords = model.coordinates

    def draw() -> dict[str, float]:
        while True:
            p = {c: float(rng.uniform(-1, 1)) for c in coords}
            if all(abs(v) >= 1e-3 for v in p.values()):
                return p

    def rel(x, scale) -> float:
        return abs(x) / max(scale, 1e-300)

    out: dict[str, float] = {}
    ratio_samples: dict[str, list[complex]] = {"b2b_over_b1": [], "b3_over_b2": [], "b3b_over_b1b": []}
    for _ in range(samples):
        for _attempt in range(10):
            try:
                p1, p2, p3 = draw(), draw(), draw()
                e12 = model.elements15(p1, p2)
                e13 = model.elements15(p1, p3)
                e23 = model.elements15(p2, p3)
                break
            except SingularPoint:
                continue
        else:
            raise SingularPoint("could not draw a regular sample triple")

        def track(name, value, scale):
            out[name] = max(out.get(name, 0.0), rel(value, scale))

        for i, (c, cb) in enumerate(
            ((lambda e: e.c1, lambda e: e.c1b),
             (lambda e: e.c2, lambda e: e.c2b),
             (lambda e: e.c3, lambda e: e.c3b)),
            start=1,
        ):
            lhs = c(e12) * c(e23) * cb(e13)
            rhs = c(e13) * cb(e12) * cb(e23)
            track(f"c{i}_cocycle", lhs - rhs, max(abs(lhs), abs(rhs)))

        six = (
            ("b_exchange_1", e23.c2, e12.b1 * e13.b3 - e13.b1 * e12.b3),
            ("b_exchange_2", e23.c3, e12.b1b * e13.b2 - e13.b1b * e12.b2),
            ("b_exchange_3", e23.c1, e12.b3b * e13.b2b - e13.b3b * e12.b2b),
            ("b_exchange_4", e12.c1, e23.b3 * e13.b2 - e13.b3 * e23.b2),
            ("b_exchange_5", e12.c2b, e23.b1b * e13.b3b - e13.b1b * e23.b3b),
            ("b_exchange_6", e12.c3, e23.b1 * e13.b2b - e13.b1 * e23.b2b),
        )
        for name, cfac, comb in six:
            scale = max(abs(e12.b1), abs(e13.b1), 1.0) ** 2 * max(abs(cfac), 1.0)
            track(name, cfac * comb, scale)

        # ratios of full functions that must not depend on the second point
        zero = model.zero
        eu = model.elements15(p1, zero)
        track("ratio_b1b_b2", e12.b1b / e12.b2 - eu.b1b / eu.b2, max(abs(eu.b1b / eu.b2), 1e-30))
        track("ratio_b2b_b3b", e12.b2b / e12.b3b - eu.b2b / eu.b3b, max(abs(eu.b2b / eu.b3b), 1e-30))
        track("ratio_b3_b1", e12.b3 / e12.b1 - eu.b3 / eu.b1, max(abs(eu.b3 / eu.b1), 1e-30))
        track(
            "ratio_c2b_c2",
            e12.c2b / e12.c2 - (eu.c2b * model.elements15(p2, zero).c2)
            / (eu.c2 * model.elements15(p2, zero).c2b),
            1.0,
        )
        ratio_samples["b2b_over_b1"].append(eu.b2b / eu.b1)
        ratio_samples["b3_over_b2"].append(eu.b3 / eu.b2)
        ratio_samples["b3b_over_b1b"].append(eu.b3b / eu.b1b)

    for name, vals in ratio_samples.items():
        arr = np.array(vals)
        out[f"const_{name}"] = float(np.std(arr.real) + np.std(arr.imag))
    return out


# ---------------------------------------------------------------------------
# Hamiltonian density operators


def _check_signs(alpha: int, alphabar: int, gamma: float) -> None:
    if alpha not in (1, -1) or alphabar not in (1, -1):
        raise ValueError("alpha and alphabar must be +1 or -1")
    if gamma == 0:
        raise ValueError("gamma must be nonzero")


def build_P(alpha: int, alphabar: int, gamma: float, eps1: float, eps3: float) -> np.ndarray:
    """Graded-permutation-like operator carried by the first-order expansion.

    At gamma = +-1 and eps_i integer multiples of pi it squares to the
    identity; at the trivial values it is the plain two-site swap.
    """
    _check_signs(alpha, alphabar, gamma)
    s = SPIN
    return (
        _pair(s.e_plus, s.e_plus)
        + alpha * _pair(s.e_zero, s.e_zero)
        + alphabar * _pair(s.e_minus, s.e_minus)
        + math.exp(eps1) * _pair(s.s_zp, s.s_mz)
        + math.exp(-eps1) * _pair(s.s_mz, s.s_zp)
        + gamma * math.exp(eps3 - eps1) * _pair(s.s_pz, s.s_zm)
        + math.exp(eps1 - eps3) / gamma * _pair(s.s_zm, s.s_pz)
        + math.exp(eps3) * _pair(s.s_pp, s.s_mm)
        + math.exp(-eps3) * _pair(s.s_mm, s.s_pp)
    )


def build_Pbar(alpha: int, alphabar: int, gamma: float, eps1: float, eps3: float) -> np.ndarray:
    """Asymmetric companion of build_P; present whenever x_f differs from 1.

    The coefficients are fixed by differentiating the constructed solution at
    coinciding spectral points, which puts weight 1 (not 2) on the trailing
    ladder-product group.
    """
    _check_signs(alpha, alphabar, gamma)
    s = SPIN
    return (
        _pair(s.e_plus, s.e_plus)
        + (1 + alpha) / 2.0 * _pair(s.e_zero, s.e_zero)
        + (1 + alphabar) / 2.0 * _pair(s.e_minus, s.e_minus)
        + (
            _pair(s.e_zero, s.e_plus)
            + _pair(s.e_plus, s.e_zero)
            + _pair(s.e_minus, s.e_plus)
            + _pair(s.e_plus, s.e_minus)
        )
        / 2.0
        + _pair(s.e_zero, s.e_minus)
        + math.exp(eps3) * _pair(s.s_pp, s.s_mm)
        + math.exp(-eps1) * _pair(s.s_mz, s.s_zp)
        + gamma * math.exp(eps3 - eps1) * _pair(s.s_pz, s.s_zm)
    )


def hamiltonian_operator(spec: R33Spec, u_value: float) -> np.ndarray:
    """Analytic [P + (x_f - 1) Pbar] / (1 + u (1 - x_f)) for constant colors."""
    eps1, eps3 = _constant_eps(spec)
    scale = 1.0 + u_value * (1.0 - spec.x_f)
    p = build_P(spec.alpha, spec.alphabar, spec.gamma, eps1, eps3)
    pbar = build_Pbar(spec.alpha, spec.alphabar, spec.gamma, eps1, eps3)
    return (p + (spec.x_f - 1.0) * pbar) / scale


def _constant_eps(spec: R33Spec) -> tuple[float, float]:
    out = []
    for name, e in (("c1", spec.c1), ("c3", spec.c3)):
        if free_vars(e):
            raise ConfigError(f"Hamiltonian extraction needs constant colors; {name} varies")
        v = eval_expr(e, {})
        if abs(v.imag) > 1e-14 or v.real <= 0:
            raise ConfigError(f"color {name} must be a positive constant")
        out.append(2.0 * math.log(v.real))
    return out[0], out[1]


def extract_hamiltonian(model: R33Model, u: Point | float, h: float = 1e-5):
    """Two-site Hamiltonian density from the first-order expansion of the
    normalized checked matrix at coinciding points.

    Central differences at steps h and h/2 combined by Richardson; returns
    ``(H, err_estimate)``.  Raises when the two estimates disagree so much
    that the step is evidently in the cancellation regime.
    """
    spec = model.spec
    _constant_eps(spec)  # validates the constant-color convention
    for t in (0.0, 0.37, -0.58):
        if abs(eval_expr(spec.f, {c: t for c in spec.coordinates}) - (1.0 + t)) > 1e-12:
            raise ConfigError("Hamiltonian extraction assumes the rapidity map f(u) = 1 + u")
    if isinstance(u, (int, float)):
        u = model.point(u=float(u))
    uval = u["u"]
    perm = permutation_matrix(3)
    scale = model.scalar(u)

    def central(step: float) -> np.ndarray:
        up = dict(u)
        um = dict(u)
        up["u"] = uval + step
        um["u"] = uval - step
        rp = perm @ model.matrix(u, up)
        rm = perm @ model.matrix(u, um)
        return -(rp - rm) / (2.0 * step) / scale

    d1 = central(h)
    d2 = central(h / 2.0)
    err = float(np.max(np.abs(d2 - d1)))
    magnitude = max(float(np.max(np.abs(d2))), 1e-30)
    if err > 1e-2 * magnitude:
        raise NonConvergence(
            f"finite-difference estimates at h and h/2 disagree by {err:.2e}; "
            "step too small or model not smooth here"
        )
    return (4.0 * d2 - d1) / 3.0, err
