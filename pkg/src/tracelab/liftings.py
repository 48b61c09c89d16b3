"""Inhomogeneous lifting constructions on the half-space and their decay laws.

All constructions share two pinned smooth profiles built from the standard
exp(-1/s) smoothstep: psi (identically 1 on [0,1], 0 beyond 2) and its
complement.  Declared boundary traces are always re-verified by numerically
differentiating the field in t near the boundary.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import sympy as sp

from .extension import ExtensionField, TQuadrature, _order_multiindices
from .grid import GridFunction, GridSpec, MultiIndex, lp_norm, partial_derivative
from .kernels import KernelKind

MAX_PROFILE_ORDER = 4


# ---------------------------------------------------------------------------
# smooth cutoff profiles
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def _smoothstep_derivative(order: int):
    """d^order/ds^order of S(s) = e^{-1/s} / (e^{-1/s} + e^{-1/(1-s)}) on (0,1)."""
    s = sp.Symbol("s", positive=True)
    a = sp.exp(-1 / s)
    b = sp.exp(-1 / (1 - s))
    S = a / (a + b)
    return sp.lambdify(s, sp.diff(S, s, order), modules="numpy")


def _smoothstep(s: np.ndarray, order: int) -> np.ndarray:
    """Vectorized smoothstep derivative, exact 0/1 plateaus outside (0,1)."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    if order == 0:
        out[s >= 1.0] = 1.0
    inner = (s > 1e-6) & (s < 1.0 - 1e-6)
    if np.any(inner):
        with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
            vals = _smoothstep_derivative(order)(s[inner])
        out[inner] = np.nan_to_num(vals, nan=0.0, posinf=0.0, neginf=0.0)
    return out


@dataclass(frozen=True)
class CutoffProfile:
    """Smooth transition profile in t with analytic derivatives to order 4.

    name "psi": 1 on [0,1], smooth descent, 0 on [2, inf).
    name "ramp": the complement 1 - psi: 0 on [0,1], 1 on [2, inf).
    """

    name: str = "psi"

    def __post_init__(self):
        if self.name not in ("psi", "ramp"):
            raise ValueError(f"unknown profile {self.name!r}")

    def __call__(self, t, order: int = 0) -> np.ndarray:
        if not 0 <= order <= MAX_PROFILE_ORDER:
            raise ValueError(f"profile derivative order {order} out of range")
        t = np.asarray(t, dtype=float)
        # psi(t) = S(2 - t) on [1,2]; d^k -> (-1)^k S^(k)(2 - t)
        vals = (-1.0) ** order * _smoothstep(2.0 - t, order)
        if self.name == "ramp":
            if order == 0:
                vals = 1.0 - vals
            else:
                vals = -vals
        return vals


PSI = CutoffProfile("psi")
PHI = CutoffProfile("psi")  # phi(0)=1 with phi^(i)(0)=0: the same profile serves
RAMP = CutoffProfile("ramp")


# ---------------------------------------------------------------------------
# field evaluators
# ---------------------------------------------------------------------------


class ProductField:
    """v(x, t) = g(x) h(t) with h supplied as (t, order) -> scalar."""

    def __init__(self, g: GridFunction, h):
        self.g = g
        self.h = h
        self.spec = g.spec
        self._dg: dict[tuple[int, ...], GridFunction] = {}

    def _space(self, beta: tuple[int, ...]) -> GridFunction:
        if beta not in self._dg:
            self._dg[beta] = (
                self.g if sum(beta) == 0 else partial_derivative(self.g, MultiIndex(beta, 0))
            )
        return self._dg[beta]

    def derivative(self, alpha: MultiIndex, t: float) -> GridFunction:
        return self._space(alpha.beta) * float(self.h(t, alpha.l))

    def __call__(self, t: float) -> GridFunction:
        return self.derivative(MultiIndex((0,) * self.spec.n, 0), t)


class CutoffHeatField:
    """F(x, t) = psi(t) (W_t * f)(x)."""

    def __init__(self, f: GridFunction, profile: CutoffProfile = PSI):
        self.spec = f.spec
        self.profile = profile
        self.inner = ExtensionField(f, KernelKind.GAUSS_WEIERSTRASS)

    def derivative(self, alpha: MultiIndex, t: float) -> GridFunction:
        acc = np.zeros(self.spec.shape)
        for i in range(alpha.l + 1):
            c = math.comb(alpha.l, i) * float(self.profile(t, i))
            if c != 0.0:
                acc += c * self.inner.derivative(MultiIndex(alpha.beta, alpha.l - i), t).values
        return GridFunction(self.spec, acc)

    def __call__(self, t: float) -> GridFunction:
        return self.derivative(MultiIndex((0,) * self.spec.n, 0), t)


class MomentField:
    """u_j(x, t) = t^j / j! (W_t * f_j)(x)."""

    def __init__(self, f_j: GridFunction, j: int):
        if j < 0:
            raise ValueError("moment order must be nonnegative")
        self.spec = f_j.spec
        self.j = j
        self.inner = ExtensionField(f_j, KernelKind.GAUSS_WEIERSTRASS)

    def _power(self, t: float, r: int) -> float:
        # d^r/dt^r of t^j / j!
        if r > self.j:
            return 0.0
        return t ** (self.j - r) / math.factorial(self.j - r)

    def derivative(self, alpha: MultiIndex, t: float) -> GridFunction:
        acc = np.zeros(self.spec.shape)
        for r in range(alpha.l + 1):
            c = math.comb(alpha.l, r) * self._power(t, r)
            if c != 0.0:
                acc += c * self.inner.derivative(MultiIndex(alpha.beta, alpha.l - r), t).values
        return GridFunction(self.spec, acc)

    def __call__(self, t: float) -> GridFunction:
        return self.derivative(MultiIndex((0,) * self.spec.n, 0), t)


class ScaledCutoffField:
    """w(x, t) = base(x, t) * profile(scale * t)."""

    def __init__(self, base, profile: CutoffProfile, scale: float):
        self.base = base
        self.profile = profile
        self.scale = scale
        self.spec = base.spec

    def derivative(self, alpha: MultiIndex, t: float) -> GridFunction:
        acc = np.zeros(self.spec.shape)
        for i in range(alpha.l + 1):
            c = (
                math.comb(alpha.l, i)
                * self.scale**i
                * float(self.profile(self.scale * t, i))
            )
            if c != 0.0:
                acc += c * self.base.derivative(MultiIndex(alpha.beta, alpha.l - i), t).values
        return GridFunction(self.spec, acc)

    def __call__(self, t: float) -> GridFunction:
        return self.derivative(MultiIndex((0,) * self.spec.n, 0), t)


class SumField:
    def __init__(self, parts):
        self.parts = list(parts)
        self.spec = self.parts[0].spec

    def derivative(self, alpha: MultiIndex, t: float) -> GridFunction:
        acc = np.zeros(self.spec.shape)
        for p in self.parts:
            acc += p.derivative(alpha, t).values
        return GridFunction(self.spec, acc)

    def __call__(self, t: float) -> GridFunction:
        return self.derivative(MultiIndex((0,) * self.spec.n, 0), t)


# ---------------------------------------------------------------------------
# norms and traces
# ---------------------------------------------------------------------------


def field_tensor_norm(field, order: int, t: float) -> GridFunction:
    spec = field.spec
    acc = np.zeros(spec.shape)
    for alpha, mult in _order_multiindices(spec.n, order):
        acc += mult * field.derivative(alpha, t).values ** 2
    return GridFunction(spec, np.sqrt(acc))


def field_seminorm(field, order: int, tq: TQuadrature, p: float = 1.0) -> float:
    """Interior geometric-quadrature value of (int t^a |grad^order w|^p)^{1/p}."""
    total = 0.0
    for t, w in zip(tq.midpoints(), tq.weights()):
        total += w * lp_norm(field_tensor_norm(field, order, t), p) ** p
    return total ** (1.0 / p)


def field_l1a(field, tq: TQuadrature) -> float:
    return sum(
        w * lp_norm(field(t), 1.0) for t, w in zip(tq.midpoints(), tq.weights())
    )


_CENTRAL_STENCILS = {
    0: ((0, 1.0),),
    1: ((-1, -0.5), (1, 0.5)),
    2: ((-1, 1.0), (0, -2.0), (1, 1.0)),
    3: ((-2, -0.5), (-1, 1.0), (1, -1.0), (2, 0.5)),
    4: ((-2, 1.0), (-1, -4.0), (0, 6.0), (1, -4.0), (2, 1.0)),
}


def normal_derivative_trace(field, j: int, t0: float = 1e-3, h: float | None = None) -> GridFunction:
    """Numerical d^j w/dt^j at t0 by central differences with step t0/4."""
    if j not in _CENTRAL_STENCILS:
        raise ValueError(f"trace order {j} out of range")
    if h is None:
        h = t0 / 4
    spec = field.spec
    acc = np.zeros(spec.shape)
    for offset, coeff in _CENTRAL_STENCILS[j]:
        acc += coeff * field(t0 + offset * h).values
    return GridFunction(spec, acc / h**j)


def trace_error(field, j: int, expected: GridFunction, t0: float = 1e-3) -> float:
    """Relative L^1 mismatch of the numerically measured j-th trace."""
    measured = normal_derivative_trace(field, j, t0)
    scale = lp_norm(expected, 1.0)
    err = lp_norm(measured - expected, 1.0)
    return err / scale if scale > 0 else err


def fit_loglog(xs, ys) -> tuple[float, float]:
    """Least-squares slope of log(ys) vs log(xs) and the fit R^2."""
    lx, ly = np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float))
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------


@dataclass
class LiftingResult:
    field: object
    m: int
    a: float
    traces: dict[int, GridFunction]
    l1a_term: float
    seminorms: dict[int, float]
    extras: dict = dc_field(default_factory=dict)

    @property
    def total_norm(self) -> float:
        return self.l1a_term + sum(self.seminorms.values())

    def verify_traces(self, t0: float = 1e-3) -> dict[int, float]:
        return {j: trace_error(self.field, j, g, t0) for j, g in self.traces.items()}


def _default_tq(a: float, t_max: float) -> TQuadrature:
    return TQuadrature(a, t_min=1e-3, t_max=t_max, rho=1.05)


# ---------------------------------------------------------------------------
# constructions
# ---------------------------------------------------------------------------


def cutoff_extension(f: GridFunction, m: int, a: float) -> LiftingResult:
    """F(x,t) = psi(t) (W_t * f)(x): the compactly t-supported heat lifting."""
    if not -1.0 < a <= m:
        raise ValueError(f"need -1 < a <= m, got a={a}, m={m}")
    fld = CutoffHeatField(f)
    tq = _default_tq(a, 2.0)
    seminorms = {j: field_seminorm(fld, j, tq) for j in range(1, m + 2)}
    l1a = field_l1a(fld, tq)
    l1a_bound = 2.0 ** (a + 1.0) / (a + 1.0) * lp_norm(f, 1.0)
    return LiftingResult(
        field=fld,
        m=m,
        a=a,
        traces={0: f},
        l1a_term=l1a,
        seminorms=seminorms,
        extras={"l1a_bound": l1a_bound},
    )


def _bucket_terms(field, order: int, tq: TQuadrature, key) -> dict:
    """Sum mult * int t^a ||component||_1 dt grouped by key(alpha).

    Term-by-term L^1 bookkeeping (no pointwise square-sum), matching how the
    per-bucket decay laws are derived.
    """
    buckets: dict = {}
    mids, weights = tq.midpoints(), tq.weights()
    for alpha, mult in _order_multiindices(field.spec.n, order):
        val = mult * sum(
            w * lp_norm(field.derivative(alpha, t), 1.0)
            for t, w in zip(mids, weights)
        )
        k = key(alpha)
        buckets[k] = buckets.get(k, 0.0) + val
    return buckets


def mironescu_lift(f: GridFunction, m: int, l: int) -> LiftingResult:
    """v_l(x,t) = f(x) phi(l t), traced to f, with the a=m seminorm split.

    extras record the |beta| >= 1 bucket (decaying like 1/l) and the beta=0
    bucket (l-independent) of the order-(m+1) seminorm with weight t^m.
    """
    if l < 1:
        raise ValueError("scaling index must be >= 1")
    fld = ProductField(f, lambda t, order: l**order * PHI(l * t, order))
    tq = _default_tq(float(m), 2.0 / l)
    buckets = _bucket_terms(fld, m + 1, tq, key=lambda alpha: alpha.space_order)
    space_part = sum(v for k, v in buckets.items() if k >= 1)
    pure_t = buckets.get(0, 0.0)
    seminorms = {j: field_seminorm(fld, j, tq) for j in range(1, m + 2)}
    return LiftingResult(
        field=fld,
        m=m,
        a=float(m),
        traces={0: f},
        l1a_term=field_l1a(fld, tq),
        seminorms=seminorms,
        extras={"l": l, "space_bucket": space_part, "time_bucket": pure_t},
    )


def normal_trace_lift(g: GridFunction, m: int, k: int, l: int) -> LiftingResult:
    """v_l(x,t) = g(x) t^{m-k}/(m-k)! phi(l t): lifts g into the (m-k)-th trace.

    extras record per-|beta| buckets of the order-(m+1), weight t^k seminorm;
    the |beta| >= 1 buckets decay like l^{-|beta|} and the beta=0 bucket
    stays comparable to ||g||_1.
    """
    if not 0 <= k < m:
        raise ValueError(f"need 0 <= k < m, got k={k}, m={m}")
    if l < 1:
        raise ValueError("scaling index must be >= 1")
    q = m - k

    def h(t, order):
        # d^order of t^q/q! phi(lt) by Leibniz
        total = 0.0
        for r in range(order + 1):
            if r > q:
                continue
            power = t ** (q - r) / math.factorial(q - r)
            total += math.comb(order, r) * power * l ** (order - r) * float(
                PHI(l * t, order - r)
            )
        return total

    fld = ProductField(g, h)
    tq = _default_tq(float(k), 2.0 / l)
    buckets = _bucket_terms(fld, m + 1, tq, key=lambda alpha: alpha.space_order)
    zero = GridFunction(g.spec, np.zeros(g.spec.shape))
    traces = {j: zero for j in range(q)}
    traces[q] = g
    seminorms = {j: field_seminorm(fld, j, tq) for j in range(1, m + 2)}
    return LiftingResult(
        field=fld,
        m=m,
        a=float(k),
        traces=traces,
        l1a_term=field_l1a(fld, tq),
        seminorms=seminorms,
        extras={"l": l, "beta_buckets": buckets, "g_l1": lp_norm(g, 1.0)},
    )


def moment_lift(f_j: GridFunction, j: int, m: int | None = None, a: float = 0.0) -> LiftingResult:
    """u_j(x,t) = t^j/j! (W_t * f_j)(x) with traces 0,...,0,f_j at order j."""
    if m is None:
        m = j
    fld = MomentField(f_j, j)
    tq = _default_tq(a, 2.0 * f_j.spec.L)
    zero = GridFunction(f_j.spec, np.zeros(f_j.spec.shape))
    traces = {i: zero for i in range(j)}
    traces[j] = f_j
    seminorms = {order: field_seminorm(fld, order, tq) for order in range(1, m + 2)}
    return LiftingResult(
        field=fld,
        m=m,
        a=a,
        traces=traces,
        l1a_term=field_l1a(fld, TQuadrature(a, t_min=1e-3, t_max=2.0, rho=1.05)),
        seminorms=seminorms,
        extras={"j": j},
    )


def composite_lift(f_list, m: int, a: float, l: int = 8) -> LiftingResult:
    """Inductive lifting of the trace data (f_0, f_1, ..., ): F = sum v_j.

    v_0 is the cutoff heat extension of f_0; each next v_{j+1} is a moment
    lift of the measured trace defect at order j+1; when a is an integer
    k the last datum is lifted by the normal-trace construction instead.
    """
    f_list = list(f_list)
    if not f_list:
        raise ValueError("no trace data supplied")
    spec = f_list[0].spec
    if any(g.spec != spec for g in f_list):
        raise ValueError("trace data on mismatched grids")
    integer_a = abs(a - round(a)) < 1e-12 and round(a) >= 0
    if integer_a:
        k = int(round(a))
        expected = m - k + 1
    else:
        k = None
        expected = math.floor(m - a) + 1
    if len(f_list) != expected:
        raise ValueError(
            f"need {expected} trace data for m={m}, a={a}, got {len(f_list)}"
        )

    parts = [cutoff_extension(f_list[0], m, a).field]
    top = len(f_list) - 1
    for j in range(1, len(f_list)):
        measured = np.zeros(spec.shape)
        for p in parts:
            measured += normal_derivative_trace(p, j).values
        defect = GridFunction(spec, f_list[j].values - measured)
        if integer_a and j == top and k is not None and j == m - k:
            if m - k >= 1:
                parts.append(normal_trace_lift(defect, m, k, l).field)
            else:
                parts.append(MomentField(defect, j))
        else:
            parts.append(MomentField(defect, j))
    fld = SumField(parts)
    tq = _default_tq(a, 2.0 * spec.L)
    traces = {j: f_list[j] for j in range(len(f_list))}
    seminorms = {order: field_seminorm(fld, order, tq) for order in range(1, m + 2)}
    return LiftingResult(
        field=fld,
        m=m,
        a=a,
        traces=traces,
        l1a_term=field_l1a(fld, TQuadrature(a, t_min=1e-3, t_max=2.0, rho=1.05)),
        seminorms=seminorms,
        extras={"parts": len(parts)},
    )


def grisvard_approximation(u_source: LiftingResult, a: float, j: int) -> dict:
    """Distance row for v_j = u phi(j t) with the ramp profile, a > m.

    Returns the per-i buckets of ||grad^{m+1}(u - v_j)||_{L^1_a}, where i
    counts t-derivatives landing on the cutoff 1 - phi(jt) = psi(jt):
    the i = 0 bucket vanishes as j grows and the i >= 1 buckets decay like
    j^{-(a+1-i)}.
    """
    m = u_source.m
    if a <= m:
        raise ValueError(f"approximation regime requires a > m, got a={a}, m={m}")
    if j < 1:
        raise ValueError("scaling index must be >= 1")
    base = u_source.field
    spec = base.spec
    # u - v_j = u * psi(j t)
    tq = TQuadrature(a, t_min=min(1e-3, 0.2 / j), t_max=2.0, rho=1.05)
    mids, weights = tq.midpoints(), tq.weights()
    buckets: dict[int, float] = {}
    for alpha, mult in _order_multiindices(spec.n, m + 1):
        for i in range(alpha.l + 1):
            c = math.comb(alpha.l, i) * j**i
            total = 0.0
            for t, w in zip(mids, weights):
                prof = float(PSI(j * t, i))
                if prof == 0.0:
                    continue
                inner = base.derivative(MultiIndex(alpha.beta, alpha.l - i), t)
                total += w * abs(c) * abs(prof) * lp_norm(inner, 1.0)
            buckets[i] = buckets.get(i, 0.0) + mult * total
    return {"j": j, "buckets": buckets, "total": sum(buckets.values())}
