"""Half-space extensions u(x,t) = K_t * f, weighted seminorms, and ratio runs.

The extension lives on [0, L)^n x (0, inf); the t-axis is discretized by a
geometric quadrature with exact per-cell t^a weights, and the head (0, t_min)
and tail (t_max, inf) are controlled by analytic bounds that the seminorm
routine audits against the interior sum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .besov import BesovParams, besov_seminorm
from .grid import (
    GridFunction,
    MultiIndex,
    SpectralFunction,
    apply_multiplier,
    forward_transform,
    inverse_transform,
    lp_norm,
)
from .kernels import KernelDerivative, KernelKind, kernel_multiplier, kernel_values


class ResolutionError(ValueError):
    """Raised when head/tail bounds are not negligible against the interior sum."""


@dataclass(frozen=True)
class TQuadrature:
    """Geometric t-grid on [t_min, t_max] with exact per-cell t^a weights."""

    a: float
    t_min: float = 1e-3
    t_max: float = 32.0
    rho: float = 1.05

    def __post_init__(self):
        if self.a <= -1:
            raise ValueError(f"weight exponent must exceed -1, got {self.a}")
        if self.t_min <= 0 or self.t_max <= self.t_min:
            raise ValueError("need 0 < t_min < t_max")
        if self.rho <= 1:
            raise ValueError(f"geometric ratio must exceed 1, got {self.rho}")

    def edges(self) -> np.ndarray:
        k = math.ceil(math.log(self.t_max / self.t_min) / math.log(self.rho))
        e = self.t_min * self.rho ** np.arange(k + 1)
        e[-1] = self.t_max
        return e

    def midpoints(self) -> np.ndarray:
        e = self.edges()
        return np.sqrt(e[:-1] * e[1:])

    def weights(self) -> np.ndarray:
        """Exact cell integrals of t^a: (t_{k+1}^{a+1} - t_k^{a+1})/(a+1)."""
        e = self.edges()
        ap1 = self.a + 1.0
        return (e[1:] ** ap1 - e[:-1] ** ap1) / ap1

    def refined(self, factor: int) -> "TQuadrature":
        return TQuadrature(self.a, self.t_min, self.t_max, self.rho ** (1.0 / factor))


@dataclass(frozen=True)
class WeightParams:
    m: int
    a: float
    p: float = 1.0

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("gradient order m must be nonnegative")
        if self.a <= -1:
            raise ValueError(f"weight exponent must exceed -1, got {self.a}")
        if self.p < 1:
            raise ValueError(f"integrability must be >= 1, got {self.p}")


class ExtensionField:
    """Lazy evaluator of mixed derivatives of K_t * f, cached per (alpha, t)."""

    def __init__(self, source: GridFunction, kind: KernelKind):
        self.source = source
        self.kind = kind
        self._hat = forward_transform(source)
        self._cache: dict[tuple[MultiIndex, float], GridFunction] = {}

    def derivative(self, alpha: MultiIndex, t: float) -> GridFunction:
        key = (alpha, t)
        if key not in self._cache:
            spec = self.source.spec
            sym = kernel_multiplier(KernelDerivative(self.kind, alpha, t))
            G = apply_multiplier(self._hat, sym)
            coeffs = G.coeffs
            if alpha.space_order % 2 == 1:
                coeffs = coeffs.copy()
                coeffs[spec.nyquist_mask()] = 0.0
            self._cache[key] = inverse_transform(SpectralFunction(spec, coeffs))
        return self._cache[key]

    def __call__(self, t: float) -> GridFunction:
        return self.derivative(MultiIndex((0,) * self.source.spec.n, 0), t)


def extend(f: GridFunction, kind: KernelKind, t: float) -> GridFunction:
    """u(., t) = K_t * f via the kernel multiplier."""
    return ExtensionField(f, kind)(t)


def extension_derivative(
    f: GridFunction, kind: KernelKind, alpha: MultiIndex, t: float
) -> GridFunction:
    return ExtensionField(f, kind).derivative(alpha, t)


def _order_multiindices(n: int, order: int) -> list[tuple[MultiIndex, int]]:
    """All (beta, l) with |beta|+l = order, with multinomial multiplicities.

    The multiplicity counts the ordered direction tuples collapsing to the
    same mixed derivative, so the sum of squares below is the Euclidean norm
    of the full gradient tensor.
    """
    out = []
    import itertools

    for combo in itertools.product(range(order + 1), repeat=n + 1):
        if sum(combo) != order:
            continue
        beta, l = combo[:n], combo[n]
        mult = math.factorial(order) // math.prod(math.factorial(c) for c in combo)
        out.append((MultiIndex(beta, l), mult))
    return out


def gradient_tensor_norm(
    f: GridFunction, kind: KernelKind, order: int, t: float, field: ExtensionField | None = None
) -> GridFunction:
    """Pointwise |grad^order u(., t)| over all n+1 directions (x_1..x_n, t)."""
    if field is None:
        field = ExtensionField(f, kind)
    spec = f.spec
    acc = np.zeros(spec.shape)
    for alpha, mult in _order_multiindices(spec.n, order):
        acc += mult * field.derivative(alpha, t).values ** 2
    return GridFunction(spec, np.sqrt(acc))


@dataclass(frozen=True)
class SeminormAudit:
    value: float
    interior: float  # sum of weight * ||grad^{m+1}u(t)||_p^p over cells
    head_bound: float
    tail_bound: float


def _tail_decay_rate(kind: KernelKind, L: float) -> float:
    """Exponential decay rate of any gradient entry beyond the lowest mode.

    Every derivative annihilates the mean, so the slowest surviving mode is
    |xi| = 1/L: exp(-4 pi^2 t^2 / L^2) for the Gaussian, exp(-2 pi t / L)
    for the Poisson kernel.
    """
    if kind is KernelKind.GAUSS_WEIERSTRASS:
        return 4.0 * math.pi**2 / L**2  # multiplies t^2
    return 2.0 * math.pi / L  # multiplies t


def weighted_seminorm_audit(
    f: GridFunction, kind: KernelKind, wp: WeightParams, tq: TQuadrature
) -> SeminormAudit:
    """(int t^a |grad^{m+1} u|^p dx dt)^{1/p} with head/tail accounting.

    Interior cells use the geometric midpoint; the head uses the bound
    integrand <= C t^a valid for band-limited data (every gradient entry has
    a finite limit as t -> 0), and the tail uses the lowest-mode multiplier
    decay beyond t_max.
    """
    if abs(tq.a - wp.a) > 1e-12:
        raise ValueError("quadrature weight exponent does not match WeightParams")
    field = ExtensionField(f, kind)
    order = wp.m + 1
    mids = tq.midpoints()
    weights = tq.weights()
    interior = 0.0
    for t, w in zip(mids, weights):
        g = gradient_tensor_norm(f, kind, order, t, field)
        interior += w * lp_norm(g, wp.p) ** wp.p

    # head: integrand(t) <= (max of ||grad u(t)||_p^p near 0) * t^a
    head_c = max(
        lp_norm(gradient_tensor_norm(f, kind, order, t, field), wp.p) ** wp.p
        for t in (tq.t_min, tq.t_min / 2, tq.t_min / 10)
    )
    head = head_c * tq.t_min ** (wp.a + 1.0) / (wp.a + 1.0)

    # tail: ||grad u(t)||_p <= ||grad u(t_max)||_p * decay(t)/decay(t_max)
    phi_end = lp_norm(gradient_tensor_norm(f, kind, order, tq.t_max, field), wp.p)
    c = _tail_decay_rate(kind, f.spec.L)
    if kind is KernelKind.GAUSS_WEIERSTRASS:
        rel = lambda t: math.exp(-wp.p * c * (t * t - tq.t_max**2))
    else:
        rel = lambda t: math.exp(-wp.p * c * (t - tq.t_max))
    tail, _ = integrate.quad(
        lambda t: t**wp.a * rel(t), tq.t_max, np.inf, epsabs=1e-14, limit=200
    )
    tail *= phi_end**wp.p

    if interior > 0 and head + tail > 0.01 * interior:
        raise ResolutionError(
            f"head+tail bound {head + tail:.3e} exceeds 1% of interior {interior:.3e}; "
            "widen [t_min, t_max] or refine the grid"
        )
    value = (interior) ** (1.0 / wp.p)
    return SeminormAudit(value=value, interior=interior, head_bound=head, tail_bound=tail)


def weighted_seminorm(
    f: GridFunction, kind: KernelKind, wp: WeightParams, tq: TQuadrature
) -> float:
    return weighted_seminorm_audit(f, kind, wp, tq).value


def trace_limit(f: GridFunction, kind: KernelKind, t_sequence) -> list[float]:
    """L^1 errors ||K_t * f - f||_1 along a decreasing sequence of t."""
    ts = list(t_sequence)
    if any(t <= 0 for t in ts):
        raise ValueError("t values must be positive")
    field = ExtensionField(f, kind)
    return [lp_norm(field(t) - f, 1.0) for t in ts]


# ---------------------------------------------------------------------------
# ratio experiments
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RatioRow:
    experiment: str
    function_id: str
    m: int
    a: float
    p: float
    kind: str
    lhs: float
    rhs: float
    ratio: float  # nan when flagged
    head_bound: float
    tail_bound: float
    flagged: bool


@dataclass
class RatioReport:
    rows: list[RatioRow] = field(default_factory=list)

    def append(self, row: RatioRow):
        self.rows.append(row)

    @property
    def empirical_constant(self) -> float:
        finite = [r.ratio for r in self.rows if not r.flagged]
        return max(finite) if finite else float("nan")


def _make_row(experiment, function_id, wp, kind, lhs, rhs, audit) -> RatioRow:
    flagged = rhs == 0.0
    return RatioRow(
        experiment=experiment,
        function_id=function_id,
        m=wp.m,
        a=wp.a,
        p=wp.p,
        kind=kind.value,
        lhs=lhs,
        rhs=rhs,
        ratio=float("nan") if flagged else lhs / rhs,
        head_bound=audit.head_bound,
        tail_bound=audit.tail_bound,
        flagged=flagged,
    )


def main_estimate_ratio(
    f: GridFunction,
    wp: WeightParams,
    kind: KernelKind = KernelKind.GAUSS_WEIERSTRASS,
    tq: TQuadrature | None = None,
    function_id: str = "f",
) -> RatioRow:
    """LHS = int t^a |grad^{m+1}u| dx dt against RHS = |f|_{B^{m-a,1}}."""
    if wp.p != 1.0:
        raise ValueError("main estimate is the p = 1 case; use p_estimate_ratio")
    if not -1.0 < wp.a < wp.m:
        raise ValueError(f"need -1 < a < m, got a={wp.a}, m={wp.m}")
    if tq is None:
        tq = TQuadrature(wp.a, t_max=2.0 * f.spec.L)
    audit = weighted_seminorm_audit(f, kind, wp, tq)
    lhs = audit.interior  # p = 1: the integral itself
    rhs = besov_seminorm(f, BesovParams(wp.m - wp.a, 1.0, 1.0)).value
    return _make_row("main-estimate", function_id, wp, kind, lhs, rhs, audit)


def p_estimate_ratio(
    f: GridFunction,
    wp: WeightParams,
    kind: KernelKind = KernelKind.GAUSS_WEIERSTRASS,
    tq: TQuadrature | None = None,
    function_id: str = "f",
) -> RatioRow:
    """LHS = int t^a |grad^{m+1}u|^p against RHS = |f|_{B^{m+1-(a+1)/p,p}_p}^p."""
    s = wp.m + 1 - (wp.a + 1.0) / wp.p
    if s <= 0:
        raise ValueError(f"smoothness m+1-(a+1)/p = {s} must be positive")
    if tq is None:
        tq = TQuadrature(wp.a, t_max=2.0 * f.spec.L)
    audit = weighted_seminorm_audit(f, kind, wp, tq)
    lhs = audit.interior
    rhs = besov_seminorm(f, BesovParams(s, wp.p, wp.p)).value ** wp.p
    return _make_row("p-estimate", function_id, wp, kind, lhs, rhs, audit)


def cross_term_check(
    f: GridFunction, tq: TQuadrature | None = None
) -> tuple[float, float, float]:
    """Mixed x-t second derivative of the Poisson extension against pure-x ones.

    Returns (lhs, rhs, ratio) where, maximized over i,
    lhs_i = int int |d^2 u / dx_i dt| dx dt and
    rhs_i = max_j int int |d^2 u / dx_i dx_j| dx dt, both with a = 0.
    """
    if tq is None:
        tq = TQuadrature(0.0, t_max=2.0 * f.spec.L)
    if abs(tq.a) > 1e-12:
        raise ValueError("cross-term comparison uses a = 0")
    spec = f.spec
    field = ExtensionField(f, KernelKind.POISSON)
    mids, weights = tq.midpoints(), tq.weights()

    def t_integral(alpha: MultiIndex) -> float:
        return sum(
            w * lp_norm(field.derivative(alpha, t), 1.0)
            for t, w in zip(mids, weights)
        )

    best = (0.0, 0.0, float("-inf"))
    for i in range(spec.n):
        e_i = tuple(1 if k == i else 0 for k in range(spec.n))
        lhs = t_integral(MultiIndex(e_i, 1))
        rhs = 0.0
        for j in range(spec.n):
            beta = tuple(
                (1 if k == i else 0) + (1 if k == j else 0) for k in range(spec.n)
            )
            rhs = max(rhs, t_integral(MultiIndex(beta, 0)))
        if lhs == 0.0 and rhs == 0.0:
            continue
        ratio = lhs / rhs if rhs > 0 else float("inf")
        if ratio > best[2]:
            best = (lhs, rhs, ratio)
    if best[2] == float("-inf"):
        return (0.0, 0.0, float("nan"))
    return best


def uspenskii_ansatz_residual(
    f: GridFunction,
    i: int,
    j: int,
    t: float,
    kind: KernelKind = KernelKind.GAUSS_WEIERSTRASS,
) -> float:
    """Residual of d^2u/dx_i dx_j = (1/2) int d^2K_t(h) [f(x+h)+f(x-h)-2f(x)] dh.

    The right side is a grid quadrature over h built from sampled kernel
    derivative values; the left side comes from the exact multiplier.  For
    an even kernel sample K the h-sum collapses to K * f - f * (sum K dh).
    """
    spec = f.spec
    if not (0 <= i < spec.n and 0 <= j < spec.n):
        raise ValueError("direction indices out of range")
    beta = tuple((1 if k == i else 0) + (1 if k == j else 0) for k in range(spec.n))
    alpha = MultiIndex(beta, 0)
    lhs = extension_derivative(f, kind, alpha, t)

    K = kernel_values(KernelDerivative(kind, alpha, t), spec)
    mass = float(np.sum(K.values)) * spec.cell_volume
    conv = np.fft.ifftn(np.fft.fftn(K.values) * np.fft.fftn(f.values)).real
    rhs = conv * spec.cell_volume - f.values * mass

    scale = float(np.max(np.abs(lhs.values)))
    err = float(np.max(np.abs(lhs.values - rhs)))
    return err / scale if scale > 0 else err
