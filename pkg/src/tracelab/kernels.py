"""Gauss-Weierstrass and Poisson kernels, their derivatives and multipliers.

The Gaussian kernel is W_t(x) = exp(-|x|^2/(4t^2)) / (4 pi t^2)^(n/2) with
Fourier multiplier exp(-4 pi^2 t^2 |xi|^2); the Poisson kernel is
P_t(x) = c_n t / (|x|^2 + t^2)^((n+1)/2) with multiplier exp(-2 pi t |xi|).
Gaussian space/time derivatives are evaluated both analytically (closed-form
polynomial-times-Gaussian expressions) and spectrally, so that each path can
serve as the oracle for the other.
"""

from __future__ import annotations

import enum
import functools
import math
from dataclasses import dataclass

import numpy as np
import sympy as sp
from scipy import integrate

from .grid import (
    GridFunction,
    GridSpec,
    MultiIndex,
    SpectralFunction,
    inverse_transform,
)


class KernelKind(enum.Enum):
    GAUSS_WEIERSTRASS = "gauss"
    POISSON = "poisson"


@dataclass(frozen=True)
class KernelDerivative:
    kind: KernelKind
    alpha: MultiIndex
    t: float

    def __post_init__(self):
        if self.t <= 0:
            raise ValueError(f"kernel time must be positive, got {self.t}")


def poisson_constant(n: int) -> float:
    """Normalizing constant Gamma((n+1)/2) / pi^((n+1)/2)."""
    return math.gamma((n + 1) / 2) / math.pi ** ((n + 1) / 2)


# ---------------------------------------------------------------------------
# analytic Gaussian derivatives (sympy-generated closed forms)
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def _gauss_derivative_fn(n: int, beta: tuple[int, ...], l: int):
    """Callable (x1..xn, t) -> d^beta_x d^l_t W_t, generated symbolically."""
    xs = sp.symbols(f"x1:{n + 1}", real=True)
    t = sp.Symbol("t", positive=True)
    r2 = sum(x**2 for x in xs)
    W = sp.exp(-r2 / (4 * t**2)) / (4 * sp.pi * t**2) ** sp.Rational(n, 2)
    expr = W
    for x, b in zip(xs, beta):
        expr = sp.diff(expr, x, b)
    expr = sp.diff(expr, t, l)
    return sp.lambdify((*xs, t), sp.simplify(expr), modules="numpy")


@functools.lru_cache(maxsize=None)
def _poisson_derivative_fn(n: int, beta: tuple[int, ...], l: int):
    """Callable (x1..xn, t) -> d^beta_x d^l_t P_t, generated symbolically."""
    xs = sp.symbols(f"x1:{n + 1}", real=True)
    t = sp.Symbol("t", positive=True)
    r2 = sum(x**2 for x in xs)
    P = poisson_constant(n) * t / (r2 + t**2) ** sp.Rational(n + 1, 2)
    expr = P
    for x, b in zip(xs, beta):
        expr = sp.diff(expr, x, b)
    expr = sp.diff(expr, t, l)
    return sp.lambdify((*xs, t), sp.together(expr), modules="numpy")


def _gauss_image_count(t: float, L: float) -> int:
    # tail of exp(-d^2/(4t^2)) below 1e-16 at distance d = (M - 1/2) L
    return max(1, math.ceil(0.5 + 2 * t * 6.1 / L)) + 1


def kernel_values(kd: KernelDerivative, spec: GridSpec) -> GridFunction:
    """Samples of the (periodized) kernel derivative at the grid nodes.

    Gaussian derivatives are summed over enough torus images that the tail
    is below 1e-16; Poisson derivatives come from the exact multiplier, so
    they are periodized automatically.
    """
    if kd.kind is KernelKind.POISSON:
        sym = kernel_multiplier(kd)
        coeffs = np.asarray(sym(*spec.frequencies()), dtype=complex)
        coeffs = np.broadcast_to(coeffs, spec.shape).copy()
        if kd.alpha.space_order % 2 == 1:
            coeffs[spec.nyquist_mask()] = 0.0
        return inverse_transform(SpectralFunction(spec, coeffs))
    fn = _gauss_derivative_fn(spec.n, kd.alpha.beta, kd.alpha.l)
    coords = spec.centered_coords()
    M = _gauss_image_count(kd.t, spec.L)
    total = np.zeros(spec.shape)
    shifts = range(-M, M + 1)
    if spec.n == 1:
        for m in shifts:
            total += fn(coords[0] + m * spec.L, kd.t)
    else:
        for m1 in shifts:
            for m2 in shifts:
                total += fn(coords[0] + m1 * spec.L, coords[1] + m2 * spec.L, kd.t)
    return GridFunction(spec, total)


# ---------------------------------------------------------------------------
# multipliers
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def _gauss_time_poly(l: int):
    """q_l with d^l/dt^l exp(-4 pi^2 t^2 s) = q_l(t, s) exp(-4 pi^2 t^2 s).

    Closed recurrence q_{l+1} = dq_l/dt - 8 pi^2 s t q_l starting from q_0 = 1,
    with s standing for |xi|^2.
    """
    t, s = sp.symbols("t s", real=True)
    q = sp.Integer(1)
    for _ in range(l):
        q = sp.diff(q, t) - 8 * sp.pi**2 * s * t * q
    return sp.lambdify((t, s), sp.expand(q), modules="numpy")


def kernel_multiplier(kd: KernelDerivative):
    """Fourier symbol of the kernel derivative as a callable on frequencies.

    Returns (2 pi i xi)^beta times the l-th t-derivative of the base
    multiplier: exp(-4 pi^2 t^2 |xi|^2) for the Gaussian and
    exp(-2 pi t |xi|) for the Poisson kernel.
    """
    beta, l, t = kd.alpha.beta, kd.alpha.l, kd.t
    if kd.kind is KernelKind.GAUSS_WEIERSTRASS:
        qfn = _gauss_time_poly(l)

        def symbol(*xi):
            s = sum(np.asarray(x) ** 2 for x in xi)
            out = qfn(t, s) * np.exp(-4 * np.pi**2 * t**2 * s) + 0j
            for x, b in zip(xi, beta):
                if b:
                    out = out * (2j * np.pi * x) ** b
            return out

        return symbol

    def symbol(*xi):
        mag = np.sqrt(sum(np.asarray(x) ** 2 for x in xi))
        out = (-2 * np.pi * mag) ** l * np.exp(-2 * np.pi * t * mag) + 0j
        for x, b in zip(xi, beta):
            if b:
                out = out * (2j * np.pi * x) ** b
        return out

    return symbol


# ---------------------------------------------------------------------------
# identity residuals
# ---------------------------------------------------------------------------


def heat_identity_residual(t: float, spec: GridSpec) -> float:
    """Normalized residual of dW_t/dt = 2t Lap W_t, checked two ways."""
    if t <= 0:
        raise ValueError("t must be positive")
    dt = kernel_values(KernelDerivative(KernelKind.GAUSS_WEIERSTRASS, MultiIndex((0,) * spec.n, 1), t), spec)
    lap = np.zeros(spec.shape)
    for i in range(spec.n):
        beta = tuple(2 if j == i else 0 for j in range(spec.n))
        lap = lap + kernel_values(
            KernelDerivative(KernelKind.GAUSS_WEIERSTRASS, MultiIndex(beta, 0), t), spec
        ).values
    scale = np.max(np.abs(dt.values))
    analytic = np.max(np.abs(dt.values - 2 * t * lap)) / scale

    xi = spec.frequencies()
    s = sum(x**2 for x in xi)
    base = np.exp(-4 * np.pi**2 * t**2 * s)
    mdt = kernel_multiplier(KernelDerivative(KernelKind.GAUSS_WEIERSTRASS, MultiIndex((0,) * spec.n, 1), t))(*xi)
    mlap = 2 * t * (-4 * np.pi**2 * s) * base
    mscale = np.max(np.abs(mdt))
    spectral = np.max(np.abs(mdt - mlap)) / mscale
    return float(max(analytic, spectral))


def semigroup_residual(t: float, spec: GridSpec) -> float:
    """Max over represented xi of |What_t - What_{t/sqrt(2)}^2|."""
    if t <= 0:
        raise ValueError("t must be positive")
    xi = spec.frequencies()
    s = sum(x**2 for x in xi)
    full = np.exp(-4 * np.pi**2 * t**2 * s)
    half = np.exp(-4 * np.pi**2 * (t / math.sqrt(2)) ** 2 * s)
    return float(np.max(np.abs(full - half**2)))


def semigroup_spatial_residual(
    t: float, spec: GridSpec, beta_left=None, beta_right=None
) -> float:
    """Sup-norm residual of the convolution split d^g W_t = d^bl W_{t/sqrt2} * d^br W_{t/sqrt2}.

    With no derivative orders this checks W_t = W_{t/sqrt2} * W_{t/sqrt2} on
    the grid; derivative orders give the third-derivative splits.
    """
    from .grid import convolve

    n = spec.n
    beta_left = beta_left or (0,) * n
    beta_right = beta_right or (0,) * n
    th = t / math.sqrt(2)
    gw = KernelKind.GAUSS_WEIERSTRASS
    left = kernel_values(KernelDerivative(gw, MultiIndex(tuple(beta_left), 0), th), spec)
    right = kernel_values(KernelDerivative(gw, MultiIndex(tuple(beta_right), 0), th), spec)
    total = tuple(a + b for a, b in zip(beta_left, beta_right))
    target = kernel_values(KernelDerivative(gw, MultiIndex(total, 0), t), spec)
    return float(np.max(np.abs(convolve(left, right).values - target.values)))


# ---------------------------------------------------------------------------
# heat-integral oracles
# ---------------------------------------------------------------------------


@functools.lru_cache(maxsize=None)
def _gauss_profile_sup(n: int, beta: tuple[int, ...]) -> float:
    """Numerical sup of |d^beta W| over R^n (profile at t = 1)."""
    fn = _gauss_derivative_fn(n, beta, 0)
    z = np.linspace(-15.0, 15.0, 6001)
    if n == 1:
        return float(np.max(np.abs(fn(z, 1.0))))
    z = np.linspace(-15.0, 15.0, 801)
    zz = np.meshgrid(z, z, indexing="ij")
    return float(np.max(np.abs(fn(zz[0], zz[1], 1.0))))


def heat_time_integral(
    alpha: MultiIndex, b: float, x: tuple[float, ...], T: float = 1.0e7
) -> float:
    """int_0^T t^b |d^alpha W_t(x)| dt plus an analytic bound for (T, inf).

    Requires the integrability condition n + |alpha| - b - 1 > 0; the
    integrand peaks at scale t ~ |x|, where the quadrature is split.
    """
    n = len(x)
    if alpha.l != 0:
        raise ValueError("heat_time_integral takes space derivatives only")
    exponent = n + alpha.space_order - b - 1
    if exponent <= 0:
        raise ValueError(
            f"hypothesis n+|alpha|-b-1 > 0 violated: got {exponent}"
        )
    r = math.sqrt(sum(c * c for c in x))
    if r == 0:
        raise ValueError("x must be nonzero")
    if T <= 0:
        raise ValueError("T must be positive")
    fn = _gauss_derivative_fn(n, alpha.beta, 0)

    def integrand(t):
        return t**b * abs(fn(*x, t))

    split = min(r, T)
    val1, _ = integrate.quad(integrand, 0.0, split, epsabs=1e-13, epsrel=1e-11, limit=400)
    val2 = 0.0
    if T > split:
        # log substitution tames the wide upper range
        lo, hi = math.log(split), math.log(T)
        val2, _ = integrate.quad(
            lambda u: math.exp(u) * integrand(math.exp(u)), lo, hi,
            epsabs=1e-13, epsrel=1e-11, limit=800,
        )
    # |d^alpha W_t(x)| <= sup|d^alpha W| * t^(-n-|alpha|)
    C = _gauss_profile_sup(n, alpha.beta)
    tail = C * T ** (b - n - alpha.space_order + 1) / (n + alpha.space_order - b - 1)
    return val1 + val2 + tail


def kernel_l1_decay(alpha: MultiIndex, t: float, n: int = 1) -> float:
    """L^1(R^n) norm of d^alpha W_t by direct quadrature."""
    if alpha.l != 0:
        raise ValueError("kernel_l1_decay takes space derivatives only")
    if t <= 0:
        raise ValueError("t must be positive")
    fn = _gauss_derivative_fn(n, alpha.beta, 0)
    R = 14.0 * t  # Gaussian tail below 1e-12 of the peak
    if n == 1:
        val, _ = integrate.quad(lambda x: abs(fn(x, t)), -R, R, epsabs=1e-13, epsrel=1e-11, limit=400)
        return val
    val, _ = integrate.dblquad(
        lambda y, x: abs(fn(x, y, t)), -R, R, -R, R, epsabs=1e-10, epsrel=1e-9
    )
    return val
