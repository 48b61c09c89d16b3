"""Periodic grid representation and FFT-based spectral calculus.

All other modules build on the types here: real samples on a torus
[0, L)^n (n = 1 or 2), their Fourier coefficients under the convention
fhat(xi) = int f(x) exp(-2*pi*i*x.xi) dx with xi = k/L, and multiplier
application in frequency space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [0, L)^n with N samples per axis."""

    n: int
    N: int
    L: float

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.n}")
        if self.N < 8 or (self.N & (self.N - 1)) != 0:
            raise ValueError(f"N must be a power of two >= 8, got {self.N}")
        if self.L <= 0:
            raise ValueError(f"period must be positive, got {self.L}")

    @property
    def step(self) -> float:
        return self.L / self.N

    @property
    def cell_volume(self) -> float:
        return (self.L / self.N) ** self.n

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    def axis_coords(self) -> np.ndarray:
        """Node coordinates along one axis: x_k = k*L/N."""
        return np.arange(self.N) * self.step

    def coords(self) -> tuple[np.ndarray, ...]:
        """Meshgrid of node coordinates, one array per axis."""
        x = self.axis_coords()
        if self.n == 1:
            return (x,)
        return tuple(np.meshgrid(x, x, indexing="ij"))

    def centered_coords(self) -> tuple[np.ndarray, ...]:
        """Coordinates mapped to (-L/2, L/2], for sampling functions centered at 0."""
        return tuple(np.where(c > self.L / 2, c - self.L, c) for c in self.coords())

    def axis_modes(self) -> np.ndarray:
        """Integer frequencies in FFT order: 0..N/2-1, -N/2..-1."""
        return np.fft.fftfreq(self.N, d=1.0 / self.N)

    def modes(self) -> tuple[np.ndarray, ...]:
        k = self.axis_modes()
        if self.n == 1:
            return (k,)
        return tuple(np.meshgrid(k, k, indexing="ij"))

    def frequencies(self) -> tuple[np.ndarray, ...]:
        """xi = k/L per axis, FFT-ordered."""
        return tuple(k / self.L for k in self.modes())

    def nyquist_mask(self) -> np.ndarray:
        """Boolean array, True on modes with any |k_i| = N/2."""
        mask = np.zeros(self.shape, dtype=bool)
        for k in self.modes():
            mask |= np.abs(k) == self.N // 2
        return mask


@dataclass(frozen=True)
class GridFunction:
    """Real samples of a scalar function at the nodes of a GridSpec."""

    spec: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.values.shape != self.spec.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid {self.spec.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function contains non-finite values")

    def _check_compatible(self, other: "GridFunction"):
        if self.spec != other.spec:
            raise ValueError("grid functions live on different grids")

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._check_compatible(other)
            return GridFunction(self.spec, self.values + other.values)
        return GridFunction(self.spec, self.values + other)

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            self._check_compatible(other)
            return GridFunction(self.spec, self.values - other.values)
        return GridFunction(self.spec, self.values - other)

    def __mul__(self, c):
        if isinstance(c, GridFunction):
            self._check_compatible(c)
            return GridFunction(self.spec, self.values * c.values)
        return GridFunction(self.spec, c * self.values)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.spec, -self.values)

    def mean(self) -> float:
        return float(np.mean(self.values))

    def boundary_tail(self) -> float:
        """Largest |f| on the outermost cell ring of the centered fundamental domain.

        For functions concentrated near the torus center this audits the
        periodization error of treating them as functions on R^n.
        """
        dist = np.zeros(self.spec.shape)
        for c in self.spec.centered_coords():
            dist = np.maximum(dist, np.abs(c))
        ring = dist >= self.spec.L / 2 - self.spec.step
        return float(np.max(np.abs(self.values[ring])))


@dataclass(frozen=True)
class SpectralFunction:
    """Fourier coefficients on the grid, coeff(k) approximating fhat(k/L)."""

    spec: GridSpec
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.coeffs.shape != self.spec.shape:
            raise ValueError("coefficient shape does not match grid")


@dataclass(frozen=True)
class MultiIndex:
    """Mixed derivative order: beta in space, l in the extension variable t."""

    beta: tuple[int, ...]
    l: int = 0

    def __post_init__(self):
        if any(b < 0 for b in self.beta) or self.l < 0:
            raise ValueError("derivative orders must be nonnegative")
        if self.order > 4:
            raise ValueError(f"|beta|+l = {self.order} exceeds the order cap 4")

    @property
    def order(self) -> int:
        return sum(self.beta) + self.l

    @property
    def space_order(self) -> int:
        return sum(self.beta)


def forward_transform(f: GridFunction) -> SpectralFunction:
    """DFT scaled so coeff(k) approximates int f(x) exp(-2*pi*i*k.x/L) dx."""
    coeffs = np.fft.fftn(f.values) * f.spec.cell_volume
    return SpectralFunction(f.spec, coeffs)


def inverse_transform(F: SpectralFunction) -> GridFunction:
    spec = F.spec
    values = np.fft.ifftn(F.coeffs) * (spec.N / spec.L) ** spec.n
    return GridFunction(spec, values.real.copy())


def apply_multiplier(F: SpectralFunction, mult) -> SpectralFunction:
    """Multiply coefficients by mult evaluated at the represented frequencies.

    `mult` takes the tuple of frequency arrays (xi_1, ..., xi_n) and returns
    a complex array of symbol values.
    """
    sym = np.asarray(mult(*F.spec.frequencies()), dtype=complex)
    sym = np.broadcast_to(sym, F.spec.shape)
    if not np.all(np.isfinite(sym)):
        raise ValueError("multiplier takes non-finite values on represented frequencies")
    return SpectralFunction(F.spec, F.coeffs * sym)


def partial_derivative(f: GridFunction, alpha: MultiIndex) -> GridFunction:
    """Spectral space derivative with symbol (2*pi*i*xi)^beta."""
    if alpha.l != 0:
        raise ValueError("partial_derivative only takes space orders (l=0)")
    spec = f.spec
    F = forward_transform(f)

    def symbol(*xi):
        out = np.ones(spec.shape, dtype=complex)
        for b, x in zip(alpha.beta, xi):
            if b:
                out = out * (2j * np.pi * x) ** b
        return out

    G = apply_multiplier(F, symbol)
    coeffs = G.coeffs
    if alpha.space_order % 2 == 1:
        # odd symbol: zero the Nyquist shell to keep the result real
        coeffs = coeffs.copy()
        coeffs[spec.nyquist_mask()] = 0.0
    return inverse_transform(SpectralFunction(spec, coeffs))


def lp_norm(f: GridFunction, p: float) -> float:
    """Discrete L^p norm with cell-volume weights; p = inf gives the sup norm."""
    if p == np.inf:
        return float(np.max(np.abs(f.values)))
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return float((np.sum(np.abs(f.values) ** p) * f.spec.cell_volume) ** (1.0 / p))


def dilate(f: GridFunction, lam: float) -> GridFunction:
    """Return x -> f(lam*x) by index re-mapping on the torus.

    lam must be a power of two.  Integer lam re-maps node k to node lam*k
    (exact).  lam = 2^-j samples the trigonometric interpolant at the points
    x/2^j; this covers only the sub-window [0, L/2^j) of f, so it represents
    the dilation of the underlying R^n function faithfully when f is
    concentrated well inside that window (tails at distance >= L/(2*2^j)
    from the concentration point leak across the seam).
    """
    spec = f.spec
    j = math.log2(lam)
    if abs(j - round(j)) > 1e-12:
        raise ValueError(f"dilation factor {lam} is not a power of two")
    j = round(j)
    if j == 0:
        return f
    k = np.arange(spec.N)
    if j > 0:
        idx = ((2**j) * k) % spec.N
        vals = f.values
        for axis in range(spec.n):
            vals = np.take(vals, idx, axis=axis)
        return GridFunction(spec, vals.copy())
    fine = refine(f, 2 ** (-j))
    vals = fine.values
    for axis in range(spec.n):
        vals = np.take(vals, k, axis=axis)
    return GridFunction(spec, vals.copy())


def refine(f: GridFunction, factor: int = 2) -> GridFunction:
    """Spectral upsampling to a grid with factor*N samples per axis."""
    if factor < 1 or (factor & (factor - 1)) != 0:
        raise ValueError("refinement factor must be a power of two")
    if factor == 1:
        return f
    spec = f.spec
    fine = GridSpec(spec.n, spec.N * factor, spec.L)
    coeffs = np.fft.fftn(f.values)
    out = np.zeros(fine.shape, dtype=complex)
    k = spec.axis_modes().astype(int)
    tgt = np.mod(k, fine.N).astype(int)
    if spec.n == 1:
        out[tgt] = coeffs
    else:
        out[np.ix_(tgt, tgt)] = coeffs
    return GridFunction(fine, np.fft.ifftn(out).real * factor**spec.n)


def from_callable(spec: GridSpec, fn, centered: bool = False) -> GridFunction:
    """Sample a callable fn(x1, ..., xn) at the grid nodes."""
    pts = spec.centered_coords() if centered else spec.coords()
    return GridFunction(spec, np.asarray(fn(*pts), dtype=float))


def convolve(f: GridFunction, g: GridFunction) -> GridFunction:
    """Periodic convolution by direct grid quadrature (FFT-accelerated)."""
    f._check_compatible(g)
    vals = np.fft.ifftn(np.fft.fftn(f.values) * np.fft.fftn(g.values)).real
    return GridFunction(f.spec, vals * f.spec.cell_volume)
