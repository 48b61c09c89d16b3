"""Deterministic seeded families of test functions for the harness sweeps."""

from __future__ import annotations

import numpy as np

from .grid import GridFunction, GridSpec, from_callable, lp_norm


def _gaussian(spec: GridSpec, width: float) -> GridFunction:
    def fn(*xs):
        r2 = sum(x**2 for x in xs)
        return np.exp(-2.0 * r2 / width**2)

    return from_callable(spec, fn, centered=True)


def _bump(spec: GridSpec, center: float, radius: float) -> GridFunction:
    def fn(*xs):
        r2 = sum((x - center) ** 2 for x in xs) / radius**2
        out = np.zeros_like(r2)
        inside = r2 < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
        return out

    return from_callable(spec, fn, centered=True)


def _modulated(spec: GridSpec, mode: int) -> GridFunction:
    def fn(*xs):
        r2 = sum(x**2 for x in xs)
        return np.exp(-2.0 * r2) * np.cos(2.0 * np.pi * mode * xs[0] / spec.L)

    return from_callable(spec, fn, centered=True)


def _random_band_limited(spec: GridSpec, rng: np.random.Generator, max_mode: int) -> GridFunction:
    coeffs = np.zeros(spec.shape, dtype=complex)
    k = spec.modes()
    live = np.ones(spec.shape, dtype=bool)
    for kk in k:
        live &= np.abs(kk) <= max_mode
    live &= ~np.all([kk == 0 for kk in k], axis=0)
    idx = np.argwhere(live)
    # draw in fixed lexicographic order for determinism
    order = np.lexsort(idx.T[::-1])
    decay = 1.0 + sum(kk**2 for kk in k)
    for flat in order:
        pos = tuple(idx[flat])
        re, im = rng.standard_normal(2)
        coeffs[pos] = (re + 1j * im) / decay[pos]
    vals = np.fft.ifftn(coeffs).real * (spec.N / spec.L) ** spec.n
    f = GridFunction(spec, vals)
    norm = lp_norm(f, 1.0)
    return GridFunction(spec, vals / norm) if norm > 0 else f


def family_generator(
    seed: int, spec: GridSpec, count: int, mean_zero: bool = False
) -> list[tuple[str, GridFunction]]:
    """Fixed family: 3 Gaussians, 2 bumps, 2 modulated Gaussians, then random
    band-limited fields (modes <= N/8, unit L^1)."""
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    members: list[tuple[str, GridFunction]] = []
    builders = [
        ("gaussian-w0.5", lambda: _gaussian(spec, 0.5)),
        ("gaussian-w1", lambda: _gaussian(spec, 1.0)),
        ("gaussian-w2", lambda: _gaussian(spec, 2.0)),
        ("bump-left", lambda: _bump(spec, -2.0, 2.0)),
        ("bump-right", lambda: _bump(spec, 2.0, 2.0)),
        ("modulated-k3", lambda: _modulated(spec, 3)),
        ("modulated-k5", lambda: _modulated(spec, 5)),
    ]
    max_mode = spec.N // 8
    for i in range(count):
        if i < len(builders):
            name, build = builders[i]
            f = build()
        else:
            name = f"random-band-{i - len(builders)}"
            f = _random_band_limited(spec, rng, max_mode)
        if mean_zero:
            f = f - f.mean()
        members.append((name, f))
    return members


def family_tails(members) -> dict[str, float]:
    return {name: f.boundary_tail() for name, f in members}
