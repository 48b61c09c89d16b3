"""Command-line harness: config parsing, experiment suites, reports, plots.

Exit codes: 0 success, 1 hard-invariant failure (an identity or precondition
check failed), 2 invalid configuration, 3 I/O failure.  Empirical-constant
rows are recorded, never gated.
"""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import besov, extension, kernels, liftings, riesz
from .family import family_generator, family_tails
from .grid import GridFunction, GridSpec, MultiIndex, from_callable, lp_norm
from .kernels import KernelKind
from .report import Report, load_report, plot_report


class ConfigError(ValueError):
    pass


_DEFAULTS = {
    "grid.n": 1,
    "grid.N": 512,
    "grid.L": 16.0,
    "tq.a": 0.0,
    "tq.t_min": 1e-3,
    "tq.t_max": 32.0,
    "tq.rho": 1.05,
    "family.count": 10,
    "family.seed": 12345,
    "family.mean_zero": 0,
    "params.m": 1,
    "params.a": 0.0,
    "params.p": 1.0,
    "params.kind": "gauss",
    "params.l_values": "4,8,16,32,64",
    "params.floors": 4,
}

_INT_KEYS = {"grid.n", "grid.N", "family.count", "family.seed", "family.mean_zero",
             "params.m", "params.floors"}
_FLOAT_KEYS = {"grid.L", "tq.a", "tq.t_min", "tq.t_max", "tq.rho", "params.a", "params.p"}


def parse_config(path: str | None) -> dict:
    cfg = dict(_DEFAULTS)
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config: {e}") from e
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in cfg:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            cfg[key] = val
    for k in _INT_KEYS:
        cfg[k] = int(cfg[k])
    for k in _FLOAT_KEYS:
        cfg[k] = float(cfg[k])
    _validate(cfg)
    return cfg


def _validate(cfg: dict):
    if cfg["grid.n"] not in (1, 2):
        raise ConfigError("grid.n must be 1 or 2")
    N = cfg["grid.N"]
    if N < 8 or N & (N - 1):
        raise ConfigError("grid.N must be a power of two >= 8")
    if cfg["grid.L"] <= 0:
        raise ConfigError("grid.L must be positive")
    if cfg["tq.a"] <= -1 or cfg["params.a"] <= -1:
        raise ConfigError("weight exponent violates the precondition a > -1")
    if not 0 < cfg["tq.t_min"] < cfg["tq.t_max"]:
        raise ConfigError("need 0 < tq.t_min < tq.t_max")
    if cfg["tq.rho"] <= 1:
        raise ConfigError("tq.rho must exceed 1")
    if cfg["params.p"] < 1:
        raise ConfigError("params.p must be >= 1")
    if cfg["family.count"] < 1:
        raise ConfigError("family.count must be >= 1")
    if cfg["params.kind"] not in ("gauss", "poisson"):
        raise ConfigError("params.kind must be gauss or poisson")


def _spec(cfg) -> GridSpec:
    return GridSpec(cfg["grid.n"], cfg["grid.N"], cfg["grid.L"])


def _kind(cfg) -> KernelKind:
    return KernelKind(cfg["params.kind"])


def _l_values(cfg) -> list[int]:
    return [int(s) for s in str(cfg["params.l_values"]).split(",") if s.strip()]


def _map(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


# ---------------------------------------------------------------------------
# suites
# ---------------------------------------------------------------------------


def run_identities(cfg, threads=1) -> Report:
    rep = Report("identities", cfg)
    spec1 = GridSpec(1, 1024, cfg["grid.L"])
    spec2 = GridSpec(2, 256, cfg["grid.L"])

    def check(name, residual, tol):
        rep.append(name=name, residual=float(residual), tolerance=tol,
                   passed=bool(residual <= tol))

    for spec in (spec1, spec2):
        tag = f"n={spec.n}"
        check(f"heat-identity/{tag}", kernels.heat_identity_residual(1.0, spec), 1e-8)
        check(f"semigroup-spectral/{tag}", kernels.semigroup_residual(1.0, spec), 1e-12)
        check(f"semigroup-spatial/{tag}", kernels.semigroup_spatial_residual(1.0, spec), 1e-10)
    for t in (0.25, 1.0, 4.0):
        check(f"riesz-poisson/t={t}", riesz.riesz_kernel_identity(t, 0, spec=spec1), 1e-10)
    check("riesz-poisson-101/n=2", riesz.riesz_kernel_identity(1.0, 1, spec=spec2, i=0), 1e-10)

    members = family_generator(cfg["family.seed"], spec1, 3, mean_zero=True)
    f, g = members[1][1], members[2][1]
    lhs, rhs = riesz.parseval_pairing_check(f, g)
    scale = max(abs(lhs), abs(rhs), 1e-300)
    check("parseval-pairing", abs(lhs - rhs) / scale, 1e-10)
    check("poisson-decomposition", riesz.poisson_decomposition_check(f, 1.0)
          / max(1e-300, float(np.max(np.abs(extension.extend(f, KernelKind.POISSON, 1.0).values)))), 1e-10)

    fb = family_generator(cfg["family.seed"], spec1, 2)[1][1]
    check("uspenskii/gauss", extension.uspenskii_ansatz_residual(fb, 0, 0, 1.0), 1e-6)
    check("uspenskii/poisson",
          extension.uspenskii_ansatz_residual(fb, 0, 0, 1.0, KernelKind.POISSON), 1e-5)
    return rep


def run_lemma_integrals(cfg, threads=1) -> Report:
    rep = Report("lemma-integrals", cfg)
    target = 1.0 / (2.0 * math.sqrt(math.pi))
    val = kernels.heat_time_integral(MultiIndex((1,), 0), 0.0, (1.0,))
    rep.append(name="heat-integral/x=1", value=val, expected=target,
               passed=bool(abs(val - target) <= 1e-6))
    xs = [0.25, 0.5, 1.0, 2.0, 4.0]
    prods = []
    for x in xs:
        v = kernels.heat_time_integral(MultiIndex((1,), 0), 0.0, (x,))
        prods.append(v * x)  # n + |alpha| - b - 1 = 1
        rep.append(name=f"heat-integral/scaling", x=x, y=v, product=v * x, passed=True)
    spread = max(prods) - min(prods)
    rep.append(name="heat-integral/homogeneity", spread=spread,
               passed=bool(spread <= 1e-6))
    try:
        kernels.heat_time_integral(MultiIndex((0,), 0), 0.0, (1.0,))
        rejected = False
    except ValueError:
        rejected = True
    rep.append(name="heat-integral/hypothesis-rejection", passed=rejected)
    return rep


def run_trace_ratios(cfg, threads=1) -> Report:
    rep = Report("trace-ratios", cfg)
    spec = _spec(cfg)
    kind = _kind(cfg)
    members = family_generator(cfg["family.seed"], spec, cfg["family.count"])
    rep.audits["boundary_tails"] = family_tails(members)
    pairs = [(1, 0.0), (2, 0.0), (2, 0.5), (1, -0.5)]

    for m, a in pairs:
        # negative weights concentrate mass near t=0: push t_min down so the
        # analytic head bound stays under the 1% audit threshold
        t_min = cfg["tq.t_min"] if a >= 0 else 1e-6
        tq = extension.TQuadrature(a, t_min, cfg["tq.t_max"], cfg["tq.rho"])

        def one(item):
            name, f = item
            return extension.main_estimate_ratio(
                f, extension.WeightParams(m, a, 1.0), kind, tq, function_id=name
            )

        for row in _map(one, members, threads):
            rep.append(name=f"main-estimate/m={m},a={a}", function_id=row.function_id,
                       m=m, a=a, p=1.0, kind=row.kind, lhs=row.lhs, rhs=row.rhs,
                       ratio=row.ratio, head_bound=row.head_bound,
                       tail_bound=row.tail_bound, flagged=row.flagged,
                       passed=bool(row.flagged or math.isfinite(row.ratio)))

    tqp = extension.TQuadrature(0.0, cfg["tq.t_min"], cfg["tq.t_max"], cfg["tq.rho"])
    for name, f in members:
        row = extension.p_estimate_ratio(
            f, extension.WeightParams(0, 0.0, 2.0), KernelKind.GAUSS_WEIERSTRASS, tqp,
            function_id=name)
        rep.append(name="p-estimate/p=2,m=0,a=0", function_id=name, m=0, a=0.0,
                   p=2.0, kind=row.kind, lhs=row.lhs, rhs=row.rhs, ratio=row.ratio,
                   head_bound=row.head_bound, tail_bound=row.tail_bound,
                   flagged=row.flagged,
                   passed=bool(row.flagged or math.isfinite(row.ratio)))

    ts = [2.0 ** (-k) for k in range(1, 11)]
    mode = from_callable(spec, lambda *xs: np.cos(2 * np.pi * xs[0] / spec.L))
    for kd, expect in ((KernelKind.GAUSS_WEIERSTRASS, 2.0), (KernelKind.POISSON, 1.0)):
        errs = extension.trace_limit(mode, kd, ts)
        slope, r2 = liftings.fit_loglog(ts, errs)
        rep.append(name=f"trace-limit/{kd.value}", slope=slope, r2=r2,
                   expected=expect, passed=bool(abs(slope - expect) <= 0.1))
        for t, e in zip(ts, errs):
            rep.append(name=f"trace-limit-series/{kd.value}", x=t, y=e,
                       slope=slope, passed=True)
    for name, f in members:
        err = extension.trace_limit(f, KernelKind.GAUSS_WEIERSTRASS, [2.0 ** -10])[0]
        rel = err / lp_norm(f, 1.0)
        rep.append(name="trace-recovery/final", function_id=name, value=rel,
                   passed=bool(rel < 1e-3))
    taib = [extension.cross_term_check(f, tqp) for _, f in members]
    for (name, _), (lhs, rhs, ratio) in zip(members, taib):
        rep.append(name="cross-term", function_id=name, lhs=lhs, rhs=rhs,
                   ratio=ratio, passed=True)
    return rep


def run_lift(cfg, threads=1) -> Report:
    rep = Report("lift", cfg)
    spec = _spec(cfg)
    ls = _l_values(cfg)
    f = family_generator(cfg["family.seed"], spec, 2)[1][1]

    vals = [liftings.mironescu_lift(f, 1, l).extras["space_bucket"] for l in ls]
    slope, r2 = liftings.fit_loglog(ls, vals)
    rep.append(name="mironescu/space-decay", slope=slope, r2=r2, expected=-1.0,
               passed=bool(abs(slope + 1.0) <= 0.1 and r2 >= 0.98))
    for l, v in zip(ls, vals):
        rep.append(name="mironescu/space-series", x=l, y=v, slope=slope, passed=True)

    per_beta: dict[int, list[float]] = {}
    for l in ls:
        r = liftings.normal_trace_lift(f, 2, 0, l)
        for b, v in r.extras["beta_buckets"].items():
            per_beta.setdefault(b, []).append(v)
    for b, series in sorted(per_beta.items()):
        if b == 0:
            var = (max(series) - min(series)) / min(series)
            rep.append(name="normal-trace/beta0-stability", variation=var, passed=True)
        else:
            slope, r2 = liftings.fit_loglog(ls, series)
            rep.append(name=f"normal-trace/beta{b}-decay", slope=slope, r2=r2,
                       expected=-float(b),
                       passed=bool(abs(slope + b) <= 0.1 and r2 >= 0.98))

    u0 = liftings.cutoff_extension(f, 0, 0.0)
    b0, b1 = [], []
    for j in ls:
        row = liftings.grisvard_approximation(u0, 1.0, j)
        b0.append(row["buckets"][0])
        b1.append(row["buckets"][1])
    slope, r2 = liftings.fit_loglog(ls, b1)
    rep.append(name="grisvard/i1-decay", slope=slope, r2=r2, expected=-1.0,
               passed=bool(abs(slope + 1.0) <= 0.15 and r2 >= 0.98))
    scale = liftings.field_seminorm(
        u0.field, 1, extension.TQuadrature(1.0, cfg["tq.t_min"], 2.0, cfg["tq.rho"]))
    rep.append(name="grisvard/i0-vanishing", value=b0[-1] / scale,
               passed=bool(b0[-1] / scale < 0.01))

    f0 = f
    f1 = family_generator(cfg["family.seed"], spec, 3)[2][1]
    f2 = from_callable(spec, lambda *xs: np.exp(-sum(x**2 for x in xs)) * np.cos(xs[0]),
                       centered=True)
    comp = liftings.composite_lift([f0, f1, f2], 2, 0.0)
    for j, err in comp.verify_traces().items():
        rep.append(name=f"composite/trace{j}", error=err, passed=bool(err <= 1e-2))
    return rep


def run_riesz(cfg, threads=1) -> Report:
    rep = Report("riesz", cfg)
    spec = _spec(cfg)
    members = family_generator(cfg["family.seed"], spec, cfg["family.count"],
                               mean_zero=True)

    def one(item):
        name, f = item
        return riesz.riesz_besov_ratio(f, 0, function_id=name)

    for row in _map(one, members, threads):
        rep.append(name="riesz-besov", function_id=row.function_id, lhs=row.lhs,
                   rhs=row.rhs, ratio=row.ratio, flagged=row.flagged, passed=True)
    # skip the width-1/2 Gaussian: its derivative scale needs a finer grid
    # than the default for the eps = 2*step truncation to resolve
    for name, f in members[1:4]:
        pv = riesz.riesz_pv_oracle(f, 0, 2 * spec.step)
        sp_ = riesz.riesz_transform(f, 0)
        denom = lp_norm(sp_, 1.0)
        rel = lp_norm(pv - sp_, 1.0) / denom if denom > 0 else 0.0
        rep.append(name="riesz-pv-agreement", function_id=name, value=rel,
                   passed=bool(rel <= 0.05))
    return rep


def run_counterexample(cfg, threads=1) -> Report:
    rep = Report("counterexample", cfg)
    spec = GridSpec(1, max(cfg["grid.N"], 1024), cfg["grid.L"])
    bp = besov.BesovParams(1.0, 1.0, 1.0)
    floors = [spec.step * 2**j for j in range(cfg["params.floors"])]

    chi = besov.indicator_counterexample(spec)
    ds = besov.divergence_study(chi, bp, floors)
    rep.append(name="divergence/indicator", slope=ds.slope, r2=ds.r_squared,
               passed=bool(ds.slope > 0 and ds.r_squared >= 0.99))
    for fl, v in zip(ds.floors, ds.truncated_values):
        rep.append(name="divergence/indicator-series", x=1.0 / fl, y=v,
                   slope=ds.slope, passed=True)

    smooth = from_callable(spec, lambda x: np.exp(-(x**2)), centered=True)
    scale = besov.besov_seminorm(smooth, bp).value
    dsm = besov.divergence_study(smooth, bp, floors)
    rep.append(name="divergence/smooth-control", slope=dsm.slope,
               rel_slope=abs(dsm.slope) / scale,
               passed=bool(abs(dsm.slope) <= 0.05 * scale))

    psispec = GridSpec(1, 8192, cfg["grid.L"])
    dpsi = besov.psi_normal_derivative(psispec, 2)
    dsp = besov.divergence_study(dpsi, bp, [psispec.step * 2**j for j in range(4)])
    rep.append(name="divergence/psi-k2", slope=dsp.slope, r2=dsp.r_squared,
               passed=bool(dsp.slope > 0 and dsp.r_squared >= 0.99))
    return rep


def run_embedding(cfg, threads=1) -> Report:
    rep = Report("embedding", cfg)
    spec = _spec(cfg)
    members = family_generator(cfg["family.seed"], spec, cfg["family.count"])
    for name, f in members:
        res = besov.ftc_embedding_check(f)
        rep.append(name="ftc-inequality", function_id=name,
                   max_ratio=res["max_ratio"],
                   large_h_sum=res["large_h_sum"], large_h_bound=res["large_h_bound"],
                   passed=bool(res["max_ratio"] <= 1.0 + 1e-9))
    if spec.n == 1:
        for name, f in members:
            z = besov.zygmund_seminorm(f, 0.5, 1)
            d1 = lp_norm(
                extension.ExtensionField(f, KernelKind.GAUSS_WEIERSTRASS)
                .derivative(MultiIndex((1,), 0), 1e-6), 2.0)
            rep.append(name="zygmund-vs-h1", function_id=name, value=z,
                       ratio=z / d1 if d1 > 0 else float("nan"), passed=True)
    return rep


_SUITES = {
    "identities": run_identities,
    "lemma-integrals": run_lemma_integrals,
    "trace-ratios": run_trace_ratios,
    "lift": run_lift,
    "riesz": run_riesz,
    "counterexample": run_counterexample,
    "embedding": run_embedding,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tracelab",
        description="numerical experiments for half-space extensions and Besov traces",
    )
    parser.add_argument("verb", choices=[*_SUITES, "report"])
    parser.add_argument("target", nargs="?", help="JSON report path (report verb)")
    parser.add_argument("--config", default=None, help="flat key=value config file")
    parser.add_argument("--out", default="reports", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="family seed override")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--selector", default="", help="row selector (report verb)")
    args = parser.parse_args(argv)

    if args.verb == "report":
        if not args.target:
            print("error: report verb needs a JSON report path", file=sys.stderr)
            return 2
        try:
            data = load_report(args.target)
            written = plot_report(data, args.selector, args.out)
        except (OSError, ValueError) as e:
            print(f"error: {e}", file=sys.stderr)
            return 3 if isinstance(e, OSError) else 2
        for p in written:
            print(p)
        return 0

    try:
        cfg = parse_config(args.config)
        if args.seed is not None:
            cfg["family.seed"] = args.seed
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2

    try:
        rep = _SUITES[args.verb](cfg, threads=max(1, args.threads))
    except (ValueError, extension.ResolutionError) as e:
        print(f"invariant failure: {e}", file=sys.stderr)
        return 1

    try:
        jpath, cpath = rep.write(args.out)
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 3

    n_fail = len(rep.failures)
    print(f"{args.verb}: {len(rep.rows)} rows, {n_fail} failures -> {jpath}, {cpath}")
    if n_fail:
        for r in rep.failures:
            print(f"  FAIL {r.get('name')}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
