"""Command-line driver: run one scenario config or a suite manifest.

    omegaput --config scenarios/fig1.json --out-dir out/
    omegaput --config scenarios/manifest.json --out-dir out/ --threads 4
    omegaput --config scenarios/manifest.json --dry-run

A suite manifest is a JSON object with a ``scenarios`` list of config paths
(relative to the manifest).  Exit codes: 0 success, 2 config error,
3 numerical failure, 4 tolerance failure (suite mode).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .closed_forms import bessel_scale_lambda0, kummer_scale_sigma0
from .config import ScenarioConfig, load_document, load_scenarios
from .errors import ConfigError, OmegaPutError
from .levy_model import psi_roots
from .montecarlo import mc_estimate
from .omega_scale import build_ode, exp_shift_ode, solve_to_plateau
from .pricer import PricingMachinery, boundary_pasting, candidate_value, value_curve

log = logging.getLogger("omegaput")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_TOLERANCE = 0, 2, 3, 4
FMT = "%.12g"


@dataclass
class VariantResult:
    scenario: str
    label: str
    u_star: float = math.nan
    value_at_K: float = math.nan
    fit_residual: float = math.nan
    pasting: float = math.nan
    mc_max_rel_delta: float = math.nan
    status: str = "ok"
    message: str = ""
    flags: list = field(default_factory=list)


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return FMT % v


def write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _closed_forms(cfg: ScenarioConfig, u: float):
    """Closed-form (W, Z) at level u where one exists, else None."""
    p, d = cfg.params(), cfg.discount_fn()
    if d.kind not in ("linear", "power"):
        return None
    try:
        if p.regime == "sigma0":
            return kummer_scale_sigma0(d, p, "W", u), kummer_scale_sigma0(d, p, "Z", u)
        if p.regime == "lambda0":
            return bessel_scale_lambda0(d, p, 0.0, "W", u), bessel_scale_lambda0(d, p, 0.0, "Z", u)
    except OmegaPutError as exc:
        log.info("closed form unavailable at u=%g: %s", u, exc)
    return None


def _scale_rows(cfg: ScenarioConfig, mach: PricingMachinery, u: float):
    x = np.round(np.arange(0.0, cfg.outputs.scale_x_max + 1e-9, 0.05), 12)
    p, d = cfg.params(), cfg.discount_fn()
    st = mach.settings
    header = ["alpha", "x", "W", "W_prime", "Z", "Z_prime"]
    closed = _closed_forms(cfg, u)
    if closed is not None:
        header += ["W_closed", "Z_closed"]
    alphas = [0.0]
    if p.regime == "full" and not d.is_constant:
        alphas += [cfg.alpha] if cfg.alpha is not None else list(cfg.alpha_schedule)
    rows = []
    for a in alphas:
        if d.is_constant and a == 0.0:
            pair = mach._classic
            cols = [pair.W(x), pair.W_prime(x), pair.Z(x), pair.Z_prime(x)]
        else:
            spec = build_ode(d, p, a, u)
            if a > 0:
                spec = exp_shift_ode(spec, a)
            sol = solve_to_plateau(spec, st.step, st.taylor_order, st.c_tol, x_cap=st.x_cap, x_min=x[-1] + 0.1)
            cols = [sol.W(x), sol.W_prime(x), sol.Z(x), sol.Z_prime(x)]
        if closed is not None:
            cols += [closed[0](x), closed[1](x)] if a == 0.0 else [np.full_like(x, np.nan)] * 2
        for i, xi in enumerate(x):
            rows.append([a, xi] + [float(c[i]) for c in cols])
    return header, rows


def _ratio_rows(cfg: ScenarioConfig, mach: PricingMachinery, u: float):
    with np.errstate(divide="ignore", invalid="ignore"):
        if mach.discount.is_constant:
            pair = mach._classic
            x = np.round(np.arange(0.0, 20.0 + 1e-9, 0.1), 12)
            r = pair.Z(x) / pair.W(x)
            c = mach._c_const
        else:
            sol = mach.exit_solution(u)
            x = sol.x_grid[::5]
            r = sol.Z(x) / sol.W(x)
            c = sol.c_ratio
    return [[xi, ri, c] for xi, ri in zip(x, r)], c


def run_variant(cfg: ScenarioConfig, out: Path, label: Optional[str]) -> VariantResult:
    res = VariantResult(cfg.name, label or "")
    p, d = cfg.params(), cfg.discount_fn()
    mach = PricingMachinery(p, d, cfg.solver_settings(), cfg.schedule(), cfg.alpha, cfg.alpha_method)
    g = cfg.s_grid
    s = np.linspace(g.min, g.max, g.points) if g.points > 1 else np.array([g.min])
    check_s = cfg.check_s if cfg.check_s is not None else 1.5 * p.K
    mach.y_span_s = max(p.K, check_s)
    curve = value_curve(s, mach, s_ref=cfg.s_ref, check_s=check_s)
    u = curve.u_star
    res.u_star = u
    res.fit_residual = curve.fit_residual
    res.pasting = boundary_pasting(u, mach)
    res.value_at_K = float(candidate_value(p.K, u, mach)[0])
    res.flags = sorted(set(curve.flags))

    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / "value_curve.csv", ["s", "payoff", "value"], zip(curve.s_grid, curve.payoff, curve.values))
    (out / "boundary.txt").write_text(
        f"u_star {FMT % u}\nfit_residual {FMT % curve.fit_residual}\nregime {curve.regime}\n", encoding="utf-8"
    )
    if cfg.outputs.emit_per_u:
        write_csv(out / "per_u.csv", ["u", "candidate"], curve.per_u)
    c_value = None
    if cfg.outputs.emit_ratio:
        rows, c_value = _ratio_rows(cfg, mach, u)
        write_csv(out / "ratio.csv", ["x", "ratio", "c"], rows)
    if cfg.outputs.emit_scale_functions:
        header, rows = _scale_rows(cfg, mach, u)
        write_csv(out / "scale_functions.csv", header, rows)

    if cfg.alpha_panel and p.regime == "full" and not d.is_constant:
        # single-level curves, each with its own boundary; diagnostics only
        rows = []
        for a in cfg.alpha_panel:
            m_a = PricingMachinery(p, d, cfg.solver_settings(), cfg.schedule(), a)
            m_a.y_span_s = p.K
            c_a = value_curve(s, m_a)
            rows += [[a, c_a.u_star, sv, v] for sv, v in zip(c_a.s_grid, c_a.values)]
        write_csv(out / "alpha_panel.csv", ["alpha", "u_star", "s", "value"], rows)

    if cfg.mc.enabled:
        rows = []
        worst = 0.0
        for ratio in cfg.mc.s_over_u:
            sv = ratio * u
            exact = float(candidate_value(sv, u, mach)[0])
            mc = mc_estimate(sv, u, p, d, cfg.mc_config())
            delta = abs(mc.mean - exact) / abs(exact)
            ok = abs(mc.mean - exact) <= max(cfg.tolerances.mc_rel * abs(exact), 3.0 * mc.half_width)
            worst = max(worst, delta)
            rows.append([sv, u, exact, mc.mean, mc.half_width, mc.truncated, "yes" if ok else "no"])
            if not ok:
                res.status = "tolerance"
                res.message = f"MC mismatch at s={sv:.6g}"
        res.mc_max_rel_delta = worst
        write_csv(out / "mc_check.csv", ["s", "u", "analytic", "mc_mean", "ci_half_width", "truncated", "within"],
                  rows)

    if curve.fit_residual > cfg.tolerances.fit_residual:
        res.status = "tolerance"
        res.message = f"fit residual {curve.fit_residual:.3g} above {cfg.tolerances.fit_residual:.3g}"
    if res.pasting > cfg.tolerances.pasting * p.K:
        res.status = "tolerance"
        res.message = f"pasting residual {res.pasting:.3g} above tolerance"

    derived = {
        "zeta": p.zeta,
        "regime": p.regime,
        "roots_q0": list(map(float, psi_roots(0.0, p).roots)),
        "u_star": u,
        "fit_residual": curve.fit_residual,
        "pasting_residual": res.pasting,
        "value_at_K": res.value_at_K,
    }
    if d.is_constant:
        derived["roots_q"] = list(map(float, mach._classic.rootset.roots))
        derived["c"] = mach._c_const
    else:
        derived["c"] = c_value if c_value is not None else mach.exit_solution(u).c_ratio
    manifest = {
        "package_version": __version__,
        "scenario": cfg.name,
        "variant": label,
        "config": cfg.to_dict(),
        "derived": derived,
        "flags": res.flags,
        "status": res.status,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return res


def run_scenario(config_path: str | Path, out_dir: str | Path | None = None) -> list[VariantResult]:
    """Run every variant of one scenario config; raises ConfigError / OmegaPutError."""
    variants = load_scenarios(config_path)
    results = []
    for label, cfg in variants:
        base = Path(out_dir) if out_dir is not None else Path(cfg.outputs.dir or f"out/{cfg.name}")
        out = base / label if label else base
        log.info("running %s%s", cfg.name, f" [{label}]" if label else "")
        results.append(run_variant(cfg, out, label))
    return results


def _suite_entry(path: str, out_dir: str) -> list[VariantResult]:
    name = Path(path).stem
    try:
        return run_scenario(path, Path(out_dir) / name)
    except ConfigError as exc:
        return [VariantResult(name, "", status="config", message=str(exc))]
    except OmegaPutError as exc:
        return [VariantResult(name, "", status="numerical", message=f"{type(exc).__name__}: {exc}")]


def _manifest_paths(manifest_path: Path, raw: dict) -> list[str]:
    items = raw.get("scenarios")
    if not isinstance(items, list) or not items:
        raise ConfigError("scenarios", "expected a nonempty list of config paths")
    out = []
    for i, item in enumerate(items):
        if not isinstance(item, str):
            raise ConfigError(f"scenarios[{i}]", "expected a path string")
        out.append(str((manifest_path.parent / item).resolve()))
    return out


def run_suite(manifest_path: str | Path, out_dir: str | Path = "out", dry_run: bool = False,
              threads: int = 1) -> tuple[int, list[VariantResult]]:
    manifest_path = Path(manifest_path)
    raw = load_document(manifest_path)
    paths = _manifest_paths(manifest_path, raw)
    if dry_run:
        results = []
        for pth in paths:
            name = Path(pth).stem
            try:
                n = len(load_scenarios(pth))
                results.append(VariantResult(name, "", status="valid", message=f"{n} variant(s)"))
            except ConfigError as exc:
                results.append(VariantResult(name, "", status="config", message=str(exc)))
        for r in results:
            print(f"{r.scenario}: {r.status} {r.message}")
        code = EXIT_CONFIG if any(r.status == "config" for r in results) else EXIT_OK
        return code, results

    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            batches = list(pool.map(_suite_entry, paths, [str(out_dir)] * len(paths)))
    else:
        batches = [_suite_entry(pth, str(out_dir)) for pth in paths]
    results = [r for b in batches for r in b]

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(
        out / "summary.csv",
        ["scenario", "variant", "u_star", "value_at_K", "fit_residual", "pasting", "mc_max_rel_delta", "status",
         "message"],
        ([r.scenario, r.label, r.u_star, r.value_at_K, r.fit_residual, r.pasting, r.mc_max_rel_delta, r.status,
          r.message] for r in results),
    )
    for r in results:
        tag = f"{r.scenario}/{r.label}" if r.label else r.scenario
        print(f"{tag:28s} u*={r.u_star:<14.8g} V(K)={r.value_at_K:<14.8g} fit={r.fit_residual:<10.3g} {r.status}"
              + (f"  {r.message}" if r.message else ""))
    statuses = {r.status for r in results}
    if "config" in statuses:
        code = EXIT_CONFIG
    elif "numerical" in statuses:
        code = EXIT_NUMERIC
    elif "tolerance" in statuses:
        code = EXIT_TOLERANCE
    else:
        code = EXIT_OK
    return code, results


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="omegaput", description="Perpetual American put with asset-dependent discount.")
    ap.add_argument("--config", required=True, help="scenario config or suite manifest (JSON)")
    ap.add_argument("--out-dir", default=None, help="output directory (default: outputs.dir or out/<name>)")
    ap.add_argument("--dry-run", action="store_true", help="validate configs only, write nothing")
    ap.add_argument("--threads", type=int, default=1, help="worker processes for suite runs")
    ap.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        raw = load_document(args.config)
        if isinstance(raw, dict) and "scenarios" in raw:
            code, _ = run_suite(args.config, args.out_dir or "out", args.dry_run, args.threads)
            return code
        if args.dry_run:
            n = len(load_scenarios(args.config))
            print(f"{args.config}: valid, {n} variant(s)")
            return EXIT_OK
        results = run_scenario(args.config, args.out_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OmegaPutError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for r in results:
        tag = f" [{r.label}]" if r.label else ""
        print(f"{r.scenario}{tag}: u*={r.u_star:.10g} V(K)={r.value_at_K:.10g} fit={r.fit_residual:.3g} {r.status}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
