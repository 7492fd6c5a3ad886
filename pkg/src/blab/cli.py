"""Command-line front end: `blab weight-info | classify | verify`."""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_config
from .errors import BlabError, ConfigurationError, DomainError, NotSelfMapError
from .geometry import build_covering, comparability_check, distance_matrix, julia_containment
from .kernel import (build_kernel_table, check_diagonal_estimate, check_offdiagonal_decay,
                     export_table, kernel_vanishing_on_compacts, reproducing_pairing)
from .numerics import build_quadrature, default_boundary_exponent, log_moments
from .operators import (ClassifyOptions, DiscreteMeasure, carleson_diagnostics, classify,
                        log_berezin)
from .symbols import MapSpec, angular_derivative
from .weights import check_class_W, m_tau

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG = 0, 1, 2
LN10 = math.log(10.0)


# ---------------------------------------------------------------- JSON

def _fmt_float(x):
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return f"{x:.12e}"


def _to_json(obj, indent=0):
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{pad}"{k}": {_to_json(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.floating, np.integer, bool)) for v in seq):
            return "[" + ", ".join(_to_json(v) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + _to_json(v, indent + 1) for v in seq) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if obj is None:
        return "null"
    if isinstance(obj, complex):
        return _to_json({"re": obj.real, "im": obj.imag}, indent)
    s = str(obj).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{s}"'


def dumps(obj):
    """Deterministic JSON: insertion-ordered keys, floats at 12 significant digits."""
    return _to_json(obj) + "\n"


def log10_entry(ln_value):
    return {"log10": float(ln_value) / LN10}


def _write(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(obj))


# ---------------------------------------------------------------- commands

def cmd_weight_info(cfg: RunConfig, out_dir=None):
    w = cfg.weight
    rep = check_class_W(w)
    lp = log_moments(w, 100) if w.is_exponential else None
    info = {
        "weight": w.to_dict(),
        "class_W": rep.to_dict(),
        "m_tau": m_tau(w),
    }
    if lp is not None:
        info["log_moments"] = {str(k): log10_entry(lp[k]) for k in (0, 1, 10, 100)}
    text = dumps(info)
    sys.stdout.write(text)
    if out_dir is not None:
        _write(Path(out_dir) / "weight_info.json", info)
    # test kinds are reported, never failed
    if w.is_exponential and not rep.in_class_W:
        return EXIT_INVARIANT
    return EXIT_OK


def _setup(cfg: RunConfig):
    w = cfg.weight
    t = build_kernel_table(w, cfg.kernel.target_radius, cfg.kernel.tolerance)
    q = build_quadrature(cfg.quadrature.n_radial, cfg.quadrature.n_angular,
                         default_boundary_exponent(w))
    return t, q


def cmd_classify(cfg: RunConfig, out_dir):
    out = Path(out_dir)
    t, q = _setup(cfg)
    opts = ClassifyOptions(p_values=tuple(cfg.schatten_p), N=cfg.matrix_dimension,
                           rings=cfg.ring_protocol)
    reports, rows, flags = [], [], []
    for mdict in cfg.maps:
        try:
            phi = mdict if isinstance(mdict, MapSpec) else MapSpec.from_dict(mdict)
        except NotSelfMapError as e:
            reports.append({"map": mdict, "error": f"not a self-map: {e}"})
            continue
        for u in cfg.multipliers:
            try:
                r = classify(t, u, phi, q, opts)
            except (DomainError, BlabError) as e:
                reports.append({"map": phi.to_dict(), "multiplier": u.to_dict(),
                                "error": str(e)})
                continue
            d = r.to_dict()
            d["bounded"]["log_ring_sups"] = [log10_entry(v) for v in r.bounded.log_sup_rings]
            reports.append(d)
            if not r.consistent:
                flags.append(f"{phi.label} / {u.label}")
            for rad, lv in zip(opts.rings.radii, r.bounded.log_sup_rings):
                rows.append((phi.label, u.label, float(rad), float(lv) / LN10))
    _write(out / "report.json", {"config": cfg.to_dict(), "kernel": {
        "K_max": t.k_max, "certified_radius": t.certified_radius, "tol": t.tol},
        "reports": reports, "inconsistent": flags})
    with open(out / "rings.csv", "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(["map", "multiplier", "radius", "log10_sup_berezin"])
        for m, u, rad, lv in rows:
            wr.writerow([m, u, f"{rad:.12e}", f"{lv:.12e}"])
    export_table(t, out / "moments.json")
    for f in flags:
        print(f"warning: inconsistent verdicts for {f}", file=sys.stderr)
    print(f"wrote {len(reports)} report(s) to {out}")
    return EXIT_OK


def _check(results, name, ok, **measured):
    results.append({"invariant": name, "pass": bool(ok), **measured})
    print(f"{'PASS' if ok else 'FAIL'} {name} " +
          " ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                   for k, v in measured.items()))


def _guard(results, name, fn):
    try:
        fn()
    except (BlabError, ValueError) as e:
        _check(results, name, False, error=str(e))


def cmd_verify(cfg: RunConfig, out_dir=None):
    w = cfg.weight
    res = []
    t, q = _setup(cfg)
    mt = m_tau(w)
    rng = np.random.default_rng(0)

    def class_w():
        rep = check_class_W(w)
        _check(res, "class_W", rep.in_class_W or not w.is_exponential,
               m_tau=rep.m_tau, regular=rep.regular)

    def comparability():
        worst = (1.0, 1.0)
        for a in (0.0, 0.5, 0.9, 0.99):
            lo, hi = comparability_check(w, a, mt / 2)
            worst = (min(worst[0], lo), max(worst[1], hi))
        _check(res, "comparability", 0.5 <= worst[0] and worst[1] <= 2.0,
               min_ratio=worst[0], max_ratio=worst[1])

    def covering():
        c = cfg.covering
        cov = build_covering(w, c.delta_fraction * mt, c.epsilon, c.grid_size)
        ok = (cov.separation_violations == 0 and cov.uncovered == 0
              and cov.multiplicity <= c.multiplicity_bound)
        _check(res, "covering", ok, points=int(cov.points.size),
               separation_violations=cov.separation_violations, uncovered=cov.uncovered,
               multiplicity=cov.multiplicity, pitch_certified=cov.pitch_certified)

    def reproducing():
        worst = 0.0
        f = 1 + q.points ** 3 - 2j * q.points ** 10
        for _ in range(10):
            z = 0.8 * math.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
            ex = 1 + z ** 3 - 2j * z ** 10
            worst = max(worst, abs(reproducing_pairing(t, q, f, z) - ex) / abs(ex))
        _check(res, "reproducing_property", worst < 1e-8, max_rel_error=worst)

    def berezin_norm():
        mu = DiscreteMeasure.from_quadrature(q)
        errs = [abs(math.expm1(log_berezin(t, mu, z))) for z in (0.0, 0.5, 0.7j, -0.9)]
        _check(res, "berezin_normalization", max(errs) < 1e-4, max_error=max(errs))

    def diagonal():
        ring = np.linspace(0.3, min(0.99, t.certified_radius), 40)
        st = check_diagonal_estimate(t, ring, mt / 4)
        _check(res, "diagonal_estimate", st.diag_ratio < 100 and st.offdiag_min >= 1e-2,
               diag_ratio=st.diag_ratio, offdiag_min=st.offdiag_min)

    def offdiagonal():
        # one shared mesh; points kept inside |z| <= 0.9 so the mesh stays small
        r = 0.9 * np.sqrt(rng.uniform(0.1, 1.0, 200))
        p = r * np.exp(2j * np.pi * rng.uniform(size=200))
        D = distance_matrix(w, p, 1 / 8)
        pairs = [(p[2 * i], p[2 * i + 1]) for i in range(100)]
        fit = check_offdiagonal_decay(t, pairs, [D[2 * i, 2 * i + 1] for i in range(100)])
        _check(res, "offdiagonal_decay", fit.sigma > 0 and fit.r2 > 0.5,
               sigma=fit.sigma, r2=fit.r2)

    def vanishing():
        zs = 1 - 2.0 ** -np.arange(4, 9)
        zs = zs[zs <= t.certified_radius]
        m = kernel_vanishing_on_compacts(t, 0.5, zs)
        _check(res, "kernel_vanishing", bool(np.all(np.diff(m) < 0) and m[-1] / m[0] < 1e-2),
               n_points=int(zs.size), final_over_initial=float(m[-1] / m[0]))

    def carleson():
        mu = DiscreteMeasure.from_quadrature(q)
        cov = build_covering(w, mt / 4, 1e-2, 200)
        tp = np.array([0.0, 0.3, 0.5j, -0.7, 0.8 + 0.1j])
        rep = carleson_diagnostics(w, t, mu, mt / 4, tp, cov)
        _check(res, "carleson_constant", math.isfinite(rep.averbere_constant),
               averbere_constant=rep.averbere_constant, sup_berezin=rep.sup_berezin)

    def julia():
        worst = 0.0
        for mdict in cfg.maps:
            try:
                phi = mdict if isinstance(mdict, MapSpec) else MapSpec.from_dict(mdict)
            except NotSelfMapError:
                continue
            bd = angular_derivative(phi, 1.0)
            if bd.eta is None or not math.isfinite(bd.d_phi) or abs(abs(bd.eta) - 1) > 1e-6:
                continue
            worst = max(worst, julia_containment(phi, 1.0, bd.d_phi, bd.eta).worst)
        _check(res, "julia_inequality", worst <= 1 + 1e-4, max_ratio=worst)

    for name, fn in [("class_W", class_w), ("comparability", comparability),
                     ("covering", covering), ("reproducing_property", reproducing),
                     ("berezin_normalization", berezin_norm), ("diagonal_estimate", diagonal),
                     ("offdiagonal_decay", offdiagonal), ("kernel_vanishing", vanishing),
                     ("carleson_constant", carleson), ("julia_inequality", julia)]:
        _guard(res, name, fn)
    if out_dir is not None:
        _write(Path(out_dir) / "verify.json", {"weight": w.to_dict(), "results": res})
        ring = np.linspace(0.3, min(0.99, t.certified_radius), 40)
        st = check_diagonal_estimate(t, ring, mt / 4)
        with open(Path(out_dir) / "diagonal.csv", "w", newline="") as fh:
            wr = csv.writer(fh, lineterminator="\n")
            wr.writerow(["radius", "log10_K_omega_tau2"])
            for rad, lv in zip(st.radii, st.log_diag):
                wr.writerow([f"{rad:.12e}", f"{lv / LN10:.12e}"])
    failed = [r["invariant"] for r in res if not r["pass"]]
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def build_parser():
    p = argparse.ArgumentParser(prog="blab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, needs_out in (("weight-info", False), ("classify", True), ("verify", False)):
        sp = sub.add_parser(name)
        sp.add_argument("-c", "--config", required=True)
        sp.add_argument("-o", "--output", required=needs_out, default=None)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigurationError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "weight-info":
            return cmd_weight_info(cfg, args.output)
        if args.command == "classify":
            return cmd_classify(cfg, args.output)
        return cmd_verify(cfg, args.output)
    except ConfigurationError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
