"""Command-line surface: excitation specs in, states / form factors /
verification reports out, as deterministic JSON or a flat CSV projection.

Exit codes: 0 success, 1 solver failure, 2 validation-suite failure.
Every emitted number is accompanied by its residual/tolerance/diagnostic,
and the seed is echoed so reruns are byte-identical.
"""

import argparse
import csv
import hashlib
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from importlib import resources

import numpy as np

from . import dets, ed, solve, thermo
from .core import (
    BetheState, bethe_residuals, momentum_phase, spinon_energy_momentum,
    state_energy, PAULI_ENERGY_SCALE,
)
from .errors import BethexxError, ConfigError


def _cplx(z):
    z = complex(z)
    return [z.real, z.imag]


def _cplx_list(zs):
    return [_cplx(z) for z in zs]


def spec_hash(obj):
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_excitation(text_or_path):
    """Parse an excitation spec (inline JSON or a file path) and validate."""
    if text_or_path.strip().startswith("{"):
        raw = text_or_path
    else:
        with open(text_or_path) as fh:
            raw = fh.read()
    try:
        spec = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError("excitation spec is not valid JSON: %s" % exc)
    try:
        import jsonschema
        with resources.files("bethexx.schemas").joinpath(
                "excitation.schema.json").open() as fh:
            jsonschema.validate(spec, json.load(fh))
    except ImportError:
        pass
    except Exception as exc:
        raise ConfigError("excitation spec rejected by schema: %s" % exc)
    if spec["strings"].get("nq", 0) or spec["strings"].get("nw", 0):
        raise ConfigError("only n2s strings are solvable; nq/nw must be 0 "
                          "(quartet and wide-pair state solving is not wired "
                          "into the excitation solver)")
    return spec


def _solve_spec(spec, tol, freeze_m):
    slots = [h / 2.0 for h in spec["holes"]]
    n2s = spec["strings"]["n2s"]
    if n2s == 0:
        if slots:
            return solve.solve_hole_excitation(spec["M"], slots, tol=tol)
        gs = solve.solve_ground_state(spec["M"], tol=tol)
        cls = solve.DLClassification(
            real_roots=gs.roots.real, close_pairs=[], quartets=[],
            wide_pairs=[], holes=[], hole_slots=np.array([]),
            higher_roots=np.array([], dtype=complex))
        return gs, cls
    return solve.solve_close_pair_state(
        spec["M"], slots, n2s=n2s,
        center_seeds=spec.get("center_seeds"), tol=tol, freeze_m=freeze_m)


def _state_payload(state, cls=None):
    out = {
        "M": state.M,
        "roots": _cplx_list(state.roots),
        "residual": {"value": state.max_residual, "tolerance": state.tol},
        "energy": {"value": state_energy(state),
                   "note": "Pauli-matrix normalisation, -2/(lam^2+1/4) per root"},
        "momentum": {"value": momentum_phase(state), "branch": "(-pi, pi]"},
        "sz_sector": state.sz_sector,
        "frozen_deviation": state.frozen_deviation,
    }
    if cls is not None:
        out["classification"] = {
            "real_roots": list(map(float, cls.real_roots)),
            "close_pairs": [[_cplx(c), _cplx(d)] for (c, d) in cls.close_pairs],
            "quartets": [[_cplx(a), _cplx(b), _cplx(d)] for (a, b, d) in cls.quartets],
            "wide_pairs": [[_cplx(a), _cplx(b)] for (a, b) in cls.wide_pairs],
            "holes": list(map(float, cls.holes)),
            "hole_slots": list(map(float, np.atleast_1d(cls.hole_slots)))
            if cls.hole_slots is not None else None,
            "counts": {"n_r": cls.n_r, "n_2s": cls.n_2s, "n_q": cls.n_q,
                       "n_w": cls.n_w, "n_h": cls.n_h, "n_tilde": cls.n_tilde},
            "spin": cls.spin,
        }
    return out


def _ff_payload(res):
    diag = dict(res.diagnostics)
    for key in ("delta", "higher_roots"):
        if key in diag and diag[key] is not None:
            diag[key] = _cplx_list(diag[key])
    for key in ("phase", "bound_state_prefactor"):
        if key in diag and diag[key] is not None:
            diag[key] = _cplx(diag[key])
    return {"value": res.value, "pipeline": res.pipeline, "diagnostics": diag}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_gs(args):
    gs = solve.solve_ground_state(args.M, tol=args.tol)
    return _state_payload(gs)


def cmd_excite(args):
    spec = load_excitation(args.spec)
    state, cls = _solve_spec(spec, args.tol, args.Mstar)
    return {"spec_hash": spec_hash(spec), **_state_payload(state, cls)}


def cmd_hlbe(args):
    spec = load_excitation(args.spec) if args.spec else None
    if spec is not None:
        state, cls = _solve_spec(spec, args.tol, args.Mstar)
        holes = cls.holes
    else:
        holes = np.array(args.holes, dtype=float)
    n_tilde = args.n_tilde
    branches = solve.higher_level_roots(holes, n_tilde)
    residuals = [float(np.max(np.abs(solve.higher_level_residuals(holes, b))))
                 if len(b) else 0.0 for b in branches]
    return {
        "holes": list(map(float, holes)),
        "n_tilde": n_tilde,
        "branches": [_cplx_list(b) for b in branches],
        "residuals": {"values": residuals, "tolerance": 1e-12},
    }


def cmd_ff_finite(args):
    spec = load_excitation(args.spec)
    gs = solve.solve_ground_state(spec["M"], tol=args.tol)
    state, cls = _solve_spec(spec, args.tol, args.Mstar)
    res = dets.finite_form_factor(gs, state, cls)
    out = {"spec_hash": spec_hash(spec), "form_factor": _ff_payload(res)}
    if args.compare_ed:
        vg = ed.build_bethe_vector(gs)
        ve = ed.apply_s_minus(ed.build_bethe_vector(state))
        ff_ed = ed.direct_form_factor_squared(vg, ve, site=1)
        rel = abs(res.value - ff_ed) / ff_ed if ff_ed else None
        out["ed_value"] = ff_ed
        out["relative_difference"] = {"value": rel, "tolerance": 1e-8}
    return out


def cmd_ff_thermo(args):
    spec = load_excitation(args.spec)
    thermo.BULK_CUTOFF = args.bulk_cutoff
    gs = solve.solve_ground_state(spec["M"], tol=args.tol)
    state, cls = _solve_spec(spec, args.tol, args.Mstar)
    res = thermo.thermo_form_factor(gs, state, cls)
    return {"spec_hash": spec_hash(spec), "form_factor": _ff_payload(res)}


def cmd_densities(args):
    rng = np.random.default_rng(args.seed)
    rows = []
    cases = []
    for a in (0.5, 1.0):
        for branch, im_range in (("inside", (-0.8 * a, 0.8 * a)),
                                 ("outside+", (a + 0.2, a + 1.0)),
                                 ("outside-", (-a - 1.0, -a - 0.2))):
            for _ in range(args.samples):
                lam = rng.uniform(-2, 2)
                mu = rng.uniform(-2, 2) + 1j * rng.uniform(*im_range)
                cases.append((a, branch, lam, mu))

    def one(case):
        a, branch, lam, mu = case
        val = thermo.density(a, lam, mu)
        res = thermo.density_equation_residual(a, lam, mu)
        return {"a": a, "branch": branch, "lam": lam, "mu": _cplx(mu),
                "value": _cplx(val),
                "equation_residual": {"value": abs(res), "tolerance": 1e-8}}

    rows = _parallel_map(one, cases, args.threads)
    worst = max(r["equation_residual"]["value"] for r in rows)
    return {"samples": rows, "max_equation_residual":
            {"value": worst, "tolerance": 1e-8}}


def cmd_verify(args):
    from . import verify as vf
    suite = {
        "ed": vf.suite_ed,
        "densities": vf.suite_densities,
        "convolutions": vf.suite_convolutions,
        "hlbe": vf.suite_hlbe,
        "cauchy": vf.suite_cauchy,
    }[args.suite]
    report = suite(seed=args.seed, threads=args.threads)
    ok = all(chk["passed"] for chk in report["checks"])
    report["suite"] = args.suite
    report["passed"] = ok
    return report


# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------

def _parallel_map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def _flatten(prefix, obj, rows):
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], rows)
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, rows)
    else:
        rows.append((prefix, obj))


def emit(payload, fmt, stream=None):
    stream = stream or sys.stdout
    if fmt == "json":
        json.dump(payload, stream, sort_keys=True, indent=1)
        stream.write("\n")
    else:
        rows = []
        _flatten("", payload, rows)
        w = csv.writer(stream)
        w.writerow(["key", "value"])
        for k, v in rows:
            w.writerow([k, v])


def build_parser():
    p = argparse.ArgumentParser(
        prog="bethexx",
        description="Longitudinal form factors of the spin-1/2 Heisenberg "
                    "chain: solvers, determinants, and verification suites. "
                    "BETHEXX_PRECISION={double,extended} selects the string-"
                    "deviation fallback precision.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(q, need_m=False):
        q.add_argument("--M", type=int, default=8, required=need_m,
                       help="chain length (even)")
        q.add_argument("--format", choices=["json", "csv"], default="json")
        q.add_argument("--tol", type=float, default=1e-13,
                       help="solver tolerance")
        q.add_argument("--seed", type=int, default=0,
                       help="seed for randomized property suites")
        q.add_argument("--threads", type=int, default=1)
        q.add_argument("--bulk-cutoff", dest="bulk_cutoff", type=float,
                       default=2.5)
        q.add_argument("--contour-alpha", dest="contour_alpha", type=float,
                       default=0.2)
        q.add_argument("--quad-nodes", dest="quad_nodes", type=int,
                       default=400)
        q.add_argument("--Mstar", type=int, default=48,
                       help="deviation freeze threshold")

    q = sub.add_parser("gs", help="ground-state roots")
    common(q)
    q = sub.add_parser("excite", help="solve an excitation spec")
    common(q)
    q.add_argument("--spec", required=True, help="JSON file or inline JSON")
    q = sub.add_parser("hlbe", help="higher-level roots from holes")
    common(q)
    q.add_argument("--spec", help="excitation spec (holes taken from its solution)")
    q.add_argument("--holes", type=float, nargs="*", default=[0.4, 1.1, -0.4, -1.1])
    q.add_argument("--n-tilde", dest="n_tilde", type=int, default=1)
    q = sub.add_parser("ff-finite", help="finite-size determinant form factor")
    common(q)
    q.add_argument("--spec", required=True)
    q.add_argument("--compare-ed", dest="compare_ed", action="store_true")
    q = sub.add_parser("ff-thermo", help="perturbed-Cauchy form factor")
    common(q)
    q.add_argument("--spec", required=True)
    q = sub.add_parser("densities", help="density branches + residuals")
    common(q)
    q.add_argument("--samples", type=int, default=5)
    q = sub.add_parser("verify", help="verification suites")
    common(q)
    q.add_argument("--suite", required=True,
                   choices=["ed", "densities", "convolutions", "hlbe", "cauchy"])
    return p


_COMMANDS = {
    "gs": cmd_gs,
    "excite": cmd_excite,
    "hlbe": cmd_hlbe,
    "ff-finite": cmd_ff_finite,
    "ff-thermo": cmd_ff_thermo,
    "densities": cmd_densities,
    "verify": cmd_verify,
}


def run(argv=None, stream=None):
    args = build_parser().parse_args(argv)
    envelope = {
        "command": args.command,
        "seed": args.seed,
        "config": {k: v for k, v in sorted(vars(args).items())
                   if k not in ("command",) and v is not None},
    }
    try:
        envelope["result"] = _COMMANDS[args.command](args)
    except BethexxError as exc:
        envelope["error"] = {"type": type(exc).__name__, "message": str(exc)}
        envelope["result"] = {}
        emit(envelope, args.format, stream)
        return 1
    emit(envelope, args.format, stream)
    if args.command == "verify" and not envelope["result"]["passed"]:
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
