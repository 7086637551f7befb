"""Command-line interface.

Subcommands:
  info     print scalar invariants of an ensemble file
  curve    trace D(R) and write a CSV (plus optional witnesses / plot script)
  check    duality, additivity, separable, pure, lemma3, typicality
  measure  accinfo, d1inf, c1curve

Exit codes: 0 success, 1 check failed, 2 input error, 3 problem size beyond
the supported envelope.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .config import RunConfig
from .ensembles import load_bipartite, load_ensemble, named_ensemble
from .errors import CrdistillError, EnvelopeExceeded, ParseError
from .info import holevo_chi, shannon_entropy, sw_point
from .linalg import vn_entropy

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INPUT = 2
EXIT_ENVELOPE = 3


def _parse_grid(text: str):
    try:
        lo, hi, count = text.split(":")
        return (float(lo), float(hi), int(count))
    except ValueError as exc:
        raise ParseError(f"grid must be min:max:count, got {text!r}") from exc


def _load_ensemble_arg(path: str):
    """Ensemble from a JSON file, or a built-in name like two_state."""
    import os

    if os.path.exists(path):
        return load_ensemble(path)
    try:
        if ":" in path:
            name, arg = path.split(":", 1)
            return named_ensemble(name, float(arg))
        return named_ensemble(path)
    except CrdistillError as exc:
        raise ParseError(f"no file or built-in ensemble {path!r}: {exc}") from exc


def _run_config(args) -> RunConfig:
    return RunConfig(
        seed=args.seed,
        starts=args.starts,
        grid=_parse_grid(args.grid),
        tol=args.tol,
        threads=args.threads,
        out=args.out,
        witness_out=getattr(args, "witness_out", None),
    )


def _csv_header(rc: RunConfig, extra: str = "") -> str:
    lines = [
        f"# seed={rc.seed} starts={rc.starts}"
        f" grid={rc.grid[0]:g}:{rc.grid[1]:g}:{rc.grid[2]}"
        f" tol={rc.tol:g}",
    ]
    if extra:
        lines.append(f"# {extra}")
    lines.append("R,C,D")
    return "\n".join(lines) + "\n"


def _write_csv(path, rc: RunConfig, rows, extra: str = "", warnings=()):
    text = _csv_header(rc, extra)
    for r, c, d in rows:
        text += f"{r:.9g},{c:.9g},{d:.9g}\n"
    for wmsg in warnings:
        text += f"# warning: {wmsg}\n"
    if path:
        with open(path, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def cmd_info(args) -> int:
    e = _load_ensemble_arg(args.ensemble)
    chi = holevo_chi(e)
    hx = shannon_entropy(e.probs)
    hq = vn_entropy(e.average_state())
    sw = sw_point(e)
    print(f"ensemble: {e.label or args.ensemble}")
    print(f"alphabet size: {e.size}   state dimension: {e.dim}")
    print(f"H(X)    = {hx:.9g}")
    print(f"H(Q)    = {hq:.9g}")
    print(f"chi     = {chi:.9g}")
    print(f"H(X|Q)  = {hx - chi:.9g}")
    print(f"SW point (C, R, D) = ({sw.cr_rate:.9g}, {sw.comm_rate:.9g},"
          f" {sw.distilled:.9g})")
    print(f"pure-state ensemble: {e.is_pure()}")
    return EXIT_OK


def cmd_curve(args) -> int:
    from .tradeoff import trace_curve, uniform_curve_closed_form

    rc = _run_config(args)
    if args.closed_form:
        if args.closed_form != "uniform":
            raise ParseError(f"unknown closed form {args.closed_form!r}")
        lams = np.geomspace(0.05, 60.0, int(rc.grid[2]))
        rows = [(r, r + d, d) for r, d in uniform_curve_closed_form(lams)]
        _write_csv(rc.out, rc, rows, extra="closed-form uniform-ensemble curve")
        return EXIT_OK

    e = _load_ensemble_arg(args.ensemble)
    curve = trace_curve(e, rc.grid_values(), rc.solver(), threads=rc.threads)
    rows = [(p.comm_rate, p.cr_rate, p.distilled) for p in curve.points]
    warnings = [f"point R={p.comm_rate:g} did not converge"
                for p in curve.points if not p.converged]
    _write_csv(rc.out, rc, rows, extra=f"ensemble={e.label or args.ensemble}"
               f" chi={curve.chi:.9g}", warnings=warnings)
    if rc.witness_out:
        payload = {
            "ensemble": e.label or args.ensemble,
            "points": [
                {
                    "R": p.comm_rate,
                    "D": p.distilled,
                    "witness_rate": p.witness_rate,
                    "witness_gain": p.witness_gain,
                    "slope": p.slope_param,
                    "matrix": np.asarray(p.channel.matrix).tolist(),
                }
                for p in curve.points
            ],
        }
        with open(rc.witness_out, "w") as f:
            json.dump(payload, f, indent=1)
    if args.plot_script and rc.out:
        with open(args.plot_script, "w") as f:
            f.write(
                "set datafile separator ','\n"
                "set xlabel 'R (bits)'\nset ylabel 'bits'\n"
                f"plot '{rc.out}' using 1:3 with lines title 'D(R)', \\\n"
                f"     '{rc.out}' using 1:2 with lines title 'C(R)'\n"
            )
    return EXIT_OK


def cmd_check(args) -> int:
    rc = _run_config(args)
    cfg = rc.solver()
    kind = args.kind

    if kind == "duality":
        from .tradeoff import check_duality

        e = _load_ensemble_arg(args.target)
        hx = shannon_entropy(e.probs)
        chi = holevo_chi(e)
        xs = np.linspace(0.0, hx - chi, args.points)
        rep = check_duality(e, xs, cfg)
        print(f"duality max residual: {rep.max_residual:.3e} over {len(xs)} points")
        return EXIT_OK if rep.max_residual <= args.tol_check else EXIT_CHECK_FAILED

    if kind == "additivity":
        from .tradeoff import check_additivity

        e1 = _load_ensemble_arg(args.target)
        e2 = _load_ensemble_arg(args.second or args.target)
        rep = check_additivity(e1, e2, args.rate, cfg)
        print(f"additivity at R={args.rate:g}: joint={rep.joint:.6f}"
              f" split={rep.split:.6f} gap={rep.gap:+.3e}")
        return EXIT_OK if abs(rep.gap) <= args.tol_check else EXIT_CHECK_FAILED

    if kind == "separable":
        from .measurement import check_separable_additivity

        with open(args.target) as f:
            doc = json.load(f)
        mixture = [(t["q"], np.array(t["tau_a"]), np.array(t["tau_b"]))
                   for t in doc["mixture"]]
        sigma = load_bipartite(args.second)
        rep = check_separable_additivity(mixture, sigma, cfg)
        print(f"separable additivity: joint={rep.joint:.6f}"
              f" parts={rep.parts_sum:.6f} gap={rep.gap:+.3e}")
        return EXIT_OK if abs(rep.gap) <= args.tol_check else EXIT_CHECK_FAILED

    if kind == "pure":
        from .measurement import check_pure_additivity

        psi = load_bipartite(args.target)
        sigma = load_bipartite(args.second)
        rep = check_pure_additivity(psi, sigma, cfg)
        print(f"pure additivity: joint={rep.joint:.6f} parts={rep.parts_sum:.6f}"
              f" gap={rep.gap:+.3e} entanglement={rep.entanglement:.6f}")
        return EXIT_OK if abs(rep.gap) <= args.tol_check else EXIT_CHECK_FAILED

    if kind == "lemma3":
        from .typicality import lemma3_check

        rep = lemma3_check(args.dim, args.trials, np.random.default_rng(rc.seed))
        print(f"entropy bound: {rep.violations} violations in {rep.trials} trials"
              f" (worst slack {rep.max_slack:+.3e})")
        return EXIT_OK if rep.violations == 0 else EXIT_CHECK_FAILED

    if kind == "typicality":
        from .ensembles import AuxChannel
        from .typicality import verify_trace_bounds

        e = _load_ensemble_arg(args.target)
        n_list = [int(v) for v in args.n_list.split(",")]
        w = AuxChannel.bsc(args.flip) if e.size == 2 else None
        rep = verify_trace_bounds(e, w, n_list, args.delta, args.trials,
                                  np.random.default_rng(rc.seed))
        print(rep.summary())
        if rc.out:
            rep.to_csv(rc.out)
        return EXIT_OK if rep.mass_nondecreasing else EXIT_CHECK_FAILED

    raise ParseError(f"unknown check kind {kind!r}")


def cmd_measure(args) -> int:
    rc = _run_config(args)
    cfg = rc.solver()
    kind = args.kind

    if kind == "accinfo":
        from .measurement import accessible_info

        e = _load_ensemble_arg(args.target)
        rep = accessible_info(e, cfg)
        print(f"accessible information: {rep.value:.9g}"
              f" ({rep.n_outcomes} outcomes; chi = {holevo_chi(e):.9g})")
        _maybe_dump_povm(rc, rep)
        return EXIT_OK

    if kind == "d1inf":
        from .measurement import d1_infty

        rho = load_bipartite(args.target)
        rep = d1_infty(rho, cfg)
        print(f"one-shot classical correlation: {rep.value:.9g}"
              f" ({rep.n_outcomes} outcomes)")
        _maybe_dump_povm(rc, rep)
        return EXIT_OK

    if kind == "c1curve":
        from .measurement import c1_curve

        rho = load_bipartite(args.target)
        res = c1_curve(rho, rc.grid_values(), cfg)
        rows = [(p.comm_rate, p.cr_rate, p.distilled) for p in res.hull.points]
        _write_csv(rc.out, rc, rows, extra="measured CR curve (concave hull)")
        return EXIT_OK

    raise ParseError(f"unknown measure kind {kind!r}")


def _maybe_dump_povm(rc: RunConfig, rep):
    if rc.witness_out:
        with open(rc.witness_out, "w") as f:
            json.dump({"value": rep.value,
                       "povm": [{"re": np.real(el).tolist(),
                                 "im": np.imag(el).tolist()}
                                for el in rep.povm.elements]}, f, indent=1)


def _add_common(p):
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--starts", type=int, default=32)
    p.add_argument("--grid", default="0:1:33", help="R grid as min:max:count")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None)
    p.add_argument("--witness-out", dest="witness_out", default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="crdistill",
        description="Common-randomness distillation curves for state ensembles",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p_info = sub.add_parser("info", help="scalar invariants of an ensemble")
    p_info.add_argument("ensemble")
    _add_common(p_info)
    p_info.set_defaults(func=cmd_info)

    p_curve = sub.add_parser("curve", help="trace the D(R) curve to CSV")
    p_curve.add_argument("ensemble", nargs="?", default=None)
    p_curve.add_argument("--closed-form", dest="closed_form", default=None)
    p_curve.add_argument("--plot-script", dest="plot_script", default=None)
    _add_common(p_curve)
    p_curve.set_defaults(func=cmd_curve)

    p_check = sub.add_parser("check", help="run a numerical theorem check")
    p_check.add_argument(
        "kind",
        choices=["duality", "additivity", "separable", "pure", "lemma3", "typicality"],
    )
    p_check.add_argument("target", nargs="?", default=None)
    p_check.add_argument("second", nargs="?", default=None)
    p_check.add_argument("--rate", type=float, default=0.4)
    p_check.add_argument("--points", type=int, default=5)
    p_check.add_argument("--tol-check", dest="tol_check", type=float, default=5e-3)
    p_check.add_argument("--dim", type=int, default=8)
    p_check.add_argument("--trials", type=int, default=1000)
    p_check.add_argument("--n-list", dest="n_list", default="8,12,16")
    p_check.add_argument("--delta", type=float, default=0.15)
    p_check.add_argument("--flip", type=float, default=0.25)
    _add_common(p_check)
    p_check.set_defaults(func=cmd_check)

    p_meas = sub.add_parser("measure", help="measurement-side optimization")
    p_meas.add_argument("kind", choices=["accinfo", "d1inf", "c1curve"])
    p_meas.add_argument("target")
    _add_common(p_meas)
    p_meas.set_defaults(func=cmd_measure)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        code = args.func(args)
    except EnvelopeExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_ENVELOPE
    except (ParseError, FileNotFoundError, json.JSONDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_INPUT
    except CrdistillError as exc:
        print(f"error: {exc}", file=sys.stderr)
        code = EXIT_INPUT
    return code


if __name__ == "__main__":
    sys.exit(main())
