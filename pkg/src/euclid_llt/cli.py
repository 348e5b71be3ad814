"""Command-line front end: ``euclid-llt <command> [options]``.

Every command validates its whole configuration before computing.  Tables go
to stdout (or ``--output``) as CSV, or as a JSON envelope
``{tool_version, config_echo, results}`` with ``--format json``.  Progress of
long enumerations goes to stderr.  Exit codes: 0 success, 1 validation error,
2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict

import numpy as np

from . import __version__
from .cf_core import AlgorithmKind, expand
from .costs import CostFunction
from .diophantine import DigitTuple, strongly_dio_report
from .ensemble import (EnsembleSpec, SmoothingSpec, char_profile_csv, enumerate_pairs, histogram,
                       histogram_snapshots, moments_csv, moments_table, rows_to_csv, smoothed_histogram,
                       stderr_progress)
from .limit_lab import (Gaussian, Interval, RegionConfig, clt_check, llt_interval, llt_rows_csv, llt_smooth,
                        plateau, region_profile)
from .transfer_op import OperatorConfig, SpectralError, drift_dispersion, E_factor, eigenvalue, sigma_curve

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2

DEFAULTS = {
    "algorithm": "ordinary",
    "cost": "one",
    "output": None,
    "format": "text",
    "threads": 1,
    "dry_run": False,
    "progress": False,
}


class ValidationError(ValueError):
    pass


def _floats(text: str) -> list[float]:
    """``0.1,0.2`` or a range ``start:stop:num`` (inclusive linspace)."""
    if text.count(":") == 2:
        a, b, n = text.split(":")
        return [float(v) for v in np.linspace(float(a), float(b), int(n))]
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    out = []
    for v in text.split(","):
        v = v.strip()
        if v:
            f = float(v)
            if f != int(f) or f < 1:
                raise ValidationError(f"expected positive integers, got {v!r}")
            out.append(int(f))
    return out


def _common(suppress: bool) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS if suppress else None)
    p.add_argument("--algorithm", help="ordinary | centered | odd")
    p.add_argument("--cost", help="one, const:v, log, bitlength, indicator:a, identity, JSON or a .json file")
    p.add_argument("--output", help="write results to this path instead of stdout")
    p.add_argument("--format", choices=["text", "csv", "json"])
    p.add_argument("--threads", type=int)
    p.add_argument("--config", help="JSON file with option values; command-line flags take precedence")
    p.add_argument("--dry-run", dest="dry_run", action="store_true", help="validate and echo the config only")
    p.add_argument("--progress", action="store_true", help="report enumeration progress on stderr")
    return p


def _operator_args(p):
    p.add_argument("--n", type=int, default=argparse.SUPPRESS, help="collocation grid size (default 48)")
    p.add_argument("--M-max", dest="M_max", type=int, default=argparse.SUPPRESS, help="branch cutoff (default 10000)")
    p.add_argument("--tail-mode", dest="tail_mode", choices=["drop", "integral-correction"], default=argparse.SUPPRESS)


def _centering_args(p):
    p.add_argument("--mu", type=float, default=argparse.SUPPRESS, help="drift (default: computed spectrally)")
    p.add_argument("--delta", type=float, default=argparse.SUPPRESS,
                   help="dispersion delta, not delta^2 (default: computed spectrally)")


def _smoothing_args(p):
    p.add_argument("--smoothed", action="store_true", default=argparse.SUPPRESS, help="use the smoothed ensemble")
    p.add_argument("--gamma0", type=float, default=argparse.SUPPRESS)
    p.add_argument("--smoothing-alpha", dest="smoothing_alpha", type=float, default=argparse.SUPPRESS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="euclid-llt", description=__doc__.splitlines()[0],
                                     parents=[_common(suppress=True)])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    common = _common(suppress=True)

    def add(name, help_):
        return sub.add_parser(name, help=help_, parents=[common])

    p = add("expand", "digits of p/q")
    p.add_argument("p", type=int)
    p.add_argument("q", type=int)
    p.add_argument("alg", nargs="?", default=argparse.SUPPRESS, help="algorithm (overrides --algorithm)")

    p = add("enumerate", "list the ensemble with costs, or its cost histogram")
    p.add_argument("--N", type=int, default=argparse.SUPPRESS)
    p.add_argument("--histogram", action="store_true", default=argparse.SUPPRESS)

    p = add("moments", "mean and variance of the total cost")
    p.add_argument("--N", default=argparse.SUPPRESS, help="comma-separated N list")

    p = add("char-fn", "empirical characteristic function on a tau grid")
    p.add_argument("--N", type=int, default=argparse.SUPPRESS)
    p.add_argument("--tau", default=argparse.SUPPRESS, help="list a,b,c or range start:stop:num")
    _smoothing_args(p)

    p = add("spectral", "sigma(i tau), E(i tau), drift and dispersion")
    p.add_argument("--tau", default=argparse.SUPPRESS)
    p.add_argument("--s", default=argparse.SUPPRESS, help="also report lambda(s, i tau) at this complex s")
    p.add_argument("--refine-check", dest="refine_check", action="store_true", default=argparse.SUPPRESS,
                   help="recompute the drift on a doubled grid and flag changes above 1e-6")
    _operator_args(p)

    p = add("llt", "local limit comparison table")
    p.add_argument("--N", default=argparse.SUPPRESS)
    p.add_argument("--x", default=argparse.SUPPRESS, help="list of standardized offsets")
    p.add_argument("--J", nargs=2, type=float, default=argparse.SUPPRESS, metavar=("A", "B"),
                   help="interval (A, B]")
    p.add_argument("--psi", choices=["interval", "plateau+", "plateau-", "gaussian"], default=argparse.SUPPRESS)
    p.add_argument("--plateau-delta", dest="plateau_delta", type=float, default=argparse.SUPPRESS)
    _centering_args(p)
    _smoothing_args(p)
    _operator_args(p)

    p = add("clt", "Kolmogorov distance to the normal law")
    p.add_argument("--N", default=argparse.SUPPRESS)
    _centering_args(p)
    _operator_args(p)

    p = add("dio", "strongly diophantine report for four periodic orbits")
    p.add_argument("tuples", nargs="*", help="four digit tuples such as 1 2 3 1,2")
    p.add_argument("--eta0", type=float, default=argparse.SUPPRESS)
    p.add_argument("--Q-max", dest="Q_max", type=int, default=argparse.SUPPRESS)

    p = add("alpha-calc", "exponent bounds from eta, rho and sup|h'|^-1")
    p.add_argument("eta", type=float)
    p.add_argument("rho", type=float)
    p.add_argument("sup_inv", type=float)

    p = add("region-profile", "|E_N(e^{i tau C})| across the four tau regions")
    p.add_argument("--N", type=int, default=argparse.SUPPRESS)
    p.add_argument("--nu0", type=float, default=argparse.SUPPRESS)
    p.add_argument("--delta0", type=float, default=argparse.SUPPRESS)
    p.add_argument("--alpha2", type=float, default=argparse.SUPPRESS, help="exponent in L_N = (log N)^(1/alpha2)")
    p.add_argument("--points", type=int, default=argparse.SUPPRESS)
    p.add_argument("--tau-max", dest="tau_max", type=float, default=argparse.SUPPRESS)
    return parser


COMMAND_DEFAULTS = {
    "enumerate": {"N": 20, "histogram": False},
    "moments": {"N": "100,1000,10000"},
    "char-fn": {"N": 1000, "tau": "0:6.283185307179586:9", "smoothed": False},
    "spectral": {"tau": "0,0.1,0.2", "s": None, "refine_check": False},
    "llt": {"N": "1000,10000", "x": "0", "J": [-0.5, 0.5], "psi": "interval", "plateau_delta": 0.01,
            "smoothed": False},
    "clt": {"N": "256,1024,4096,16384"},
    "dio": {"eta0": 2.0, "Q_max": 2000},
    "region-profile": {"N": 10000, "nu0": 0.5, "delta0": 1.0, "alpha2": 3.0, "points": 64, "tau_max": None},
}
EXTRA_DEFAULTS = {"n": 48, "M_max": 10_000, "tail_mode": "integral-correction", "mu": None, "delta": None,
                  "gamma0": 0.25, "smoothing_alpha": 1.0}


def resolve(argv: list[str]) -> dict:
    """Merge built-in defaults, the ``--config`` file and explicit flags."""
    ns = vars(build_parser().parse_args(argv))
    cfg = {}
    if ns.get("config"):
        try:
            with open(ns["config"]) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ValidationError(f"cannot read config {ns['config']}: {exc}") from None
        if not isinstance(cfg, dict):
            raise ValidationError("config file must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        if "cost" in cfg and isinstance(cfg["cost"], dict):
            cfg["cost"] = json.dumps(cfg["cost"])
    cmd = ns["command"]
    merged = {**DEFAULTS, **EXTRA_DEFAULTS, **COMMAND_DEFAULTS.get(cmd, {}), **cfg, **ns}
    merged["command"] = cmd
    return merged


# ---------------------------------------------------------------- validation

def _validate(cfg: dict) -> dict:
    """Turn the merged option dict into checked objects; raises ValidationError."""
    v = {}
    try:
        alg = cfg.get("alg") or cfg["algorithm"]
        v["algorithm"] = AlgorithmKind.parse(alg)
        v["cost"] = CostFunction.parse(str(cfg["cost"]))
    except (ValueError, KeyError, OSError) as exc:
        raise ValidationError(str(exc)) from None
    if int(cfg["threads"]) < 1:
        raise ValidationError("--threads must be >= 1")
    cmd = cfg["command"]
    try:
        if cmd in ("spectral", "llt", "clt"):
            v["operator"] = OperatorConfig(n=int(cfg["n"]), M_max=int(cfg["M_max"]), tail_mode=cfg["tail_mode"],
                                           algorithm=v["algorithm"])
        if cmd in ("moments", "llt", "clt"):
            v["N_list"] = _ints(str(cfg["N"]))
            if not v["N_list"]:
                raise ValidationError("empty N list")
        if cmd in ("enumerate", "char-fn", "region-profile"):
            v["N"] = int(cfg["N"])
            if v["N"] < 1:
                raise ValidationError("N must be >= 1")
        if cmd in ("char-fn", "spectral"):
            v["taus"] = _floats(str(cfg["tau"]))
        if cmd in ("char-fn", "llt", "region-profile"):
            v["smoothing"] = SmoothingSpec(gamma0=float(cfg["gamma0"]), alpha=float(cfg["smoothing_alpha"]))
        if cmd == "spectral" and cfg.get("s") is not None:
            s = complex(str(cfg["s"]).replace(" ", ""))
            if s.real <= 0.5:
                raise ValidationError("need Re s > 1/2")
            v["s"] = s
        if cmd == "llt":
            v["xs"] = _floats(str(cfg["x"]))
            a, b = (float(t) for t in cfg["J"])
            v["psi"] = _test_function(cfg["psi"], (a, b), float(cfg["plateau_delta"]))
        if cmd in ("llt", "clt"):
            if (cfg["mu"] is None) != (cfg["delta"] is None):
                raise ValidationError("give both --mu and --delta or neither")
            if cfg["delta"] is not None and float(cfg["delta"]) <= 0:
                raise ValidationError("delta must be positive")
            if cmd == "clt" and min(v["N_list"]) < 16:
                raise ValidationError("clt needs N >= 16")
            if any(N < 2 for N in v["N_list"]):
                raise ValidationError("N must be >= 2")
        if cmd in ("llt", "char-fn", "region-profile") and cfg.get("smoothed", cmd == "region-profile"):
            for N in v.get("N_list", [v.get("N")]):
                v["smoothing"].check(N)
        if cmd == "dio":
            tups = cfg.get("tuples") or ["1", "2", "3", "4"]
            v["tuples"] = [DigitTuple(tuple(int(d) for d in str(t).split(","))) for t in tups]
            if len(v["tuples"]) != 4:
                raise ValidationError("dio needs exactly four tuples")
            if int(cfg["Q_max"]) < 2:
                raise ValidationError("Q_max must be >= 2")
        if cmd == "region-profile":
            v["region"] = RegionConfig(nu0=float(cfg["nu0"]), delta0=float(cfg["delta0"]),
                                       alpha2=float(cfg["alpha2"]), points_per_region=int(cfg["points"]))
            if v["N"] < 3:
                raise ValidationError("region-profile needs N >= 3")
        if cmd == "alpha-calc":
            alpha_bounds(cfg["eta"], cfg["rho"], cfg["sup_inv"])
    except ValidationError:
        raise
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    return v


def _test_function(kind: str, J, pdelta: float):
    if kind == "interval":
        return Interval(*J)
    if kind == "plateau+":
        return plateau(J, pdelta, +1)
    if kind == "plateau-":
        return plateau(J, pdelta, -1)
    if kind == "gaussian":
        return Gaussian(scale=(J[1] - J[0]) / 2, center=(J[0] + J[1]) / 2)
    raise ValidationError(f"unknown test function {kind!r}")


def alpha_bounds(eta: float, rho: float, sup_inv: float) -> dict:
    """``g = log sup_inv / log(1/rho)``, ``alpha = eta (2 + g)(1 + g)``,
    ``eps < 1/(2 alpha)``, ``r > alpha + 1``."""
    if not eta > 2:
        raise ValidationError("need eta > 2")
    if not 0 < rho < 1:
        raise ValidationError("need 0 < rho < 1")
    if not sup_inv > 1:
        raise ValidationError("need sup_inv_deriv > 1")
    g = math.log(sup_inv) / math.log(1 / rho)
    alpha = eta * (2 + g) * (1 + g)
    return {"g": g, "alpha_min": alpha, "eps_max": 1 / (2 * alpha), "r_min": alpha + 1}


# ---------------------------------------------------------------- commands

def _progress(cfg):
    return stderr_progress if cfg["progress"] else None


def _mu_delta(cfg, v):
    if cfg["mu"] is not None:
        return float(cfg["mu"]), float(cfg["delta"])
    dd = drift_dispersion(v["cost"], v["operator"])
    return dd.mu, math.sqrt(dd.delta2)


def cmd_expand(cfg, v):
    e = expand(int(cfg["p"]), int(cfg["q"]), v["algorithm"])
    text = f"digits=[{','.join(map(str, e.digits))}] depth={e.depth}"
    if e.signs and v["algorithm"] is not AlgorithmKind.ORDINARY:
        text += f" signs=[{','.join(map(str, e.signs))}]"
    return text, {"digits": list(e.digits), "signs": list(e.signs), "depth": e.depth}


def cmd_enumerate(cfg, v):
    spec = EnsembleSpec(v["N"], v["cost"], v["algorithm"])
    if cfg["histogram"]:
        h = histogram(spec, threads=int(cfg["threads"]), progress=_progress(cfg))
        return h.to_csv(), h.to_json()
    rows = [(p, q, float(v["cost"].values(np.array(e.digits)).sum()), e.depth) for p, q, e in enumerate_pairs(spec)]
    return rows_to_csv(["p", "q", "cost", "depth"], rows), [dict(zip(("p", "q", "cost", "depth"), r)) for r in rows]


def cmd_moments(cfg, v):
    rows = moments_table(v["N_list"], v["cost"], v["algorithm"], threads=int(cfg["threads"]),
                         progress=_progress(cfg))
    return moments_csv(rows), [asdict(r) | {"E_over_logN": r.mean_over_log, "V_over_logN": r.var_over_log}
                               for r in rows]


def cmd_char_fn(cfg, v):
    spec = EnsembleSpec(v["N"], v["cost"], v["algorithm"])
    h = (smoothed_histogram(v["N"], v["smoothing"], spec) if cfg["smoothed"]
         else histogram(spec, threads=int(cfg["threads"]), progress=_progress(cfg)))
    vals = np.atleast_1d(h.char_fn(np.asarray(v["taus"])))
    return char_profile_csv(v["taus"], vals), [{"tau": t, "re": z.real, "im": z.imag, "modulus": abs(z)}
                                               for t, z in zip(v["taus"], vals)]


def cmd_spectral(cfg, v):
    cost, op = v["cost"], v["operator"]
    sols = sigma_curve(v["taus"], cost, op)
    rows = []
    for sol in sols:
        E = E_factor(sol.tau, cost, op, sigma=sol.sigma)
        row = {"tau": sol.tau, "sigma_re": sol.sigma.real, "sigma_im": sol.sigma.imag,
               "E_re": E.E.real, "E_im": E.E.imag}
        if "s" in v:
            lam = eigenvalue(v["s"], sol.tau, cost, op)
            row |= {"lambda_re": lam.real, "lambda_im": lam.imag}
        rows.append(row)
    dd = drift_dispersion(cost, op)
    summary = {"mu": dd.mu, "delta2": dd.delta2}
    if cfg["refine_check"]:
        fine = drift_dispersion(cost, op.refined())
        summary |= {"mu_refined": fine.mu, "needs_refinement": abs(fine.mu - dd.mu) > 1e-6}
    text = rows_to_csv(list(rows[0]), [tuple(r.values()) for r in rows])
    text += "".join(f"# {k}={val}\n" for k, val in summary.items())
    return text, {"table": rows, **summary}


def cmd_llt(cfg, v):
    mu, delta = _mu_delta(cfg, v)
    spec = EnsembleSpec(max(v["N_list"]), v["cost"], v["algorithm"])
    if cfg["smoothed"]:
        hists = {N: smoothed_histogram(N, v["smoothing"], spec.with_N(N)) for N in v["N_list"]}
    else:
        hists = histogram_snapshots(spec, v["N_list"], threads=int(cfg["threads"]), progress=_progress(cfg))
    psi = v["psi"]
    out = []
    for N in sorted(hists):
        for x in v["xs"]:
            if isinstance(psi, Interval):
                out.append(llt_interval(N, v["cost"], x, (psi.a, psi.b), mu, delta, hist=hists[N]))
            else:
                out.append(llt_smooth(N, v["cost"], x, psi, mu, delta, hist=hists[N]))
    return llt_rows_csv(out), {"mu": mu, "delta": delta, "rows": [asdict(r) | {"ratio": r.ratio} for r in out]}


def cmd_clt(cfg, v):
    mu, delta = _mu_delta(cfg, v)
    snaps = histogram_snapshots(EnsembleSpec(max(v["N_list"]), v["cost"], v["algorithm"]), v["N_list"],
                                threads=int(cfg["threads"]), progress=_progress(cfg))
    rows = []
    for N in sorted(snaps):
        d = clt_check(N, v["cost"], mu, delta, hist=snaps[N])
        rows.append((N, d, d * math.sqrt(math.log(N))))
    c_hat = max(r[2] for r in rows)
    text = rows_to_csv(["N", "distance", "distance_sqrt_logN"], rows) + f"# C_hat={c_hat}\n"
    return text, {"mu": mu, "delta": delta, "C_hat": c_hat,
                  "rows": [{"N": r[0], "distance": r[1], "scaled": r[2]} for r in rows]}


def cmd_dio(cfg, v):
    rep = strongly_dio_report(v["tuples"], v["cost"], eta0=float(cfg["eta0"]), Q_max=int(cfg["Q_max"]))
    return rep.verdict_line(), rep.to_json()


def cmd_alpha_calc(cfg, v):
    r = alpha_bounds(cfg["eta"], cfg["rho"], cfg["sup_inv"])
    return " ".join(f"{k}={val:.12g}" for k, val in r.items()), r


def cmd_region_profile(cfg, v):
    spec = EnsembleSpec(v["N"], v["cost"], v["algorithm"])
    prof = region_profile(v["N"], v["cost"], v["region"], v["smoothing"], large_tau_max=cfg["tau_max"],
                          hist=smoothed_histogram(v["N"], v["smoothing"], spec))
    summary = {"L_N": prof.L_N, "tau_N": prof.tau_N, "scales_ordered": prof.scales_ordered,
               "alpha_hat": None if math.isinf(prof.alpha_hat) else prof.alpha_hat,
               "decay_observed": prof.decay_observed, "resonances": prof.resonances}
    text = prof.to_csv() + "".join(f"# {k}={val}\n" for k, val in summary.items())
    rows = [dict(zip(("region", "tau", "modulus", "envelope"), r)) for r in prof.rows()]
    return text, {**summary, "rows": rows}


COMMANDS = {
    "expand": cmd_expand, "enumerate": cmd_enumerate, "moments": cmd_moments, "char-fn": cmd_char_fn,
    "spectral": cmd_spectral, "llt": cmd_llt, "clt": cmd_clt, "dio": cmd_dio, "alpha-calc": cmd_alpha_calc,
    "region-profile": cmd_region_profile,
}


def _echo(cfg: dict) -> dict:
    return {k: val for k, val in cfg.items() if k not in ("output", "config", "dry_run")}


def _emit(cfg, text, results):
    if cfg["format"] == "json":
        body = json.dumps({"tool_version": __version__, "config_echo": _echo(cfg), "results": results}, indent=2,
                          default=lambda o: o.tolist() if hasattr(o, "tolist") else str(o)) + "\n"
    else:
        body = text if text.endswith("\n") else text + "\n"
    if cfg["output"]:
        with open(cfg["output"], "w") as fh:
            fh.write(body)
    else:
        sys.stdout.write(body)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = resolve(argv)
        v = _validate(cfg)
        if cfg["dry_run"]:
            _emit({**cfg, "format": "json"}, "", {"valid": True})
            return EXIT_OK
        if cfg["command"] == "expand" and int(cfg["p"]) > int(cfg["q"]):
            raise ValidationError("p must not exceed q")
        text, results = COMMANDS[cfg["command"]](cfg, v)
    except SystemExit as exc:                     # argparse usage errors
        return EXIT_VALIDATION if exc.code else EXIT_OK
    except (SpectralError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    _emit(cfg, text, results)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
