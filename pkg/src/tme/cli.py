"""Command-line drivers: predict, topology, kitaev, chern, laughlin, compare.

Every subcommand funnels through a RunConfig so that an invocation is
reproducible from the config snapshot embedded in its output record.
Exit codes: 0 success, 1 failed comparison, 2 invalid configuration,
3 numerical failure (a diagnostic record is still written when possible).
"""
from __future__ import annotations

import argparse
import sys
from typing import Dict, List, Optional

import numpy as np

from . import io
from .io import ConfigError, RunConfig
from . import predict as pred
from .perms import builtin_spec, topology_report
from .lattice import default_regions
from .kitaev import (KitaevParams, build_model, evaluate, EvaluationError,
                     DegenerateBandError)
from .chern import ChernParams, smun_grid
from .laughlin import (MCParams, distribute_points, estimate_j1,
                       estimate_smu1, ConvergenceError)

NUMERICAL_ERRORS = (EvaluationError, DegenerateBandError, ConvergenceError,
                    FloatingPointError, np.linalg.LinAlgError, RuntimeError)


def _family_parameter(cfg: RunConfig):
    family = cfg.require("measure.family")
    if family in ("jn", "kn", "smun"):
        n = cfg.get_int("measure.n")
        if n is None:
            raise ConfigError(f"--n is required for family {family}")
        if n < 1:
            raise ConfigError(f"--n must be >= 1, got {n}")
        return family, n
    if family == "phir":
        r = cfg.get_int("measure.r")
        if r is None:
            raise ConfigError("--r is required for family phir")
        if r < 2:
            raise ConfigError(f"--r must be >= 2, got {r}")
        return family, r
    raise ConfigError(f"unknown measure family {family!r}")


def _predicted_arg(cfg: RunConfig, family: str, parameter: int,
                   mu: float = 0.0) -> float:
    if family == "jn":
        return pred.arg_jn(cfg.get_float("measure.c_minus", 0.5), parameter)
    if family == "kn":
        return pred.arg_kn(cfg.get_float("measure.c_minus", 0.5), parameter)
    if family == "phir":
        name = cfg.get("measure.model", "ising")
        if name not in pred.BUILTIN_MODELS:
            raise ConfigError(f"unknown anyon model {name!r}; choose from "
                              f"{sorted(pred.BUILTIN_MODELS)}")
        return float(np.angle(pred.phi_r_phase(pred.BUILTIN_MODELS[name](),
                                               parameter)))
    if family == "smun":
        sigma = cfg.get_float("measure.sigma_xy")
        if sigma is None:
            raise ConfigError("--sigma-xy is required for family smun")
        return pred.arg_smun(sigma, mu, parameter)
    raise ConfigError(f"unknown measure family {family!r}")


# ---------------------------------------------------------------------------
# subcommand handlers (RunConfig -> exit status)
# ---------------------------------------------------------------------------

def _cmd_predict(cfg: RunConfig) -> int:
    family, parameter = _family_parameter(cfg)
    mu = cfg.get_float("measure.mu", 0.0)
    arg = _predicted_arg(cfg, family, parameter, mu)
    payload = {"family": family, "parameter": parameter, "arg_pred": arg}
    if family == "smun":
        payload["mu"] = mu
    print(f"{arg:.6g}")
    record = io.result_record("prediction", cfg, payload)
    _emit_json(cfg, record)
    return 0


def _cmd_topology(cfg: RunConfig) -> int:
    family, parameter = _family_parameter(cfg)
    spec = builtin_spec(family, parameter, mu=cfg.get_float("measure.mu", 0.0))
    report = topology_report(spec)
    print(f"spec {spec.name}: replicas={report.replicas} "
          f"is_manifold={str(report.is_manifold).lower()} "
          f"genus={report.genus} ordered_cycle_sum={report.ordered_cycle_sum}")
    for pair, count in sorted(report.boundary_cycle_counts.items()):
        print(f"  boundary {pair[0]}|{pair[1]}: {count} cycle(s)")
    payload = {
        "family": family, "parameter": parameter, "spec": spec.name,
        "replicas": report.replicas,
        "is_manifold": report.is_manifold,
        "genus": report.genus,
        "ordered_cycle_sum": report.ordered_cycle_sum,
        "boundary_cycles": {"|".join(k): v for k, v
                            in sorted(report.boundary_cycle_counts.items())},
        "vertex_orbits": dict(sorted(report.vertex_orbit_counts.items())),
    }
    _emit_json(cfg, io.result_record("topology", cfg, payload))
    return 0


def _kitaev_params(cfg: RunConfig, jx: Optional[float] = None) -> KitaevParams:
    if jx is None:
        jx = cfg.get_float("model.jx", 1.0)
    # jy follows jx unless pinned, so an x-scan sweeps the isotropic-xy line
    jy = cfg.get_float("model.jy")
    jz = cfg.get_float("model.jz", 1.0)
    return KitaevParams(
        n_s=cfg.get_int("model.ns", 10),
        j=(jx, jy if jy is not None else jx, jz),
        k=cfg.get_float("model.k", 0.3),
        delta=cfg.get_float("model.delta", 1.0),
        twist=cfg.get("model.twist", "auto"))


def _measure_payload(res) -> dict:
    return {
        "name": res.name,
        "replicas": res.replicas,
        "value": io.c2j(res.value),
        "log_magnitude": float(res.log_magnitude),
        "arg": float(res.phase),
        "sectors_evaluated": res.sectors_evaluated,
        "sectors_pruned": res.sectors_pruned,
    }


def _kitaev_point(cfg: RunConfig, specs, jx: Optional[float] = None) -> dict:
    try:
        params = _kitaev_params(cfg, jx)
        model = build_model(params)
        rm = default_regions(model.lattice)
    except DegenerateBandError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    out = {"ns": params.n_s, "j": list(params.j), "k": params.k,
           "twist": model.twist, "zeta": float(model.zeta), "measures": []}
    for spec in specs:
        res = evaluate(model, rm, spec)
        out["measures"].append(_measure_payload(res))
    return out


def _measure_specs(cfg: RunConfig):
    """One or more measure specs: repeated --measure family:param, or the
    single --family/--n form."""
    raw = cfg.get("measure.list")
    if raw:
        specs = []
        for item in raw.split(";"):
            item = item.strip()
            if not item:
                continue
            if ":" not in item:
                raise ConfigError(f"--measure expects family:param, "
                                  f"got {item!r}")
            fam, param = item.split(":", 1)
            try:
                specs.append(builtin_spec(fam.strip(), int(param)))
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        if not specs:
            raise ConfigError("empty --measure list")
        return specs
    family, parameter = _family_parameter(cfg)
    if family == "smun":
        raise ConfigError("charged measures need a conserved U(1); "
                          "use the chern subcommand")
    return [builtin_spec(family, parameter)]


def _cmd_kitaev(cfg: RunConfig) -> int:
    specs = _measure_specs(cfg)
    scan = cfg.get("model.scan")
    workers = io.workers_from(cfg)
    if scan is None:
        payload = _kitaev_point(cfg, specs)
        for m in payload["measures"]:
            print(f"{m['name']}: arg={m['arg']:+.6f} "
                  f"log|M|={m['log_magnitude']:.3f} "
                  f"twist={payload['twist']}")
        _emit_json(cfg, io.result_record("kitaev", cfg, payload))
        return 0

    name, grid = io.parse_scan(scan)
    if name != "jx":
        raise ConfigError(f"kitaev scans sweep Jx (with Jy following "
                          f"unless pinned); got {name!r}")
    points = io.run_parallel(
        lambda v: _kitaev_point(cfg, specs, jx=float(v)), list(grid), workers)
    rows = []
    for spec in specs:
        series = [next(m for m in p["measures"] if m["name"] == spec.name)
                  for p in points]
        unwrapped = io.unwrap_phases([m["arg"] for m in series])
        for v, p, m, u in zip(grid, points, series, unwrapped):
            rows.append([spec.name, f"{v:.10g}", m["value"]["re"],
                         m["value"]["im"], m["log_magnitude"], m["arg"],
                         float(u), p["twist"]])
    rows.sort(key=lambda r: (r[0], float(r[1])))
    header = ["measure", "jx", "re", "im", "log_magnitude", "arg",
              "arg_unwrapped", "twist"]
    _emit_csv(cfg, header, rows)
    payload = {"scan": {"name": name, "values": [float(v) for v in grid]},
               "points": points}
    _emit_json(cfg, io.result_record("kitaev-scan", cfg, payload))
    print(f"scan {name}: {len(grid)} points, "
          f"{len(specs)} measure(s) per point")
    return 0


def _cmd_chern(cfg: RunConfig) -> int:
    n = cfg.get_int("measure.n", 1)
    if n < 1:
        raise ConfigError(f"--n must be >= 1, got {n}")
    try:
        params = ChernParams(n_s=cfg.get_int("model.ns", 16),
                             j=cfg.get_float("model.j", 1.0),
                             k=cfg.get_float("model.k", 0.3))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    grid_text = cfg.get("measure.mu_grid")
    if grid_text is not None:
        mus = io.parse_grid(grid_text)
    else:
        mus = np.array([cfg.get_float("measure.mu", 1.0)])
    results = smun_grid(params, list(mus), n)
    sigma = cfg.get_float("measure.sigma_xy", 1.0 / (2.0 * np.pi))
    rows = []
    for res in results:
        arg_pred = pred.arg_smun(sigma, res.mu, n)
        ratio = res.phase / arg_pred if abs(arg_pred) > 0 else float("nan")
        rows.append([res.mu, res.value.real, res.value.imag,
                     res.log_magnitude, res.phase, arg_pred, ratio])
        print(f"mu={res.mu:g} n={n}: arg={res.phase:+.6e} "
              f"pred={arg_pred:+.6e} ratio={ratio:.4f}")
    _emit_csv(cfg, ["mu", "re", "im", "log_magnitude", "arg", "arg_pred",
                    "ratio"], rows)
    payload = {"n": n, "ns": params.n_s, "sigma_xy": sigma,
               "measures": [{"name": f"s{n}", "mu": r.mu,
                             "value": io.c2j(r.value),
                             "log_magnitude": r.log_magnitude,
                             "arg": r.phase} for r in results]}
    _emit_json(cfg, io.result_record("chern", cfg, payload))
    return 0


def _estimate_payload(est) -> dict:
    return {"mean": io.c2j(est.mean), "stderr": est.stderr,
            "arg": float(np.angle(est.mean)), "samples": est.samples,
            "acceptance_rate": est.acceptance_rate}


def _cmd_laughlin(cfg: RunConfig) -> int:
    measure = cfg.get("measure.name", "j1")
    n_points = cfg.get_int("model.n_points", 16)
    if n_points < 4 or n_points % 2:
        raise ConfigError(f"--n-points must be even and >= 4, "
                          f"got {n_points}")
    mc = MCParams(sweeps=cfg.get_int("mc.sweeps", 100_000),
                  burnin=cfg.get_int("mc.burnin", 10_000),
                  thin=cfg.get_int("mc.thin", 2),
                  bins=cfg.get_int("mc.bins", 64),
                  rotations=cfg.get_int("mc.rotations", 24),
                  seed=cfg.get_int("run.seed", 0))
    sphere = distribute_points(n_points, seed=cfg.get_int("model.point_seed",
                                                          0))
    if measure == "j1":
        est = estimate_j1(sphere, mc)
        payload = {"measure": "j1", "n_points": n_points,
                   "estimate": _estimate_payload(est)}
        print(f"J1 N={n_points}: mean={est.mean:+.6e} "
              f"arg={np.angle(est.mean):+.6f} stderr={est.stderr:.3e} "
              f"acceptance={est.acceptance_rate:.3f}")
        _emit_csv(cfg, ["measure", "mu", "re", "im", "stderr", "arg",
                        "samples", "acceptance_rate"],
                  [["j1", 0.0, est.mean.real, est.mean.imag, est.stderr,
                    float(np.angle(est.mean)), est.samples,
                    est.acceptance_rate]])
    elif measure == "smu1":
        grid_text = cfg.get("measure.mu_grid")
        mus = list(io.parse_grid(grid_text)) if grid_text \
            else [cfg.get_float("measure.mu", 1.0)]
        ests = estimate_smu1(mus, sphere, mc)
        rows = []
        payload = {"measure": "smu1", "n_points": n_points, "mus": mus,
                   "estimates": []}
        for mu, est in zip(mus, ests):
            payload["estimates"].append(
                dict(_estimate_payload(est), mu=mu))
            rows.append(["smu1", mu, est.mean.real, est.mean.imag,
                         est.stderr, float(np.angle(est.mean)), est.samples,
                         est.acceptance_rate])
            print(f"S mu={mu:g}: mean={est.mean:+.6e} "
                  f"arg={np.angle(est.mean):+.6e} stderr={est.stderr:.3e}")
        _emit_csv(cfg, ["measure", "mu", "re", "im", "stderr", "arg",
                        "samples", "acceptance_rate"], rows)
    else:
        raise ConfigError(f"unknown laughlin measure {measure!r}; "
                          "choose j1 or smu1")
    _emit_json(cfg, io.result_record("laughlin", cfg, payload))
    return 0


def _parse_measure_name(name: str):
    """'j1' -> ('jn', 1); 'phi3' -> ('phir', 3); 's2' -> ('smun', 2)."""
    for prefix, family in (("phi", "phir"), ("j", "jn"), ("k", "kn"),
                           ("s", "smun")):
        if name.startswith(prefix) and name[len(prefix):].isdigit():
            return family, int(name[len(prefix):])
    raise ConfigError(f"unrecognized measure identifier {name!r}")


def _cmd_compare(cfg: RunConfig) -> int:
    path = cfg.require("measure.result")
    try:
        record = io.read_record(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read record {path}: {exc}") from exc
    if record.get("schema") != io.SCHEMA_VERSION:
        raise ConfigError(f"unsupported record schema "
                          f"{record.get('schema')!r} in {path}")
    measures = record.get("result", {}).get("measures")
    if not measures:
        raise ConfigError(f"record {path} holds no measure list "
                          "(single-point kitaev/chern records only)")
    tolerance = cfg.get_float("measure.tol", 0.005)
    predictions: List[float] = []
    for m in measures:
        fam, param = _parse_measure_name(m["name"])
        predictions.append(_predicted_arg(cfg, fam, param,
                                          mu=float(m.get("mu", 0.0))))
    rows = io.compare_measures(measures, predictions, tolerance)
    print(io.format_compare_table(rows, tolerance))
    record_out = io.result_record("comparison", cfg, {
        "source": path, "tolerance": tolerance, "rows": rows})
    _emit_json(cfg, record_out)
    return 0 if all(r["ok"] for r in rows) else 1


# ---------------------------------------------------------------------------
# wiring
# ---------------------------------------------------------------------------

def _emit_json(cfg: RunConfig, record: dict) -> None:
    path = cfg.get("run.json")
    if path:
        io.write_record(path, record)


def _emit_csv(cfg: RunConfig, header, rows) -> None:
    path = cfg.get("run.csv")
    if path:
        io.write_csv(path, header, rows)


HANDLERS = {
    "predict": _cmd_predict,
    "topology": _cmd_topology,
    "kitaev": _cmd_kitaev,
    "chern": _cmd_chern,
    "laughlin": _cmd_laughlin,
    "compare": _cmd_compare,
}

# argparse dest -> flat config key, shared across subcommands
_KEYMAP = {
    "family": "measure.family", "n": "measure.n", "r": "measure.r",
    "mu": "measure.mu", "mu_grid": "measure.mu_grid",
    "c_minus": "measure.c_minus", "sigma_xy": "measure.sigma_xy",
    "model": "measure.model", "measure": "measure.list",
    "name": "measure.name", "result": "measure.result",
    "tol": "measure.tol",
    "ns": "model.ns", "jx": "model.jx", "jy": "model.jy", "jz": "model.jz",
    "k": "model.k", "delta": "model.delta", "twist": "model.twist",
    "scan": "model.scan", "j": "model.j", "n_points": "model.n_points",
    "point_seed": "model.point_seed",
    "sweeps": "mc.sweeps", "burnin": "mc.burnin", "thin": "mc.thin",
    "bins": "mc.bins", "rotations": "mc.rotations",
    "seed": "run.seed", "workers": "run.workers",
    "json": "run.json", "csv": "run.csv",
}


def _add_common(sp):
    sp.add_argument("--json", help="write the JSON result record here")
    sp.add_argument("--csv", help="write the CSV series here")
    sp.add_argument("--workers", type=int,
                    help="parallel jobs for scans (TME_WORKERS overrides)")


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tme",
        description="Topological multi-entropy measures: predictions, "
                    "replica topology, and lattice evaluations.")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("predict", help="closed-form phase predictions")
    p.add_argument("--family", required=True,
                   choices=["jn", "kn", "phir", "smun"])
    p.add_argument("--n", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--c-minus", dest="c_minus", type=float)
    p.add_argument("--sigma-xy", dest="sigma_xy", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--model", choices=["ising", "toric_code", "semion"])
    _add_common(p)

    p = sub.add_parser("topology", help="replica-surface topology report")
    p.add_argument("--family", required=True,
                   choices=["jn", "kn", "phir", "smun"])
    p.add_argument("--n", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--mu", type=float)
    _add_common(p)

    p = sub.add_parser("kitaev", help="honeycomb-model measures")
    p.add_argument("--family", choices=["jn", "kn", "phir"])
    p.add_argument("--n", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--measure", action="append",
                   help="family:param, repeatable (joined with ';')")
    p.add_argument("--ns", type=int, help="linear cells per side")
    p.add_argument("--jx", type=float)
    p.add_argument("--jy", type=float,
                   help="defaults to following jx (isotropic xy)")
    p.add_argument("--jz", type=float)
    p.add_argument("--k", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--twist", choices=["auto", "none", "h", "v", "vh"])
    p.add_argument("--scan", help="Jx=start:stop:count")
    _add_common(p)

    p = sub.add_parser("chern", help="band-insulator charged measures")
    p.add_argument("--n", type=int, help="Renyi index of S_{mu,n}")
    p.add_argument("--ns", type=int)
    p.add_argument("--j", type=float)
    p.add_argument("--k", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--mu-grid", dest="mu_grid", help="start:stop:count")
    p.add_argument("--sigma-xy", dest="sigma_xy", type=float)
    _add_common(p)

    p = sub.add_parser("laughlin", help="Monte-Carlo sphere estimates")
    p.add_argument("--name", choices=["j1", "smu1"], default="j1",
                   help="which estimator to run")
    p.add_argument("--n-points", dest="n_points", type=int)
    p.add_argument("--point-seed", dest="point_seed", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("--mu-grid", dest="mu_grid")
    p.add_argument("--sweeps", type=int)
    p.add_argument("--burnin", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--bins", type=int)
    p.add_argument("--rotations", type=int)
    p.add_argument("--seed", type=int)
    _add_common(p)

    p = sub.add_parser("compare", help="phase errors vs predictions")
    p.add_argument("--result", required=True, help="JSON record to check")
    p.add_argument("--tol", type=float)
    p.add_argument("--c-minus", dest="c_minus", type=float)
    p.add_argument("--sigma-xy", dest="sigma_xy", type=float)
    p.add_argument("--model", choices=["ising", "toric_code", "semion"])
    _add_common(p)

    p = sub.add_parser("run", help="run a subcommand from a config file")
    p.add_argument("--config", required=True, help="key=value file "
                   "with [run]/[measure]/[model]/[mc] sections")
    return ap


def _config_from_args(ns: argparse.Namespace) -> RunConfig:
    if ns.subcommand == "run":
        cfg = RunConfig.from_file(ns.config)
        if cfg.subcommand not in HANDLERS:
            raise ConfigError(f"unknown run.subcommand {cfg.subcommand!r}")
        return cfg
    options = {}
    for dest, key in _KEYMAP.items():
        val = getattr(ns, dest, None)
        if val is None:
            continue
        if dest == "measure":                   # action="append"
            val = ";".join(val)
        options[key] = str(val)
    return RunConfig(subcommand=ns.subcommand, options=options)


def main(argv: Optional[List[str]] = None) -> int:
    ap = _build_parser()
    ns = ap.parse_args(argv)
    try:
        cfg = _config_from_args(ns)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return HANDLERS[cfg.subcommand](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        path = cfg.get("run.json")
        if path:
            io.write_record(path, io.diagnostic_record(cfg, exc))
        return 3


if __name__ == "__main__":
    sys.exit(main())
