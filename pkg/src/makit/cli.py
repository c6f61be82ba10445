"""Command-line front end: simulate, optimize, sense, estimate, experiment, validate-config.

Exit codes: 0 success, 2 malformed or unknown configuration, 3 infeasible
problem.  Results go to --out (CSV or JSON chosen by extension).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import beamforming as bf
from . import estimate as est
from . import optimize as opt
from . import sensing as sn
from .channel import channel_mimo, channel_narrowband, gen_scenario, scenario_from_dict
from .errors import ConfigError, InfeasibleError
from .experiments import (ExperimentConfig, ResultTable, config_hash, emit, run_experiment,
                          trial_seed)
from .geometry import MoveRegion

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3


def _load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from None


def _build_scenario(doc: dict, seed_override=None):
    if "generate" in doc:
        kw = dict(doc["generate"])
        seed = kw.pop("seed", 0) if seed_override is None else seed_override
        try:
            return gen_scenario(seed, **kw)
        except TypeError as e:
            raise ConfigError(f"bad scenario generator parameters: {e}") from None
    return scenario_from_dict(doc)


def _grid_from(doc: dict) -> np.ndarray:
    if "segment" in doc:
        g = doc["segment"]
        ax = np.arange(0.0, g["length"] + g["step"] / 2, g["step"])
        out = np.zeros((len(ax), 3))
        out[:, 0] = ax
        return out
    if "square" in doc:
        g = doc["square"]
        ax = np.arange(0.0, g["side"] + g["step"] / 2, g["step"])
        return np.array([(x, y, 0.0) for x in ax for y in ax])
    raise ConfigError("grid must specify 'segment' or 'square'")


def _cmd_simulate(doc: dict, out: str | None, seed):
    sc = _build_scenario(doc.get("scenario", {}), seed)
    tx_grid = _grid_from(doc["tx_grid"])
    rx_grid = _grid_from(doc["rx_grid"])
    h = channel_mimo(tx_grid, rx_grid, sc)
    if out:
        est.export_mapping_csv(out, tx_grid[:, :2], rx_grid[:, :2], h)
    print(f"simulated {h.shape[0]}x{h.shape[1]} channel map; "
          f"mean power {np.mean(np.abs(h) ** 2):.6g}")
    return EXIT_OK


def _cmd_optimize(doc: dict, out: str | None, seed):
    task = doc.get("task")
    lam = doc.get("wavelength", 1.0)
    report: dict
    if task == "sensing-1d":
        x = opt.sensing_1d_optimal(int(doc["n"]), doc["aperture"] * lam, doc["d_min"] * lam)
        report = {"placement": x.tolist(), "variance": float(np.var(x))}
    elif task == "sensing-2d":
        rep = opt.sensing_2d_ao(int(doc["n"]), (doc["side"] * lam, doc["side"] * lam),
                                doc["d_min"] * lam, metric=doc.get("metric", "max"))
        report = {"placement": rep.best_placement.tolist(), "metric": rep.best_score,
                  "lower_bound": rep.extra["lower_bound"]}
    elif task == "null":
        built = opt.svo_null_apv(np.deg2rad(doc["theta0_deg"]), np.deg2rad(doc["null_deg"]),
                                 int(doc["n"]), doc["aperture"] * lam, doc["d_min"] * lam, lam)
        if isinstance(built, opt.NotConstructible):
            report = {"constructible": False, "reason": built.reason}
        else:
            w = bf.mrt(bf.steering_vector(built, np.deg2rad(doc["theta0_deg"]), lam))
            nulls = [bf.beam_gain(built, w, np.deg2rad(t), lam) for t in doc["null_deg"]]
            report = {"constructible": True, "placement": built.tolist(),
                      "gain": bf.beam_gain(built, w, np.deg2rad(doc["theta0_deg"]), lam),
                      "null_gains": nulls}
    elif task == "multibeam":
        rep = opt.multibeam_ao(np.deg2rad(doc["theta_deg"]), int(doc["n"]),
                               doc["aperture"] * lam, doc["d_min"] * lam, lam,
                               analog=bool(doc.get("analog", False)),
                               seed=seed if seed is not None else 0)
        report = {"placement": rep.best_placement.tolist(), "max_min_gain": rep.best_score}
    elif task == "widebeam":
        rep = opt.widebeam_ao(np.deg2rad(doc["theta_min_deg"]), np.deg2rad(doc["theta_max_deg"]),
                              int(doc.get("subregions", 24)), int(doc["n"]),
                              doc["aperture"] * lam, doc["d_min"] * lam, lam,
                              seed=seed if seed is not None else 0)
        report = {"placement": rep.best_placement.tolist(),
                  "min_gain": rep.extra["verified_min_gain"]}
    elif task == "miso-graph":
        sc = _build_scenario(doc["scenario"], seed)
        b = sc.prm @ np.ones(len(sc.tx_paths), dtype=complex)

        def h_at(x):
            g = np.exp(2j * np.pi / lam * sc.tx_paths.wave_vectors[:, 0] * x)
            return complex(np.conj(b) @ g)

        line = opt.SampledLine.from_channel(h_at, doc["aperture"] * lam, int(doc["m"]),
                                            doc["d_min"] * lam)
        rep = opt.graph_opt_miso(line, int(doc["n"]))
        report = {"placement": rep.best_placement.tolist(), "score": rep.best_score,
                  "indices": rep.extra["indices"].tolist()}
    elif task is None:
        raise ConfigError("optimize config is missing 'task'")
    else:
        raise ConfigError(f"unknown optimize task {task!r}")
    if out:
        with open(out, "w") as fh:
            json.dump(report, fh, indent=2)
    print(json.dumps(report)[:400])
    return EXIT_OK


def _cmd_sense(doc: dict, out: str | None, seed):
    lam = doc.get("wavelength", 1.0)
    n = int(doc["n"])
    a = doc["aperture"] * lam
    dmin = doc["d_min"] * lam
    kind = doc.get("placement", "optimal")
    if kind == "optimal":
        x = opt.sensing_1d_optimal(n, a, dmin)
    elif kind == "dense":
        x = np.arange(n) * dmin
    else:
        raise ConfigError(f"unknown placement {kind!r}")
    power = 1.0
    sigma2 = power / 10.0 ** (doc["snr_db"] / 10.0)
    setup = sn.SensingSetup(placement=x, snapshots=int(doc.get("snapshots", 1)), power=power,
                            noise_power=sigma2, beta=1.0, u=doc["u"], wavelength=lam)
    base = str(seed if seed is not None else doc.get("seed", 0))
    rows = []
    for t in range(int(doc.get("trials", 100))):
        y = sn.simulate_snapshots(setup, trial_seed(base, t))
        u_hat = sn.music_1d(y, x, wavelength=lam).u
        rows.append([float(t), u_hat, (u_hat - doc["u"]) ** 2, sn.crb_1d(setup)])
    table = ResultTable(columns=["trial", "u_hat", "sq_error", "crb"], rows=rows,
                        metadata={"placement": kind, "snr_db": doc["snr_db"]})
    if out:
        emit(table, out)
    mse = float(np.mean([r[2] for r in rows]))
    print(f"MSE {mse:.6g} vs CRB {rows[0][3]:.6g} over {len(rows)} trials")
    return EXIT_OK


def _cmd_estimate(doc: dict, out: str | None, seed):
    lam = doc.get("wavelength", 1.0)
    sc = _build_scenario(doc["scenario"], seed)
    side = doc["region_side"] * lam
    region = MoveRegion.box((side, side, 0.0))
    power = doc.get("power", 1.0)
    sigma2 = power / 10.0 ** (doc["snr_db"] / 10.0)
    m = int(doc["measurements"])
    g = int(doc.get("grid", 16))
    l = int(doc.get("paths_to_recover", len(sc.tx_paths)))
    base = str(seed if seed is not None else doc.get("seed", 0))
    method = doc.get("method", "successive")
    step = doc.get("eval_step", 0.2) * lam
    ax = np.arange(0.0, side + step / 2, step)
    grid_pts = np.array([(x, y, 0.0) for x in ax for y in ax])
    h_true = channel_mimo(grid_pts, grid_pts, sc)
    if method == "successive":
        ms_t = est.collect_measurements(sc, region, region, "tx-sweep", m // 2, power, sigma2,
                                        trial_seed(base, 1))
        ms_r = est.collect_measurements(sc, region, region, "rx-sweep", m // 2, power, sigma2,
                                        trial_seed(base, 2))
        fri = est.omp_successive(ms_t, ms_r, g, l, l, lam)
        h_hat = est.reconstruct_mapping(fri, grid_pts, grid_pts, lam)
    elif method == "joint":
        ms = est.collect_measurements(sc, region, region, "paired", m, power, sigma2,
                                      trial_seed(base, 3))
        fri = est.omp_joint(ms, g, l * l, lam)
        h_hat = est.reconstruct_mapping(fri, grid_pts, grid_pts, lam)
    elif method == "nearest":
        ms = est.collect_measurements(sc, region, region, "rx-sweep", m, power, sigma2,
                                      trial_seed(base, 4))
        col = est.nearest_measured_reconstruct(ms, grid_pts)
        h_true = np.array([channel_narrowband(np.zeros(3), q, sc) for q in grid_pts])
        h_hat = col
    else:
        raise ConfigError(f"unknown estimation method {method!r}")
    score = est.nmse(h_true, h_hat)
    table = ResultTable(columns=["nmse"], rows=[[score]],
                        metadata={"method": method, "measurements": m, "grid": g})
    if out:
        emit(table, out)
    print(f"{method} NMSE {score:.6g}")
    return EXIT_OK


def _cmd_experiment(doc: dict, out: str | None, seed, workers):
    cfg = ExperimentConfig.from_dict(doc)
    table = run_experiment(cfg, workers=workers, seed_override=seed)
    dest = out or cfg.out
    if dest:
        emit(table, dest)
    print(f"{cfg.experiment}: {len(table.rows)} rows, config {config_hash(cfg)[:12]}"
          + (f" -> {dest}" if dest else ""))
    return EXIT_OK


def _cmd_validate(doc: dict) -> int:
    if "experiment" in doc:
        cfg = ExperimentConfig.from_dict(doc)
        print(f"ok: experiment {cfg.experiment!r}, hash {config_hash(cfg)[:12]}")
    elif "task" in doc:
        known = {"sensing-1d", "sensing-2d", "null", "multibeam", "widebeam", "miso-graph"}
        if doc["task"] not in known:
            raise ConfigError(f"unknown optimize task {doc['task']!r}")
        print(f"ok: optimize task {doc['task']!r}")
    elif "scenario" in doc:
        _build_scenario(doc["scenario"])
        print("ok: scenario config")
    elif {"n", "u", "snr_db"} <= set(doc):
        if doc.get("placement", "optimal") not in ("optimal", "dense"):
            raise ConfigError(f"unknown placement {doc['placement']!r}")
        print("ok: sensing config")
    else:
        raise ConfigError("config matches no known subcommand shape")
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="makit",
        description="Movable-antenna channel simulation, placement optimization, "
                    "sensing, and channel acquisition.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("simulate", "optimize", "sense", "estimate", "experiment",
                 "validate-config"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--out", default=None, help="output file (csv or json)")
        p.add_argument("--seed", type=int, default=None, help="override config seeds")
        p.add_argument("--workers", type=int, default=None,
                       help="parallel trial workers (default: MAKIT_WORKERS or 1)")
    args = parser.parse_args(argv)

    try:
        doc = _load_json(args.config)
        if args.command == "simulate":
            return _cmd_simulate(doc, args.out, args.seed)
        if args.command == "optimize":
            return _cmd_optimize(doc, args.out, args.seed)
        if args.command == "sense":
            return _cmd_sense(doc, args.out, args.seed)
        if args.command == "estimate":
            return _cmd_estimate(doc, args.out, args.seed)
        if args.command == "experiment":
            return _cmd_experiment(doc, args.out, args.seed, args.workers)
        return _cmd_validate(doc)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleError as e:
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (KeyError, TypeError) as e:
        print(f"config error: missing or malformed field {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
