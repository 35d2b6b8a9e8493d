"""Command-line front end: ``specem <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data error. Every random choice is
driven by ``--seed``, which falls back to ``$SPECEM_SEED`` and then to 0.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .em import EmConfig, run_em
from .errors import DataError, InvalidSpec, SpecEMError
from .evaluation import adjusted_rand, class_purity, class_scores, confusion_matrix
from .gmm1d import assign, scan_bic
from .io import (
    RunManifest,
    read_recording,
    read_series_csv,
    write_json,
    write_recording,
    write_series_csv,
    write_spectra_csv,
    write_table_csv,
)
from .selection import select_k
from .simulation import SimSpec, generate, recording_from_dict, sim4_spec
from .spectral import Spectrum, fourier_bins, periodogram_rows, standardize_rows
from .spikes import DetectorConfig, detect_spikes, slowness_rows

log = logging.getLogger("specem")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "1", "yes", "on"):
        return True
    if t in ("false", "0", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected true or false, got {text!r}")


def _scale(text: str) -> float | None:
    if text == "auto":
        return None
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'auto' or a positive number, got {text!r}") from None
    if not v > 0:
        raise argparse.ArgumentTypeError(f"scale must be positive, got {text!r}")
    return v


def default_seed() -> int:
    raw = os.environ.get("SPECEM_SEED")
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"SPECEM_SEED must be an integer, got {raw!r}") from None


def _seed(args) -> int:
    return default_seed() if args.seed is None else args.seed


def _add_em_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=None, help="default: $SPECEM_SEED or 0")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--scale", type=_scale, default=None, metavar="auto|X", help="likelihood scale; auto = bin count")
    p.add_argument("--mixing-weights", type=_bool, default=True, metavar="true|false")


def _em_config(args, k: int) -> EmConfig:
    try:
        return EmConfig(
            k=k,
            max_iter=args.max_iter,
            tol=args.tol,
            restarts=args.restarts,
            seed=_seed(args),
            likelihood_scale=args.scale,
            use_mixing_weights_in_estep=args.mixing_weights,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _em_config_dict(cfg: EmConfig) -> dict:
    return {
        "k": cfg.k,
        "max_iter": cfg.max_iter,
        "tol": cfg.tol,
        "restarts": cfg.restarts,
        "seed": cfg.seed,
        "likelihood_scale": "auto" if cfg.likelihood_scale is None else cfg.likelihood_scale,
        "use_mixing_weights_in_estep": cfg.use_mixing_weights_in_estep,
    }


def _sidecar(path) -> Path:
    return Path(str(path) + ".manifest.json")


def _load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"{path}: line {exc.lineno}: {exc.msg}") from None


# --- commands --------------------------------------------------------------


def cmd_periodogram(args) -> None:
    data = read_series_csv(args.input)
    power = periodogram_rows(standardize_rows(data.values))
    spectra = [Spectrum(row, n_samples=data.length) for row in power]
    write_spectra_csv(args.out, spectra, list(data.labels))
    manifest = RunManifest.for_inputs("periodogram", {"standardize": True}, [args.input])
    write_json(_sidecar(args.out), manifest.to_dict())


def _cluster_payload(data, res, cfg, manifest) -> dict:
    state = res.state
    return {
        "manifest": manifest.to_dict(),
        "series": list(data.labels),
        "n_series": data.n_series,
        "n_samples": data.length,
        "k": cfg.k,
        "frequencies": fourier_bins(data.length) / data.length,
        "gamma": state.gamma,
        "pi": state.pi,
        "cluster_spectra": state.cluster_spectra,
        "hard_assignment": res.hard_assignment,
        "loglik": res.loglik,
        "loglik_trace": res.loglik_trace,
        "converged": res.converged,
        "iterations": state.iteration,
        "restart_logliks": res.restart_logliks,
        "best_restart": res.best_restart,
        "rescues": res.rescues,
    }


def cmd_cluster(args) -> None:
    cfg = _em_config(args, args.k)
    data = read_series_csv(args.input)
    res = run_em(data, cfg)
    manifest = RunManifest.for_inputs("cluster", _em_config_dict(cfg), [args.input])
    write_json(args.out, _cluster_payload(data, res, cfg, manifest))


def cmd_select_k(args) -> None:
    if args.k_max < 2:
        raise UsageError(f"--k-max must be >= 2, got {args.k_max}")
    cfg = _em_config(args, 1)
    data = read_series_csv(args.input)
    report = select_k(data, args.k_max, cfg)
    conf = _em_config_dict(cfg)
    conf.pop("k")
    conf["k_max"] = args.k_max
    manifest = RunManifest.for_inputs("select-k", conf, [args.input])
    write_json(args.out, {"manifest": manifest.to_dict(), "report": report.to_dict()})
    if args.out_csv:
        write_table_csv(args.out_csv, ["K", "loglik", "NEC"], [(r.k, r.loglik, r.nec) for r in report.records])


def cmd_detect_spikes(args) -> None:
    try:
        cfg = DetectorConfig(
            window_len=args.window,
            tol=args.tol,
            min_separation=args.min_separation,
            peak=args.peak,
            recheck=args.recheck,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rec = read_recording(args.input)
    cat = detect_spikes(rec, cfg)
    if cat.windows is not None:
        write_series_csv(args.out_catalog, cat.windows)
    else:
        Path(args.out_catalog).write_text("")
        log.warning("no spikes found below tol=%g", cfg.tol)
    write_table_csv(args.out_onsets, ["onset", "slowness"], zip(cat.onsets.tolist(), cat.slowness.tolist()))
    conf = {
        "window": cfg.window_len,
        "tol": cfg.tol,
        "min_separation": cfg.separation,
        "align_index": cfg.align,
        "peak": cfg.peak,
        "recheck": cfg.recheck,
        "n_spikes": len(cat),
    }
    manifest = RunManifest.for_inputs("detect-spikes", conf, [args.input])
    write_json(_sidecar(args.out_catalog), manifest.to_dict())


def cmd_gmm_slowness(args) -> None:
    data = read_series_csv(args.input)
    delta, degenerate = slowness_rows(data.values)
    if degenerate.any() or np.any(delta <= 0):
        bad = [data.labels[i] for i in np.flatnonzero(degenerate | (delta <= 0))]
        raise DataError(f"{args.input}: log-slowness undefined for {bad[:5]}")
    x = np.log(delta)
    seed = _seed(args)
    scan = scan_bic(x, k_max=args.k_max, restarts=args.restarts, seed=seed)
    best = scan.best
    comp = assign(best, x)
    conf = {"k_max": args.k_max, "restarts": args.restarts, "seed": seed, "feature": "log_slowness"}
    manifest = RunManifest.for_inputs("gmm-slowness", conf, [args.input])
    write_json(
        args.out,
        {
            "manifest": manifest.to_dict(),
            "n": int(x.size),
            "best_k": scan.best_k,
            "bic": {str(k): v for k, v in scan.bics.items()},
            "errors": {str(k): v for k, v in scan.errors.items()},
            "best": best.to_dict(),
            "models": {str(k): m.to_dict() for k, m in scan.models.items()},
        },
    )
    if args.out_assignments:
        rows = zip(data.labels, x.tolist(), comp.tolist())
        write_table_csv(args.out_assignments, ["series", "log_slowness", "component"], rows)


def _sim_spec(args) -> SimSpec:
    if args.spec:
        d = _load_json(args.spec)
    else:
        d = sim4_spec().to_dict()
    if args.seed is not None or "seed" not in d:
        d["seed"] = _seed(args)
    return SimSpec.from_dict(d)


def cmd_simulate(args) -> None:
    spec = _sim_spec(args)
    ls = generate(spec)
    write_series_csv(args.out, ls.data)
    if args.labels:
        rows = [(name, int(c), ls.class_names[c]) for name, c in zip(ls.data.labels, ls.labels)]
        write_table_csv(args.labels, ["series", "class", "class_name"], rows)
    inputs = [args.spec] if args.spec else []
    write_json(_sidecar(args.out), RunManifest.for_inputs("simulate", spec.to_dict(), inputs).to_dict())


def cmd_simulate_recording(args) -> None:
    d = _load_json(args.spec)
    if args.seed is not None or "seed" not in d:
        d["seed"] = _seed(args)
    syn = recording_from_dict(d)
    write_recording(args.out, syn.recording)
    if args.truth:
        write_table_csv(args.truth, ["onset", "template_id"], zip(syn.onsets.tolist(), syn.template_ids.tolist()))
    write_json(_sidecar(args.out), RunManifest.for_inputs("simulate-recording", d, [args.spec]).to_dict())


def repro_sim4(seed: int, n: int = 100, T: int = 50, k: int = 5, k_max: int = 6, restarts: int = 10) -> dict:
    """Simulate the five-class design, scan K, cluster at ``k`` and score against truth."""
    ls = generate(sim4_spec(n=n, T=T, seed=seed))
    cfg = EmConfig(k=k, restarts=restarts, seed=seed)
    started = time.perf_counter()
    report = select_k(ls.data, k_max, cfg)
    res = run_em(ls.data, cfg)
    conf = confusion_matrix(ls.labels, res.hard_assignment, len(ls.class_names), k)
    recall, precision = class_scores(conf)
    return {
        "class_names": ls.class_names,
        "selection": report.to_dict(),
        "confusion": conf,
        "class_purity": dict(zip(ls.class_names, class_purity(conf).tolist())),
        "class_recall": dict(zip(ls.class_names, recall.tolist())),
        "class_precision": dict(zip(ls.class_names, precision.tolist())),
        "adjusted_rand": adjusted_rand(ls.labels, res.hard_assignment),
        "loglik": res.loglik,
        "seconds": time.perf_counter() - started,
    }


def cmd_repro_sim4(args) -> None:
    seed = _seed(args)
    if args.k_max < 2 or args.k < 1:
        raise UsageError("need --k >= 1 and --k-max >= 2")
    out = repro_sim4(seed, n=args.n, T=args.T, k=args.k, k_max=args.k_max, restarts=args.restarts)
    out.pop("seconds")
    conf = {"seed": seed, "n": args.n, "T": args.T, "k": args.k, "k_max": args.k_max, "restarts": args.restarts}
    out["manifest"] = RunManifest("repro-sim4", conf).to_dict()
    if args.out:
        write_json(args.out, out)
    if args.out_csv:
        header = ["class"] + [f"cluster_{j}" for j in range(args.k)]
        rows = [[name] + list(map(int, row)) for name, row in zip(out["class_names"], out["confusion"])]
        write_table_csv(args.out_csv, header, rows)
    width = max(len(c) for c in out["class_names"])
    print(f"{'class':<{width}}  " + " ".join(f"{j:>4d}" for j in range(args.k)) + "  purity")
    for name, row in zip(out["class_names"], out["confusion"]):
        print(f"{name:<{width}}  " + " ".join(f"{int(v):>4d}" for v in row) + f"  {out['class_purity'][name]:.2f}")
    sel = out["selection"]
    print(
        f"ARI {out['adjusted_rand']:.3f}; NEC global min K={sel['nec_global_min']}, "
        f"local minima {sel['nec_local_minima']}, elbow K={sel['elbow_k']}"
    )


# --- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="specem", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("periodogram", help="raw periodogram table per series")
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_periodogram)

    p = sub.add_parser("cluster", help="frequency-domain EM at a fixed K")
    p.add_argument("input")
    p.add_argument("--k", type=int, required=True)
    _add_em_options(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("select-k", help="NEC and elbow over K = 1..k-max")
    p.add_argument("input")
    p.add_argument("--k-max", type=int, default=9)
    _add_em_options(p)
    p.add_argument("--out", required=True)
    p.add_argument("--out-csv")
    p.set_defaults(func=cmd_select_k)

    p = sub.add_parser("detect-spikes", help="slowness-based spike detection")
    p.add_argument("input")
    p.add_argument("--window", type=int, default=55)
    p.add_argument("--tol", type=float, default=0.25)
    p.add_argument("--min-separation", type=int, default=None)
    p.add_argument("--peak", choices=("max", "abs"), default="max")
    p.add_argument(
        "--no-recheck", dest="recheck", action="store_false", help="keep aligned windows that are no longer slow"
    )
    p.add_argument("--out-catalog", required=True)
    p.add_argument("--out-onsets", required=True)
    p.set_defaults(func=cmd_detect_spikes)

    p = sub.add_parser("gmm-slowness", help="Gaussian mixture on log-slowness with BIC scan")
    p.add_argument("input")
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--restarts", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--out-assignments")
    p.set_defaults(func=cmd_gmm_slowness)

    p = sub.add_parser("simulate", help="labelled synthetic series")
    p.add_argument("--spec", help="JSON simulation spec; default is the five-class design")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--labels")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("simulate-recording", help="synthetic recording with known spikes")
    p.add_argument("--spec", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--truth")
    p.set_defaults(func=cmd_simulate_recording)

    p = sub.add_parser("repro-sim4", help="five-class simulation: select K, cluster, confusion matrix")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--T", type=int, default=50)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--k-max", type=int, default=6)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--out")
    p.add_argument("--out-csv")
    p.set_defaults(func=cmd_repro_sim4)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(f"specem {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SpecEMError, OSError) as exc:
        print(f"specem {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
