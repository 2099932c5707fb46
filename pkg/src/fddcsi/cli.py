"""Command-line entry point: ``fddcsi <subcommand> --config run.json --out DIR``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np
from threadpoolctl import threadpool_limits

from ._io import atomic_write_text
from .baselines import PrincipalComponentPrecoder
from .config import RunConfig
from .dataset import load_dataset, load_meta
from .evaluation import (
    DEFAULT_A_VALUES,
    EvalReport,
    diagram_points,
    evaluate_seen_unseen,
    fit_estimator,
    heatmap,
    heatmap_csv,
    latent_azimuth_correlation,
    reports_csv,
    sweep_grid,
)
from .exceptions import (
    CheckpointError,
    ConfigError,
    ConvergenceError,
    DatasetError,
    EmptySubsetError,
    GeometryError,
    ProvenanceError,
    TrainingDivergedError,
)
from .metrics import mean_power, normalized_power, random_precoders, to_db
from .neural import AoaEncoderDecoderPrecoder, EncoderDecoderPrecoder, aoa_from_positions, save_checkpoint
from .neural.checkpoint import _jsonable
from .plotting import heatmap_svg, seen_unseen_svg, write_svg

logger = logging.getLogger("fddcsi")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def _write_json(path, doc):
    atomic_write_text(path, json.dumps(_jsonable(doc), indent=2, sort_keys=True) + "\n")


def _load(args):
    cfg = RunConfig.load(args.config, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out


def _samples(cfg, data):
    return data.samples(cfg.ul_range, cfg.dl_index, cfg.normalize)


def _record_config(cfg, out, data=None):
    doc = cfg.to_dict()
    pose = data.meta.array_pose if data is not None and data.meta is not None else None
    doc["estimators"] = [
        {"id": e.id, "kind": e.kind, "params": e.build(cfg.seed, pose).get_params(deep=False)}
        for e in cfg.estimators
    ]
    _write_json(out / "config.resolved.json", doc)


def _pose(data):
    return data.meta.array_pose if data.meta is not None else None


def cmd_validate(args):
    meta = load_meta(args.meta) if args.meta else None
    data = load_dataset(args.dataset, meta)
    lo, hi = data.positions.min(axis=0), data.positions.max(axis=0)
    print(f"records: {len(data)}")
    print(f"shape: M = {data.num_antennas}, S = {data.num_subcarriers}")
    print("bounding box: " + ", ".join(f"{c} [{a:.3f}, {b:.3f}]" for c, a, b in zip("xyz", lo, hi)))
    print(f"extent: {hi[0] - lo[0]:.2f} m x {hi[1] - lo[1]:.2f} m")
    return EXIT_OK


def cmd_synth(args):
    cfg, out = _load(args)
    if "synth" not in cfg.data:
        raise ConfigError("synth needs a 'data.synth' block")
    data = cfg.load_data()
    from .dataset import write_dataset
    from .synthgen import Scene

    scene_doc = cfg.data["synth"].get("scene", {})
    scene = Scene.load(cfg.resolve(scene_doc)) if isinstance(scene_doc, str) else Scene.from_dict(scene_doc)
    write_dataset(out / "dataset.csi", data)
    atomic_write_text(out / "scene.json", json.dumps(scene.to_dict(), indent=2) + "\n")
    _record_config(cfg, out, data)
    print(f"wrote {len(data)} records to {out / 'dataset.csi'}")
    return EXIT_OK


def _baseline_rows(est_id, subset, powers):
    p = mean_power(powers)
    return [est_id, subset, len(powers), repr(round(p, 12)), repr(round(float(to_db(p)), 12))]


def cmd_baseline(args):
    cfg, out = _load(args)
    data = cfg.load_data()
    samples = _samples(cfg, data)
    n_draws = int(cfg.baseline.get("random_draws", 100_000))
    if n_draws < 1:
        raise ConfigError("baseline.random_draws must be positive")
    M = samples.h_D.shape[1]
    w = random_precoders(cfg.seed, n_draws, M)
    rand_p = normalized_power(samples.h_D[np.arange(n_draws) % len(samples)], w)
    rows = [_baseline_rows("random", "all", rand_p)]
    pc = PrincipalComponentPrecoder()
    if cfg.split is not None:
        split = cfg.make_split()
        train_mask = split.train_mask(samples.positions)
        train, test = samples.subset(train_mask), samples.subset(~train_mask)
        if len(train) == 0 or len(test) == 0:
            raise EmptySubsetError("split leaves one side empty")
        fit_estimator(pc, train)
        rows.append(_baseline_rows("principal", "train", normalized_power(train.h_D, pc.predict(train.H_U))))
        rows.append(_baseline_rows("principal", "test", normalized_power(test.h_D, pc.predict(test.H_U))))
    else:
        fit_estimator(pc, samples)
    rows.append(_baseline_rows("principal", "all", normalized_power(samples.h_D, pc.predict(samples.H_U))))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["estimator_id", "subset", "n", "p_linear", "p_db"])
    writer.writerows(rows)
    atomic_write_text(out / "baseline.csv", buf.getvalue())
    _record_config(cfg, out, data)
    for r in rows:
        print(f"{r[0]:>10} {r[1]:>5}: {float(r[4]):8.3f} dB  (n = {r[2]})")
    return EXIT_OK


def _per_point_csv(report):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "y", "z", "p_linear", "seen"])
    for (x, y, z), p, s in zip(report.positions, report.powers, report.seen):
        writer.writerow([repr(float(x)), repr(float(y)), repr(float(z)), repr(round(float(p), 12)), int(s)])
    return buf.getvalue()


def cmd_train_eval(args):
    cfg, out = _load(args)
    if not cfg.estimators:
        raise ConfigError("no estimators configured")
    if cfg.split is None:
        raise ConfigError("train-eval needs a 'split' block")
    data = cfg.load_data()
    samples = _samples(cfg, data)
    split = cfg.make_split()
    mask = split.train_mask(samples.positions)
    if not mask.any() or mask.all():
        raise EmptySubsetError("split leaves one side empty")
    train = samples.subset(mask)
    reports, summary = [], {}
    for ecfg in cfg.estimators:
        est = ecfg.build(cfg.seed, _pose(data))
        fit_estimator(est, train)
        report = evaluate_seen_unseen(est, split, samples, ecfg.id)
        reports.append(report)
        entry = {
            "p_seen_db": report.p_seen_db,
            "p_unseen_db": report.p_unseen_db,
            "p_all_db": report.p_all_db,
            "gap_db": report.gap_db,
            "seen_at_least_unseen": bool(report.p_seen_db >= report.p_unseen_db),
            "n_train": int(mask.sum()),
            "n_test": int((~mask).sum()),
        }
        if hasattr(est, "model_") or hasattr(est, "w_max_"):
            save_checkpoint(est, out / f"{ecfg.id}.ckpt")
        if hasattr(est, "model_"):
            entry["final_train_loss"] = est.history_[-1] if est.history_ else None
            atomic_write_text(out / f"{ecfg.id}.history.csv",
                              "epoch,loss\n" + "".join(f"{i},{l!r}\n" for i, l in enumerate(est.history_)))
        if isinstance(est, EncoderDecoderPrecoder) and est.latent_dim == 1 and _pose(data) is not None:
            az = aoa_from_positions(samples.positions, _pose(data))[:, 0]
            entry["latent_azimuth_correlation"] = latent_azimuth_correlation(est.transform(samples.H_U), az)
        summary[ecfg.id] = entry
        atomic_write_text(out / f"{ecfg.id}.points.csv", _per_point_csv(report))
        print(f"{ecfg.id}: seen {report.p_seen_db:.3f} dB, unseen {report.p_unseen_db:.3f} dB, "
              f"gap {report.gap_db:.3f} dB")
    atomic_write_text(out / "reports.csv", reports_csv(reports))
    _write_json(out / "summary.json", summary)
    _record_config(cfg, out, data)
    return EXIT_OK


def cmd_sweep(args):
    cfg, out = _load(args)
    if not cfg.estimators:
        raise ConfigError("sweep needs at least one estimator")
    a_values = [float(a) for a in cfg.sweep.get("a_values", DEFAULT_A_VALUES)]
    split_doc = cfg.split or {}
    origin = tuple(split_doc.get("origin", (0.0, 0.0)))
    parity = int(split_doc.get("parity_for_train", 0))
    data = cfg.load_data()
    samples = _samples(cfg, data)
    reports = []
    for ecfg in cfg.estimators:
        def factory(a, seed, ecfg=ecfg):
            return ecfg.build(seed, _pose(data))

        factory.__name__ = ecfg.id
        entries = sweep_grid(samples, factory, a_values, origin, parity, cfg.seed, ecfg.id, n_jobs=args.threads)
        reports.extend(entries)
        for r in entries:
            status = r.error or f"seen {r.p_seen_db:.3f} dB, gap {r.gap_db:.3f} dB"
            print(f"{ecfg.id} a = {r.a:.1f} m: {status}")
    principal = sweep_grid(samples, PrincipalComponentPrecoder(), a_values, origin, parity, cfg.seed, "princ_comp")
    M = samples.h_D.shape[1]
    bound = float(to_db(1.0 / M))
    refs = [EvalReport("random_bound", None, bound, bound), EvalReport("tdd", None, 0.0, 0.0)] + principal
    atomic_write_text(out / "sweep.csv", reports_csv(reports))
    atomic_write_text(out / "baselines.csv", reports_csv(refs))
    svg = seen_unseen_svg(
        diagram_points(reports), bound,
        [(r.a, r.p_seen_db, r.gap_db) for r in principal if r.error is None],
    )
    write_svg(svg, out / "seen_unseen.svg")
    _record_config(cfg, out, data)
    return EXIT_OK


def cmd_heatmap(args):
    cfg, out = _load(args)
    if not cfg.estimators:
        raise ConfigError("heatmap needs at least one estimator")
    cell = float(cfg.heatmap.get("cell_size", 0.25))
    data = cfg.load_data()
    samples = _samples(cfg, data)
    train = samples
    if cfg.split is not None:
        mask = cfg.make_split().train_mask(samples.positions)
        if not mask.any():
            raise EmptySubsetError("split leaves the training side empty")
        train = samples.subset(mask)
    for ecfg in cfg.estimators:
        est = ecfg.build(cfg.seed, _pose(data))
        fit_estimator(est, train)
        grid = heatmap(samples, est, cell)
        atomic_write_text(out / f"heatmap_{ecfg.id}.csv", heatmap_csv(grid))
        write_svg(heatmap_svg(grid), out / f"heatmap_{ecfg.id}.svg")
        print(f"{ecfg.id}: {grid.occupied} occupied cells of {cell} m")
    _record_config(cfg, out, data)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="fddcsi", description="Uplink-CSI based downlink precoding experiments")
    parser.add_argument("-v", "--verbose", action="store_true", help="log training progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a dataset file and print a summary")
    p.add_argument("dataset")
    p.add_argument("--meta", help="metadata sidecar (default: <dataset>.json if present)")
    p.set_defaults(func=cmd_validate)

    for name, func, text in (
        ("synth", cmd_synth, "generate a synthetic dataset"),
        ("baseline", cmd_baseline, "random-precoding and principal-component baselines"),
        ("train-eval", cmd_train_eval, "train on the split's training side and evaluate seen/unseen"),
        ("sweep", cmd_sweep, "checkerboard grid-size sweep and seen/unseen diagram"),
        ("heatmap", cmd_heatmap, "per-location power heatmaps"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--threads", type=int, default=1, help="parallel sweep workers")
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "threads", 1) < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_CONFIG
    if getattr(args, "seed", None) is not None and args.seed < 0:
        print("error: --seed must be non-negative", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with threadpool_limits(limits=1):
            return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (DatasetError, GeometryError, EmptySubsetError, ProvenanceError, CheckpointError) as err:
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except TrainingDivergedError as err:
        trace = ", ".join(f"{l:.4g}" for l in err.history[-10:])
        print(f"numerical failure: {err}; last epoch losses: [{trace}]", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConvergenceError, FloatingPointError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
