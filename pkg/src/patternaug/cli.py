"""Command-line interface: build-db, augment, eval, analyze, simulate.

Exit codes: 0 success, 1 I/O failure, 2 malformed data, 3 invalid config.
"""
import argparse
from concurrent.futures import ThreadPoolExecutor
import csv
import logging
import math
from pathlib import Path
import sys
import zlib

import numpy as np

from . import baselines, evaluation, kitti
from .config import load_config
from .errors import ConfigError, DegenerateBox, EmptyClass, MalformedData, TooFewSamples
from .gt_database import build_database, load_database, save_database
from .pattern_aware import Frame, Outcome, augment_frame, pattern_aware_sample
from .scan_oracle import TargetScene, oracle_chain, scan_rows, simulate_scan, vertical_spacing

log = logging.getLogger("patternaug")

EXIT_IO, EXIT_DATA, EXIT_CONFIG = 1, 2, 3


def frame_rng(seed, frame_id):
    """Independent generator per frame, fixed by (seed, frame id)."""
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(str(frame_id).encode())]))


def _read_frame(root, frame_id):
    paths = {
        "velodyne": root / "velodyne" / f"{frame_id}.bin",
        "label": root / "label_2" / f"{frame_id}.txt",
        "calib": root / "calib" / f"{frame_id}.txt",
    }
    for kind, p in paths.items():
        if not p.is_file():
            raise MalformedData(f"frame {frame_id}: missing {kind} file {p}")
    try:
        cloud = kitti.load_point_cloud(paths["velodyne"])
        label_text = paths["label"].read_text()
        labels = kitti.parse_labels(label_text)
        calib = kitti.parse_calib(paths["calib"].read_text())
    except MalformedData as err:
        raise MalformedData(f"frame {frame_id}: {err}") from err
    return cloud, labels, label_text, calib


def _split(cfg):
    ids = kitti.frame_ids(cfg.path("split_file"))
    if not ids:
        log.warning("event=empty_split split=%s", cfg.path("split_file"))
    return ids


def _map_frames(cfg, fn, ids):
    workers = max(int(cfg["workers"]), 1)
    if workers == 1:
        return [fn(i) for i in ids]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(fn, ids))


def cmd_build_db(cfg):
    root = cfg.path("dataset_root")
    ids = _split(cfg)
    frames = []
    for fid in ids:
        cloud, labels, _, calib = _read_frame(root, fid)
        frames.append((fid, cloud, labels, calib))
    db = build_database(frames, classes=cfg["classes"], split=str(cfg.path("split_file").name),
                        workers=int(cfg["workers"]))
    save_database(db, cfg.database_dir)
    for cls, n in db.class_counts().items():
        print(f"{cls}\t{n}")
    log.info("event=build_db frames=%d objects=%d path=%s", len(ids), len(db), cfg.database_dir)
    return db


def _frame_boxes(labels, calib):
    boxes, names = [], []
    for lab in labels:
        if lab.class_name == "DontCare" or min(lab.dims) <= 0:
            continue
        boxes.append(kitti.label_to_lidar_box(lab, calib))
        names.append(lab.class_name)
    return boxes, names


def _apply_baselines(cloud, boxes, block, rng):
    fd, fn, rd = block["frustum_dropout"], block["frustum_noise"], block["random_drop"]
    for box in boxes:
        if fd["enabled"]:
            cloud = baselines.frustum_dropout(cloud, box, float(fd["p"]), rng)
        if fn["enabled"]:
            cloud = baselines.frustum_noise(cloud, box, float(fn["sigma"]), rng)
        if rd["enabled"]:
            cloud = baselines.random_drop(cloud, box, float(rd["p"]), rng)
    return cloud


def cmd_augment(cfg):
    root = cfg.path("dataset_root")
    db = load_database(cfg.database_dir).filter_min_points(cfg["database"]["min_points"])
    pa_cfg = cfg.pattern_aware()
    plan = {}
    for cls, n in cfg["sampling"]["sample_groups"].items():
        if db.objects.get(cls):
            plan[cls] = int(n)
        else:
            log.warning("event=skip_class class=%s reason=empty_database", cls)
    out = cfg.output_dir
    for sub in ("velodyne", "label_2", "calib"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    ids = _split(cfg)
    base = cfg["baselines"]
    glob = base["global"]

    def one(fid):
        cloud, labels, label_text, calib = _read_frame(root, fid)
        boxes, names = _frame_boxes(labels, calib)
        rng = frame_rng(cfg.seed, fid)
        frame, stats, accepted = augment_frame(Frame(fid, cloud, boxes, names), db, pa_cfg, plan, rng)
        pts = _apply_baselines(frame.points, frame.boxes, base, rng)
        new_labels = [kitti.lidar_box_to_label(o.box, calib, o.class_name) for o in accepted]
        if glob["enabled"]:
            lo, hi = (math.radians(v) for v in glob["rotation_range_deg"])
            tf = baselines.random_global_transform(rng, bool(glob["flip"]), (lo, hi),
                                                   tuple(glob["scale_range"]), float(glob["translation_std"]))
            pts, moved = baselines.global_transform(pts, frame.boxes, tf)
            text = _relabel(labels, moved, accepted, calib)
        else:
            text = label_text
            if text and not text.endswith("\n"):
                text += "\n"
            text += kitti.serialize_labels(new_labels, exact=True)
        kitti.save_point_cloud(out / "velodyne" / f"{fid}.bin", pts)
        (out / "label_2" / f"{fid}.txt").write_text(text)
        (out / "calib" / f"{fid}.txt").write_text((root / "calib" / f"{fid}.txt").read_text())
        return fid, len(pts), stats

    rows = _map_frames(cfg, one, ids)
    with open(out / "manifest.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame_id", "num_points", "sampled", "relocated", "rejected", "accepted",
                    "accepted_relocated"])
        for fid, n, s in rows:
            w.writerow([fid, n, s.sampled, s.relocated, s.rejected, s.accepted, s.accepted_relocated])
    log.info("event=augment frames=%d output=%s", len(rows), out)
    return rows


def _relabel(labels, moved_boxes, accepted, calib):
    """Label text after a global transform moved every box."""
    out, k = [], 0
    for lab in labels:
        if lab.class_name == "DontCare" or min(lab.dims) <= 0:
            out.append(lab)
            continue
        out.append(kitti.lidar_box_to_label(moved_boxes[k], calib, lab.class_name, lab.truncation,
                                            lab.occlusion))
        k += 1
    for o in accepted:
        out.append(kitti.lidar_box_to_label(moved_boxes[k], calib, o.class_name))
        k += 1
    return kitti.serialize_labels(out, exact=True)


def _load_eval_items(cfg, det_dir, cls):
    root = cfg.path("dataset_root")
    gts, dets, levels = [], [], []
    for fid in _split(cfg):
        _, labels, _, calib = _read_frame(root, fid)
        for lab in labels:
            if lab.class_name == cls:
                gts.append(evaluation.GroundTruth(kitti.label_to_lidar_box(lab, calib), cls, fid))
                levels.append(kitti.difficulty_of(lab))
        det_path = Path(det_dir) / f"{fid}.txt"
        if not det_path.is_file():
            continue
        try:
            det_labels = kitti.parse_labels(det_path.read_text(), with_score=True)
        except MalformedData as err:
            raise MalformedData(f"detections {det_path}: {err}") from err
        for lab in det_labels:
            if lab.class_name != cls:
                continue
            if lab.score is None:
                raise MalformedData(f"detections {det_path}: missing score field")
            dets.append(evaluation.Detection(kitti.label_to_lidar_box(lab, calib), lab.score, cls, fid))
    return gts, dets, levels


def _fmt_ap(ap):
    return "" if ap is None else f"{ap:.4f}"


def cmd_eval(cfg, detections):
    ev = cfg["evaluation"]
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    recall = np.arange(1, int(ev["recall_positions"]) + 1) / float(ev["recall_positions"])
    reports = {}
    for cls in ev["classes"]:
        thr = float(ev["iou_thresholds"][cls])
        gts, dets, levels = _load_eval_items(cfg, detections, cls)
        edges = evaluation.equal_element_edges([g.box.distance for g in gts], int(ev["bins"]))
        report = evaluation.ap_by_bin(dets, gts, edges, thr, recall)
        overall, n_all = evaluation.pooled_ap(dets, gts, thr, recall)
        report.overall_ap["all"] = overall
        for level in (kitti.Difficulty.EASY, kitti.Difficulty.MODERATE, kitti.Difficulty.HARD):
            scoped = [evaluation.GroundTruth(g.box, g.class_name, g.frame, lv > level)
                      for g, lv in zip(gts, levels)]
            report.overall_ap[level.name.lower()] = evaluation.pooled_ap(dets, scoped, thr, recall)[0]
        with open(out / f"eval_{cls}_bins.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_lo", "bin_hi", "n_gt", "AP"])
            for b in report.bins:
                w.writerow([f"{b.lo:.4f}", f"{b.hi:.4f}", b.n_gt, _fmt_ap(b.ap)])
            w.writerow(["all", "", n_all, _fmt_ap(overall)])
        with open(out / f"eval_{cls}_difficulty.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["difficulty", "AP"])
            for name, ap in report.overall_ap.items():
                w.writerow([name, _fmt_ap(ap)])
        heights = evaluation.normalized_histogram([g.box.distance for g in gts], edges)
        with open(out / f"hist_{cls}.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["bin_lo", "bin_hi", "height"])
            for lo, hi, h in zip(edges[:-1], edges[1:], heights):
                w.writerow([f"{lo:.4f}", f"{hi:.4f}", f"{h:.8f}"])
        shown = "-".join(str(e) for e in evaluation.rounded_edges(edges))
        print(f"{cls} edges(m)={shown} " + " ".join(_fmt_ap(b.ap) or "-" for b in report.bins))
        print(f"{cls} overall " + " ".join(f"{k}={_fmt_ap(v)}" for k, v in report.overall_ap.items()))
        reports[cls] = report
    return reports


def _skewness(x):
    x = np.asarray(x, dtype=np.float64)
    c = x - x.mean()
    m2 = np.mean(c ** 2)
    return float(np.mean(c ** 3) / m2 ** 1.5) if m2 > 0 else 0.0


def cmd_analyze(cfg):
    an = cfg["analysis"]
    cls = an["class"]
    db = load_database(cfg.database_dir).filter_min_points(cfg["database"]["min_points"])
    objs = db.objects.get(cls)
    if not objs:
        raise EmptyClass(cls)
    pa_cfg = cfg.pattern_aware()
    rng = np.random.default_rng(cfg.seed)
    picks = rng.integers(0, len(objs), int(an["samples"]))
    before, after, relocated = [], [], []
    for i in picks:
        res = pattern_aware_sample(objs[i], pa_cfg, rng)
        before.append(objs[i].distance)
        after.append(res.obj.distance if res.outcome is Outcome.RELOCATED else objs[i].distance)
        relocated.append(res.outcome is Outcome.RELOCATED)
    before, after = np.array(before), np.array(after)
    n_bins = int(an["bins"])
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    summary = {}
    with open(out / "distribution.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["series", "kind", "bin_lo", "bin_hi", "count", "height", "mean", "skewness"])
        for name, d in (("before", before), ("after", after)):
            edges = evaluation.equal_element_edges(d, n_bins)
            counts = evaluation.bin_counts(d, edges)
            heights = evaluation.normalized_histogram(d, edges)
            for lo, hi, c, h in zip(edges[:-1], edges[1:], counts, heights):
                w.writerow([name, "bin", f"{lo:.4f}", f"{hi:.4f}", int(c), f"{h:.8f}", "", ""])
            summary[name] = (float(d.mean()), _skewness(d))
        for name, (mean, skew) in summary.items():
            w.writerow([name, "summary", "", "", len(picks), "", f"{mean:.6f}", f"{skew:.6f}"])
    n_rel = int(np.sum(relocated))
    print(f"{cls} samples={len(picks)} relocated={n_rel} "
          f"mean_before={summary['before'][0]:.3f} mean_after={summary['after'][0]:.3f} "
          f"skew_before={summary['before'][1]:.4f} skew_after={summary['after'][1]:.4f}")
    return {"before": before, "after": after, "relocated": np.array(relocated), "summary": summary}


def cmd_simulate(cfg):
    sim = cfg["simulate"]
    spec, target = cfg.sensor(), cfg.target()
    factor = int(sim["factor"])
    result = oracle_chain(target, spec, factor, tuple(sim["count_bounds"]))
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    if result is None:
        near = simulate_scan(TargetScene(target), spec)
        kitti.save_point_cloud(out / "scan_near.bin", near)
        print(f"no-hit target_distance={target.distance:.3f} near_points={len(near)}")
        return None
    kitti.save_point_cloud(out / "scan_near.bin", result.near)
    kitti.save_point_cloud(out / "scan_far_simulated.bin", result.simulated_far)
    kitti.save_point_cloud(out / "scan_far_direct.bin", result.direct_far)
    c = result.comparison
    print(f"near_points={len(result.near)} near_rows={scan_rows(result.near, spec)} "
          f"near_line_spacing={vertical_spacing(result.near, spec):.4f}")
    print(f"direct_points={len(result.direct_far)} direct_rows={scan_rows(result.direct_far, spec)} "
          f"direct_line_spacing={vertical_spacing(result.direct_far, spec):.4f}")
    print(f"count_ratio={c.count_ratio:.4f} mean_nn={c.mean_nn_distance:.5f} max_nn={c.max_nn_distance:.5f} "
          f"arc_length={result.arc_length:.5f} {'PASS' if result.passed else 'FAIL'}")
    return result


def build_parser():
    parser = argparse.ArgumentParser(prog="patternaug", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("build-db", "build the ground-truth object database"),
        ("augment", "write augmented frames and a manifest"),
        ("eval", "equal-element distance-binned AP"),
        ("analyze", "distance distribution before/after pattern-aware sampling"),
        ("simulate", "scan-pattern oracle check"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        p.add_argument("--output", help="output directory")
        if name == "eval":
            p.add_argument("--detections", required=True, help="directory of KITTI result files")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="patternaug %(levelname)s %(message)s")
    overrides = {
        "seed": args.seed,
        "workers": args.workers,
        "output_dir": str(Path(args.output).resolve()) if args.output else None,
    }
    try:
        cfg = load_config(args.config, overrides)
        if args.command == "build-db":
            cmd_build_db(cfg)
        elif args.command == "augment":
            cmd_augment(cfg)
        elif args.command == "eval":
            cmd_eval(cfg, args.detections)
        elif args.command == "analyze":
            cmd_analyze(cfg)
        elif args.command == "simulate":
            cmd_simulate(cfg)
    except ConfigError as err:
        log.error("event=config_error msg=%s", err)
        return EXIT_CONFIG
    except (MalformedData, DegenerateBox, TooFewSamples, EmptyClass) as err:
        log.error("event=malformed_data msg=%s", err)
        return EXIT_DATA
    except OSError as err:
        log.error("event=io_error msg=%s", err)
        return EXIT_IO
    return 0


if __name__ == "__main__":
    sys.exit(main())
