"""Command line interface for the depth enhancement pipeline.

Exit codes: 0 on success, 2 for usage problems (bad flags or bad
parameter values), 3 for data problems (missing or malformed files),
4 for numeric failures (empty regions, degenerate interpolation
support, invalid seeds).

Reports written with ``--report`` contain only deterministic numbers,
never timings, so rerunning a command on the same inputs produces
byte-identical files.  Timings are printed to stdout instead.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from .association import (
    assemble_enhanced,
    confidence_ground_truth,
    filter_by_confidence,
)
from .blocks import (
    MsgNetWeights,
    ToyNetConfig,
    WeightFileError,
    load_weights,
    save_weights,
    toy_msgnet_forward,
    toy_rcanet_forward,
    train_msgnet,
    train_rcanet,
    zero_msgnet,
)
from .dilation import (
    EnhancementParams,
    fast_backend_available,
    structure_aware_dilate,
)
from .interpolation import scaffold_interpolate
from .metrics import DEFAULT_RANGES, evaluate, evaluate_ranges
from .projection import accumulate_lidar
from .synth import SceneSpec, generate_scene, load_scene, save_scene
from .types import (
    EmptyRegionError,
    InsufficientSupportError,
    InvalidSeedError,
    RdmError,
    ShapeMismatchError,
    read_confidence,
    read_rdm,
    write_confidence,
    write_rdm,
)

USAGE_EXIT = 2
DATA_EXIT = 3
NUMERIC_EXIT = 4


def _resolve_threads(flag_value) -> int:
    """Thread count from --threads or SARCD_THREADS; informational.

    Every kernel in this package is single-threaded; the knob exists so
    wrappers can pass it through uniformly, and so a bad value fails
    fast instead of being silently ignored.
    """
    raw = flag_value if flag_value is not None else os.environ.get("SARCD_THREADS")
    if raw is None:
        return 1
    try:
        n = int(raw)
    except (TypeError, ValueError):
        print(f"error: thread count must be an integer, got {raw!r}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT) from None
    if n < 1:
        print(f"error: thread count must be >= 1, got {n}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)
    return n


def _write_report(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _enhancement_params(args) -> EnhancementParams:
    return EnhancementParams(
        tau1=args.tau1,
        tau2=args.tau2,
        tau3=args.tau3,
        max_radius=args.max_radius,
        connectivity=args.connectivity,
        align_mono=getattr(args, "align", False),
    )


def _add_enhance_flags(sub, radius=64):
    sub.add_argument("--tau1", type=float, default=0.2, help="region growing gate (m)")
    sub.add_argument("--tau2", type=float, default=0.4, help="confidence label gate (m)")
    sub.add_argument("--tau3", type=float, default=0.5, help="confidence keep threshold")
    sub.add_argument("--max-radius", type=int, default=radius)
    sub.add_argument("--connectivity", type=int, choices=(4, 8), default=4)


def _enhance_scene(bundle, params: EnhancementParams, backend: str) -> dict:
    """Run the full enhancement chain on a loaded scene."""
    ddr, roi = structure_aware_dilate(bundle.radar, bundle.mono, params, backend)
    dacc = accumulate_lidar(
        bundle.frames, bundle.camera, bundle.boxes_per_frame, bundle.current_index
    )
    dint = scaffold_interpolate(dacc)
    conf = confidence_ground_truth(ddr, dint, params.tau2)
    dfr = filter_by_confidence(ddr, conf, params.tau3)
    return {
        "ddr": ddr,
        "roi": roi,
        "dacc": dacc,
        "dint": dint,
        "conf": conf,
        "dfr": dfr,
        "enhanced": assemble_enhanced(ddr, dfr),
    }


# --- subcommands ----------------------------------------------------------


def cmd_synth(args) -> int:
    spec = SceneSpec(
        width=args.width,
        height=args.height,
        n_boxes=args.boxes,
        n_dynamic=args.dynamic,
        radar_points=args.radar_points,
        radar_noise_sigma=args.noise_sigma,
        radar_outlier_frac=args.outlier_frac,
        lidar_row_step=args.row_step,
        n_lidar_frames=args.frames,
        seed=args.seed,
    )
    bundle = generate_scene(spec)
    save_scene(args.out, bundle)
    print(
        f"scene {args.out}: {spec.width}x{spec.height}, "
        f"{bundle.truth.n_valid()} depth px, {bundle.radar.n_valid()} radar hits "
        f"({bundle.n_outliers} outliers), {len(bundle.frames)} lidar frames"
    )
    return 0


def cmd_dilate(args) -> int:
    mono = read_rdm(args.mono)
    radar = read_rdm(args.radar)
    params = _enhancement_params(args)
    start = time.perf_counter()
    ddr, roi = structure_aware_dilate(radar, mono, params, backend=args.backend)
    elapsed = time.perf_counter() - start
    write_rdm(args.out, ddr)
    print(
        f"dilated {roi.n_grown} seeds ({roi.n_skipped} skipped) to "
        f"{ddr.n_valid()} px, {roi.n_contested} contested, in {elapsed:.4f}s"
    )
    if args.report:
        _write_report(
            args.report,
            {
                "n_grown": roi.n_grown,
                "n_skipped": roi.n_skipped,
                "n_contested": roi.n_contested,
                "n_valid": ddr.n_valid(),
            },
        )
    return 0


def cmd_accumulate(args) -> int:
    bundle = load_scene(args.scene)
    if args.frames < 1:
        raise ValueError(f"--frames must be >= 1, got {args.frames}")
    # Window of at most --frames sweeps around the current one, nearest
    # first; ties between past and future break toward the past.
    order = sorted(
        range(len(bundle.frames)),
        key=lambda i: (abs(i - bundle.current_index), i),
    )
    chosen = sorted(order[: args.frames])
    frames = [bundle.frames[i] for i in chosen]
    boxes = [bundle.boxes_per_frame[i] for i in chosen]
    current = chosen.index(bundle.current_index)
    dacc = accumulate_lidar(frames, bundle.camera, boxes, current)
    write_rdm(args.out, dacc)
    print(f"accumulated {len(frames)} frames into {dacc.n_valid()} px")
    return 0


def cmd_interp(args) -> int:
    sparse = read_rdm(args.input)
    dense = scaffold_interpolate(sparse)
    write_rdm(args.out, dense)
    print(f"interpolated {sparse.n_valid()} nodes to {dense.n_valid()} px")
    return 0


def cmd_conf_gt(args) -> int:
    ddr = read_rdm(args.ddr)
    dint = read_rdm(args.dint)
    conf = confidence_ground_truth(ddr, dint, args.tau2)
    write_confidence(args.out, conf)
    n_valid = int(np.count_nonzero(conf.validity))
    n_pos = int(np.count_nonzero(conf.values[conf.validity] == 1.0))
    print(
        f"labels on {n_valid} px: {n_pos} confident, "
        f"{n_valid - n_pos} not, {conf.n_dropped} dropped"
    )
    if args.report:
        _write_report(
            args.report,
            {"n_valid": n_valid, "n_confident": n_pos, "n_dropped": conf.n_dropped},
        )
    return 0


def cmd_filter(args) -> int:
    ddr = read_rdm(args.ddr)
    conf = read_confidence(args.conf)
    dfr = filter_by_confidence(ddr, conf, args.tau3)
    write_rdm(args.out, dfr)
    print(f"kept {dfr.n_valid()} of {ddr.n_valid()} px at threshold {args.tau3}")
    return 0


def cmd_toy_train(args) -> int:
    bundle = load_scene(args.scene)
    params = _enhancement_params(args)
    cfg = ToyNetConfig(
        channels=tuple(args.channels), afb_modules=args.afb_modules
    )
    chain = _enhance_scene(bundle, params, args.backend)
    start = time.perf_counter()
    if args.kind == "msgnet":
        weights, history = train_msgnet(
            bundle.mono,
            chain["enhanced"],
            chain["dacc"],
            chain["dint"],
            cfg,
            steps=args.steps,
            lr=args.lr,
            seed=args.net_seed,
        )
    else:
        weights, history = train_rcanet(
            bundle.image,
            chain["ddr"],
            chain["conf"],
            cfg,
            steps=args.steps,
            lr=args.lr,
            seed=args.net_seed,
        )
    elapsed = time.perf_counter() - start
    save_weights(args.out, weights)
    drop = (1.0 - history[-1] / history[0]) * 100.0 if history[0] else 0.0
    print(
        f"{args.kind}: loss {history[0]:.4f} -> {history[-1]:.4f} "
        f"({drop:.1f}% lower) in {args.steps} steps, {elapsed:.2f}s"
    )
    if args.history:
        _write_report(args.history, {"loss": history})
    return 0


def cmd_infer(args) -> int:
    weights = load_weights(args.weights)
    bundle = load_scene(args.scene)
    params = _enhancement_params(args)
    if isinstance(weights, MsgNetWeights):
        chain = _enhance_scene(bundle, params, args.backend)
        pred = toy_msgnet_forward(bundle.mono, chain["enhanced"], weights)
        write_rdm(args.out, pred)
        print(f"depth prediction written to {args.out}")
    else:
        ddr, _ = structure_aware_dilate(
            bundle.radar, bundle.mono, params, args.backend
        )
        conf = toy_rcanet_forward(bundle.image, ddr, weights)
        write_confidence(args.out, conf)
        print(f"confidence prediction written to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    pred = read_rdm(args.pred)
    gt = read_rdm(args.gt)
    ranges = tuple(args.ranges)
    report = evaluate_ranges(pred, gt, ranges)
    payload = report.to_dict()
    for name, row in payload.items():
        print(
            f"{name}: mae {row['mae_mm']:.1f} mm, rmse {row['rmse_mm']:.1f} mm, "
            f"{row['n_pixels']} px"
        )
    if args.report:
        _write_report(args.report, payload)
    return 0


def cmd_pipeline(args) -> int:
    with open(args.config) as fh:
        cfg = json.load(fh)
    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)

    spec = SceneSpec(**cfg.get("scene", {}))
    enh = cfg.get("enhance", {})
    params = EnhancementParams(
        tau1=enh.get("tau1", 0.2),
        tau2=enh.get("tau2", 0.4),
        tau3=enh.get("tau3", 0.5),
        max_radius=enh.get("max_radius", 64),
        connectivity=enh.get("connectivity", 4),
        align_mono=enh.get("align_mono", False),
    )
    backend = enh.get("backend", "auto")
    conf_mode = cfg.get("confidence", "gt")
    if conf_mode not in ("gt", "rcanet"):
        raise ValueError(f"confidence mode must be 'gt' or 'rcanet', got {conf_mode!r}")
    train_cfg = cfg.get("train", {})
    steps = int(train_cfg.get("steps", 200))
    lr = float(train_cfg.get("lr", 0.02))
    lam = float(train_cfg.get("lam", 2.0))
    net_seed = int(train_cfg.get("seed", 0))
    channels = tuple(train_cfg.get("channels", (4, 8)))
    afb_modules = int(train_cfg.get("afb_modules", 2))
    rc_steps = int(train_cfg.get("rcanet_steps", steps))
    rc_lr = float(train_cfg.get("rcanet_lr", lr))
    ranges = tuple(cfg.get("ranges", DEFAULT_RANGES))
    net_cfg = ToyNetConfig(channels=channels, afb_modules=afb_modules)

    timings = []

    def timed(name, fn):
        start = time.perf_counter()
        result = fn()
        timings.append((name, time.perf_counter() - start))
        return result

    bundle = timed("synth", lambda: generate_scene(spec))
    save_scene(workdir / "scene", bundle)

    ddr, roi = timed(
        "dilate",
        lambda: structure_aware_dilate(bundle.radar, bundle.mono, params, backend),
    )
    dacc = timed(
        "accumulate",
        lambda: accumulate_lidar(
            bundle.frames, bundle.camera, bundle.boxes_per_frame, bundle.current_index
        ),
    )
    dint = timed("interp", lambda: scaffold_interpolate(dacc))

    gt_conf = confidence_ground_truth(ddr, dint, params.tau2)
    rc_history = None
    if conf_mode == "gt":
        conf = gt_conf
    else:
        rc_weights, rc_history = timed(
            "train-rcanet",
            lambda: train_rcanet(
                bundle.image, ddr, gt_conf, net_cfg, rc_steps, rc_lr, seed=net_seed
            ),
        )
        save_weights(workdir / "rcanet.srw", rc_weights)
        conf = toy_rcanet_forward(bundle.image, ddr, rc_weights)

    dfr = filter_by_confidence(ddr, conf, params.tau3)
    enhanced = assemble_enhanced(ddr, dfr)

    if steps > 0:
        weights, history = timed(
            "train-msgnet",
            lambda: train_msgnet(
                bundle.mono,
                enhanced,
                dacc,
                dint,
                net_cfg,
                steps=steps,
                lr=lr,
                lam=lam,
                seed=net_seed,
            ),
        )
    else:
        # steps=0 requests the identity network: zero weights leave the
        # monocular input untouched, giving the no-training baseline.
        weights, history = zero_msgnet(net_cfg), []
    pred = timed(
        "infer", lambda: toy_msgnet_forward(bundle.mono, enhanced, weights)
    )

    write_rdm(workdir / "ddr.rdm", ddr)
    write_rdm(workdir / "dacc.rdm", dacc)
    write_rdm(workdir / "dint.rdm", dint)
    write_confidence(workdir / "conf.npz", conf)
    write_rdm(workdir / "dfr.rdm", dfr)
    write_rdm(workdir / "pred.rdm", pred)
    save_weights(workdir / "msgnet.srw", weights)
    if history:
        _write_report(workdir / "history.json", {"loss": history})

    def sparse_mae(depth):
        try:
            mae, _, n = evaluate(depth, bundle.truth, max(ranges))
            return {"mae_mm": mae, "n": n}
        except EmptyRegionError:
            return None

    report = {
        "scene": {
            "seed": spec.seed,
            "width": spec.width,
            "height": spec.height,
            "radar_hits": bundle.radar.n_valid(),
            "radar_outliers": bundle.n_outliers,
        },
        "dilation": {
            "n_grown": roi.n_grown,
            "n_skipped": roi.n_skipped,
            "n_contested": roi.n_contested,
            "n_valid": ddr.n_valid(),
        },
        "confidence": {
            "mode": conf_mode,
            "n_dropped": gt_conf.n_dropped,
            "n_kept": dfr.n_valid(),
            "rcanet_loss_first": rc_history[0] if rc_history else None,
            "rcanet_loss_last": rc_history[-1] if rc_history else None,
        },
        "training": {
            "steps": steps,
            "loss_first": history[0] if history else None,
            "loss_last": history[-1] if history else None,
        },
        "metrics": {
            "prediction": evaluate_ranges(pred, bundle.truth, ranges).to_dict(),
            "mono_baseline": evaluate_ranges(bundle.mono, bundle.truth, ranges).to_dict(),
            "dilated": sparse_mae(ddr),
            "filtered": sparse_mae(dfr),
        },
    }
    _write_report(workdir / "report.json", report)

    for name, row in report["metrics"]["prediction"].items():
        base = report["metrics"]["mono_baseline"][name]
        print(
            f"{name}: prediction mae {row['mae_mm']:.1f} mm "
            f"vs mono {base['mae_mm']:.1f} mm ({row['n_pixels']} px)"
        )
    for name, seconds in timings:
        print(f"  {name}: {seconds:.3f}s")
    print(f"artifacts in {workdir}")
    return 0


def cmd_bench(args) -> int:
    spec = SceneSpec(
        width=args.width,
        height=args.height,
        n_boxes=args.boxes,
        radar_points=args.points,
        n_lidar_frames=1,
        seed=args.seed,
    )
    bundle = generate_scene(spec)
    params = EnhancementParams(tau1=args.tau1, max_radius=args.max_radius)

    if args.backend == "both":
        backends = ["fast", "python"]
    else:
        backends = [args.backend]
    if "fast" in backends and not fast_backend_available():
        print("fast backend unavailable, skipping", file=sys.stderr)
        backends = [b for b in backends if b != "fast"]
        if not backends:
            return DATA_EXIT

    outputs = {}
    for backend in backends:
        times = []
        for _ in range(args.repeats):
            start = time.perf_counter()
            ddr, _ = structure_aware_dilate(bundle.radar, bundle.mono, params, backend)
            times.append(time.perf_counter() - start)
        outputs[backend] = ddr.values
        median = float(np.median(times))
        p95 = float(np.percentile(times, 95))
        per_seed = median / max(bundle.radar.n_valid(), 1) * 1e6
        print(
            f"{backend}: median {median:.4f}s p95 {p95:.4f}s "
            f"per-seed {per_seed:.0f}us over {args.repeats} runs "
            f"({spec.width}x{spec.height}, {bundle.radar.n_valid()} seeds)"
        )
    if len(outputs) == 2:
        same = np.array_equal(outputs["fast"], outputs["python"])
        print(f"backends agree: {same}")
        if not same:
            return NUMERIC_EXIT
    return 0


def cmd_plot(args) -> int:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "sarcd"

    panels = []
    if args.scene:
        bundle = load_scene(args.scene)
        panels.append(("reference depth", bundle.truth))
        panels.append(("monocular depth", bundle.mono))
        panels.append(("radar hits", bundle.radar))
    for path in args.depth or []:
        panels.append((Path(path).stem, read_rdm(path)))
    history = None
    if args.history:
        with open(args.history) as fh:
            history = json.load(fh)["loss"]
    if not panels and history is None:
        print("error: nothing to plot", file=sys.stderr)
        return USAGE_EXIT

    n = len(panels) + (1 if history is not None else 0)
    cols = min(n, 3)
    rows = (n + cols - 1) // cols
    fig, axes = plt.subplots(rows, cols, figsize=(4.0 * cols, 3.2 * rows))
    axes = np.atleast_1d(axes).ravel()
    vmax = max((float(p.values.max()) for _, p in panels), default=1.0)
    for ax, (title, depth) in zip(axes, panels):
        masked = np.ma.masked_equal(depth.values, 0.0)
        im = ax.imshow(masked, cmap="viridis", vmin=0.0, vmax=vmax)
        ax.set_title(title)
        ax.set_xticks([])
        ax.set_yticks([])
        fig.colorbar(im, ax=ax, fraction=0.046)
    if history is not None:
        ax = axes[len(panels)]
        ax.plot(history)
        ax.set_title("training loss")
        ax.set_xlabel("step")
    for ax in axes[n:]:
        ax.axis("off")
    fig.tight_layout()
    fig.savefig(args.out, format="svg", metadata={"Date": None})
    plt.close(fig)
    print(f"plot written to {args.out}")
    return 0


# --- parser ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sarcd",
        description="Radar-camera depth enhancement on synthetic scenes.",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker count (informational; overrides SARCD_THREADS)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene directory")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--boxes", type=int, default=4)
    p.add_argument("--dynamic", type=int, default=1)
    p.add_argument("--radar-points", type=int, default=24)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--outlier-frac", type=float, default=0.0)
    p.add_argument("--row-step", type=int, default=4)
    p.add_argument("--frames", type=int, default=3)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("dilate", help="structure-aware dilation of sparse radar")
    p.add_argument("--mono", required=True)
    p.add_argument("--radar", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--backend", choices=("auto", "fast", "python"), default="auto")
    p.add_argument("--align", action="store_true", help="least-squares mono alignment")
    p.add_argument("--report")
    _add_enhance_flags(p)
    p.set_defaults(func=cmd_dilate)

    p = sub.add_parser("accumulate", help="merge lidar sweeps into one sparse map")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--frames", type=int, default=5,
                   help="max sweeps to merge, centered on the current one")
    p.set_defaults(func=cmd_accumulate)

    p = sub.add_parser("interp", help="triangulate a sparse map to a dense one")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_interp)

    p = sub.add_parser("conf-gt", help="derive confidence labels from a dense map")
    p.add_argument("--ddr", required=True)
    p.add_argument("--dint", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tau2", type=float, default=0.4)
    p.add_argument("--report")
    p.set_defaults(func=cmd_conf_gt)

    p = sub.add_parser("filter", help="drop low-confidence dilated pixels")
    p.add_argument("--ddr", required=True)
    p.add_argument("--conf", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tau3", type=float, default=0.5)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("toy-train", help="train a toy network on one scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--kind", choices=("msgnet", "rcanet"), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=200)
    p.add_argument("--lr", type=float, default=0.02)
    p.add_argument("--net-seed", type=int, default=0)
    p.add_argument("--channels", type=int, nargs="+", default=[4, 8])
    p.add_argument("--afb-modules", type=int, default=2)
    p.add_argument("--backend", choices=("auto", "fast", "python"), default="auto")
    p.add_argument("--history")
    _add_enhance_flags(p)
    p.set_defaults(func=cmd_toy_train)

    p = sub.add_parser("infer", help="run a trained network on one scene")
    p.add_argument("--scene", required=True)
    p.add_argument("--weights", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--backend", choices=("auto", "fast", "python"), default="auto")
    _add_enhance_flags(p)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("evaluate", help="range-bucketed depth metrics")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--ranges", type=float, nargs="+", default=list(DEFAULT_RANGES))
    p.add_argument("--report")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="run the full chain from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--workdir", required=True)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("bench", help="time the dilation kernel on a large scene")
    p.add_argument("--width", type=int, default=1600)
    p.add_argument("--height", type=int, default=900)
    p.add_argument("--points", type=int, default=50)
    p.add_argument("--boxes", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--tau1", type=float, default=0.2)
    p.add_argument("--max-radius", type=int, default=64)
    p.add_argument("--backend", choices=("auto", "fast", "python", "both"), default="both")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("plot", help="render depth maps and loss curves to SVG")
    p.add_argument("--scene")
    p.add_argument("--depth", nargs="*", help="extra .rdm files to show")
    p.add_argument("--history", help="loss history json from toy-train")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    threads = _resolve_threads(args.threads)
    if threads != 1:
        print(f"threads: {threads} (informational, kernels are single-threaded)")
    try:
        return args.func(args)
    except (EmptyRegionError, InsufficientSupportError, InvalidSeedError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return NUMERIC_EXIT
    except (RdmError, WeightFileError, ShapeMismatchError, OSError, KeyError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except json.JSONDecodeError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except (ValueError, TypeError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_EXIT


if __name__ == "__main__":
    sys.exit(main())
