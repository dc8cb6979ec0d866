"""Command-line pipeline: demo data generation, field extraction, noise
synthesis, denoising, fitting, refinement, metrics and grasp transfer.

Every command is deterministic given its inputs, flags and seeds.  Errors
exit nonzero with a single machine-parsable line on stderr:
``error: <stage>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import demo
from .denoiser import baseline_smooth, denoise, load_weights, transfer
from .errors import TochkitError
from .fitter import FitConfig, fit_sequence
from .geometry import Bvh, load_obj, sample_surface, save_obj
from .handmodel import HandSequence, joints_of, load_hand_model, \
    save_hand_model, skin, skin_vertices
from .metrics import contact_iou, intersection_volume, mpjpe, mpvpe
from .perturb import NoiseKind, NoiseSpec, perturb_sequence
from .sequences import SequenceBundle, load_bundle, save_bundle
from .tochfield import DEFAULT_EPS, DEFAULT_N_POINTS, DEFAULT_TAU, \
    extract_sequence, read_toch, write_toch

_KINDS = {"translation": NoiseKind.TranslationDominant,
          "pose": NoiseKind.PoseDominant,
          "balanced": NoiseKind.Balanced}


def _write_json(doc, path) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _extract_bundle(bundle: SequenceBundle, n_points, seed, eps, threads):
    model = bundle.load_model()
    obj = bundle.load_object()
    meshes = [skin(model, f) for f in bundle.sequence.frames]
    return extract_sequence(meshes, obj, n_points=n_points, seed=seed,
                            eps=eps, threads=threads,
                            template_vertices=model.template_vertices)


def _fit_config(args) -> FitConfig:
    return FitConfig(w1=args.w1, w2=args.w2, w3=args.w3, w4=args.w4,
                     stage1_iters=args.stage1_iters,
                     stage2_iters=args.stage2_iters)


def _add_fit_flags(p) -> None:
    d = FitConfig()
    p.add_argument("--w1", type=float, default=d.w1)
    p.add_argument("--w2", type=float, default=d.w2)
    p.add_argument("--w3", type=float, default=d.w3)
    p.add_argument("--w4", type=float, default=d.w4)
    p.add_argument("--stage1-iters", type=int, default=d.stage1_iters)
    p.add_argument("--stage2-iters", type=int, default=d.stage2_iters)


def _add_sampling_flags(p) -> None:
    p.add_argument("--n-points", type=int, default=DEFAULT_N_POINTS)
    p.add_argument("--seed", type=int, default=0)


def _denoised(args, fields):
    if args.weights:
        return denoise(load_weights(args.weights), fields)
    if args.baseline:
        return baseline_smooth(fields, args.window)
    raise TochkitError("need --weights FILE or --baseline")


# ---------------------------------------------------------------------------
# subcommands

def cmd_make_demo(args) -> None:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = demo.DemoConfig(frames=args.frames)
    model = demo.make_demo_hand(cfg)
    obj = demo.make_demo_object(cfg)
    seq = demo.make_demo_sequence(model, cfg)
    save_hand_model(model, out / "hand_model.json")
    save_obj(obj, out / "object.obj")
    bundle = SequenceBundle(hand_model_path=out / "hand_model.json",
                            object_mesh_path=out / "object.obj",
                            sequence=seq)
    save_bundle(bundle, out / "gt.json")
    print(f"wrote {out / 'hand_model.json'}")
    print(f"wrote {out / 'object.obj'}")
    print(f"wrote {out / 'gt.json'}")


def cmd_sample_points(args) -> None:
    mesh = load_obj(args.mesh)
    ps = sample_surface(mesh, args.n_points, args.seed)
    _write_json({"seed": ps.seed, "n": ps.n,
                 "points": ps.points.tolist(),
                 "normals": ps.normals.tolist(),
                 "face_indices": ps.face_indices.tolist()}, args.out)
    print(f"wrote {args.out}")


def cmd_extract(args) -> None:
    bundle = load_bundle(args.bundle)
    fields = _extract_bundle(bundle, args.n_points, args.seed, args.eps,
                             args.threads)
    write_toch(fields, args.out)
    n_corr = [int(f.c.sum()) for f in fields.frames]
    print(f"wrote {args.out} ({len(fields)} frames, "
          f"correspondences per frame: min {min(n_corr)} max {max(n_corr)})")


def cmd_perturb(args) -> None:
    bundle = load_bundle(args.bundle)
    spec = NoiseSpec(kind=_KINDS[args.kind], sigma_trans=args.sigma_trans,
                     sigma_pose=args.sigma_pose, seed=args.seed)
    noisy = perturb_sequence(bundle.sequence, spec)
    save_bundle(SequenceBundle(hand_model_path=bundle.hand_model_path,
                               object_mesh_path=bundle.object_mesh_path,
                               sequence=noisy), args.out)
    print(f"wrote {args.out}")


def cmd_denoise(args) -> None:
    fields = read_toch(args.field)
    write_toch(_denoised(args, fields), args.out)
    print(f"wrote {args.out}")


def cmd_fit(args) -> None:
    fields = read_toch(args.field)
    init = load_bundle(args.init)
    model = load_hand_model(args.model) if args.model \
        else init.load_model()
    fitted, report = fit_sequence(model, fields, init.sequence,
                                  _fit_config(args))
    save_bundle(SequenceBundle(hand_model_path=init.hand_model_path,
                               object_mesh_path=init.object_mesh_path,
                               sequence=fitted), args.out)
    print(f"wrote {args.out} (loss {report.stage1.initial_loss:.6g} -> "
          f"{report.stage2.final_loss:.6g})")


def _mean_iv(model, obj_bvh, seq: HandSequence, voxel_edge) -> float:
    vals = [intersection_volume(skin(model, f), obj_bvh,
                                voxel_edge=voxel_edge)
            for f in seq.frames]
    return float(np.mean(vals))


def cmd_refine(args) -> None:
    bundle = load_bundle(args.bundle)
    model = bundle.load_model()
    obj_bvh = Bvh(bundle.load_object())
    fields = _extract_bundle(bundle, args.n_points, args.seed, args.eps,
                             args.threads)
    if args.oracle_field:
        cleaned = read_toch(args.oracle_field)
    else:
        cleaned = _denoised(args, fields)
    fitted, report = fit_sequence(model, cleaned, bundle.sequence,
                                  _fit_config(args))
    save_bundle(SequenceBundle(hand_model_path=bundle.hand_model_path,
                               object_mesh_path=bundle.object_mesh_path,
                               sequence=fitted), args.out)
    print(f"wrote {args.out}")
    if args.report:
        vin = np.stack([skin_vertices(model, f)
                        for f in bundle.sequence.frames])
        vout = np.stack([skin_vertices(model, f) for f in fitted.frames])
        doc = {
            "mpvpe_refined_vs_input_mm": mpvpe(vout, vin),
            "iv_cm3_input": _mean_iv(model, obj_bvh, bundle.sequence,
                                     args.voxel_edge),
            "iv_cm3_refined": _mean_iv(model, obj_bvh, fitted,
                                       args.voxel_edge),
            "final_loss": report.stage2.final_loss,
        }
        _write_json(doc, args.report)
        print(f"wrote {args.report}")


def cmd_metrics(args) -> None:
    pred = load_bundle(args.pred)
    gt = load_bundle(args.gt)
    model = gt.load_model()
    obj = gt.load_object()
    if len(pred.sequence) != len(gt.sequence):
        raise TochkitError("prediction and groundtruth frame counts differ")
    pj = np.stack([joints_of(model, f) for f in pred.sequence.frames])
    gj = np.stack([joints_of(model, f) for f in gt.sequence.frames])
    pv = np.stack([skin_vertices(model, f) for f in pred.sequence.frames])
    gv = np.stack([skin_vertices(model, f) for f in gt.sequence.frames])
    obj_bvh = Bvh(obj)
    pred_fields = _extract_bundle(pred, args.n_points, args.seed,
                                  DEFAULT_EPS, args.threads)
    gt_fields = _extract_bundle(gt, args.n_points, args.seed, DEFAULT_EPS,
                                args.threads)
    cious = [contact_iou(a, b, tau=args.tau)
             for a, b in zip(pred_fields.frames, gt_fields.frames)]
    doc = {
        "mpjpe_mm": mpjpe(pj, gj, procrustes=args.procrustes),
        "mpvpe_mm": mpvpe(pv, gv, procrustes=args.procrustes),
        "iv_cm3": _mean_iv(model, obj_bvh, pred.sequence, args.voxel_edge),
        "ciou_percent": float(np.mean(cious)),
        "procrustes": bool(args.procrustes),
        "voxel_edge_m": args.voxel_edge,
        "tau_m": args.tau,
    }
    _write_json(doc, args.out)
    print(f"wrote {args.out}")


def cmd_transfer(args) -> None:
    bundle = load_bundle(args.bundle)
    model = bundle.load_model()
    target_obj = load_obj(args.target_object)
    source_fields = _extract_bundle(bundle, args.n_points, args.seed,
                                    args.eps, args.threads)
    target_points = sample_surface(target_obj, args.n_points, args.seed)
    weights = load_weights(args.weights)
    target_fields = transfer(weights, source_fields, target_points)
    fitted, _ = fit_sequence(model, target_fields, bundle.sequence,
                             _fit_config(args))
    save_bundle(SequenceBundle(hand_model_path=bundle.hand_model_path,
                               object_mesh_path=Path(args.target_object),
                               sequence=fitted), args.out)
    print(f"wrote {args.out}")


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tochkit",
        description="Hand-object interaction refinement via object-centric "
                    "correspondence fields")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("make-demo", help="emit the synthetic fixture set")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--frames", type=int, default=30)
    p.set_defaults(func=cmd_make_demo)

    p = sub.add_parser("sample-points", help="sample an object point set")
    p.add_argument("--mesh", required=True)
    _add_sampling_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample_points)

    p = sub.add_parser("extract", help="extract correspondence fields")
    p.add_argument("--bundle", required=True)
    _add_sampling_flags(p)
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("perturb", help="add synthetic tracking noise")
    p.add_argument("--bundle", required=True)
    p.add_argument("--kind", choices=sorted(_KINDS), required=True)
    p.add_argument("--sigma-trans", type=float, default=None)
    p.add_argument("--sigma-pose", type=float, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("denoise", help="denoise a field file")
    p.add_argument("--field", required=True)
    p.add_argument("--weights", default=None)
    p.add_argument("--baseline", action="store_true")
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("fit", help="fit a hand sequence to fields")
    p.add_argument("--field", required=True)
    p.add_argument("--init", required=True)
    p.add_argument("--model", default=None)
    _add_fit_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("refine",
                       help="extract, denoise and refit in one pass")
    p.add_argument("--bundle", required=True)
    p.add_argument("--weights", default=None)
    p.add_argument("--baseline", action="store_true")
    p.add_argument("--window", type=int, default=3)
    p.add_argument("--oracle-field", default=None,
                   help="skip denoising and fit to this field file instead")
    _add_sampling_flags(p)
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--voxel-edge", type=float, default=0.005)
    _add_fit_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("metrics", help="evaluate prediction vs groundtruth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--procrustes", action="store_true")
    p.add_argument("--voxel-edge", type=float, default=0.005)
    p.add_argument("--tau", type=float, default=DEFAULT_TAU)
    _add_sampling_flags(p)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("transfer",
                       help="retarget a grasp to another object")
    p.add_argument("--bundle", required=True)
    p.add_argument("--target-object", required=True)
    p.add_argument("--weights", required=True)
    _add_sampling_flags(p)
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.add_argument("--threads", type=int, default=1)
    _add_fit_flags(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_transfer)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except TochkitError as exc:
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {args.command}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
