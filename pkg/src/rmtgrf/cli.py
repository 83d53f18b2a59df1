"""Command-line entry point: ``rmtgrf <subcommand> ...``.

Errors are reported as one JSON object on stderr with a nonzero exit code.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import dataset as ds
from .cs import CsConfig, MaskSpec, apply_mask, random_mask, reconstruct
from .errors import ConfigError, RmtError
from .experiments import crosstest, evaluate, invert, run_cs_experiment, run_noise_experiment
from .forward2d import forward_response
from .io import read_array, read_json, write_array, write_json
from .mesh import MeshConfig, ResistivityModel, build_mesh, embed_core
from .nn.train import TrainConfig, history_to_csv, load_checkpoint, save_checkpoint, train
from .nn.unet import UNetConfig
from .response import RmtResponse
from .svg import histogram_svg, write_heatmap


def _mesh(args):
    cfg = MeshConfig(**read_json(args.mesh_config)) if getattr(args, "mesh_config", None) else MeshConfig()
    return build_mesh(cfg)


def _write_rows(stem, rows):
    stem = Path(stem)
    write_json(stem.with_suffix(".json"), rows)
    with open(stem.with_suffix(".csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})


def cmd_gen(args):
    man = ds.gen_dataset(args.kind, args.n, args.seed, args.out,
                         MeshConfig(**read_json(args.mesh_config)) if args.mesh_config else None,
                         workers=args.workers)
    return {"out": args.out, "n": man.n, "splits": {s: len(man.ids(s)) for s in ("train", "val", "test")}}


def cmd_forward(args):
    mesh = _mesh(args)
    log10_rho, meta = read_array(args.model)
    resp = forward_response(ResistivityModel(log10_rho, meta.get("mesh_id", "default")), mesh)
    resp.save(args.out, {"model": str(args.model)})
    return {"out": args.out}


def cmd_add_noise(args):
    resp = RmtResponse.load(args.data)
    noisy = ds.add_noise(resp, ds.NoiseSpec(args.level, args.seed))
    noisy.save(args.out, {"noise_level": args.level, "noise_seed": args.seed})
    return {"out": args.out}


def cmd_mask(args):
    resp = RmtResponse.load(args.data)
    mask = random_mask((4,) + resp.shape, MaskSpec(args.fraction, args.seed))
    apply_mask(resp, mask).save(args.out, {"mask_fraction": args.fraction, "mask_seed": args.seed})
    return {"out": args.out, "masked_entries": int(mask.sum())}


def cmd_reconstruct(args):
    resp = RmtResponse.load(args.data)
    rec = reconstruct(resp, CsConfig(args.lam, args.iters, args.tol))
    rec.save(args.out, {"lambda_rel": args.lam, "max_iters": args.iters})
    return {"out": args.out}


def train_from_config(cfg: dict):
    """Train from a config dict with keys ``data``, ``out``, ``unet``, ``train``, ``limit``."""
    if "data" not in cfg or "out" not in cfg:
        raise ConfigError("config", "needs 'data' (dataset dir) and 'out' (checkpoint dir)")
    ucfg = UNetConfig(**cfg.get("unet", {}))
    tcfg = TrainConfig(**cfg.get("train", {}))
    limit = cfg.get("limit")
    tr = ds.load_split(cfg["data"], "train", limit)
    va = ds.load_split(cfg["data"], "val", limit)
    S = ucfg.input_size
    res = train(ds.response_to_input(tr.responses, S), ds.model_to_target(tr.cores, S),
                ds.response_to_input(va.responses, S), ds.model_to_target(va.cores, S), ucfg, tcfg)
    out = Path(cfg["out"])
    best = res.history[res.best_epoch]
    save_checkpoint(out, res.net, res.best_epoch, best, tcfg)
    (out / "history.csv").write_text(res.history_csv())
    return res


def cmd_train(args):
    cfg = read_json(args.config) if args.config else {}
    for key in ("data", "out"):
        if getattr(args, key):
            cfg[key] = getattr(args, key)
    res = train_from_config(cfg)
    return {"out": cfg["out"], "epochs": len(res.history), "best_epoch": res.best_epoch,
            "stopped_early": res.stopped_early}


def cmd_invert(args):
    net, _ = load_checkpoint(args.checkpoint)
    mesh = _mesh(args)
    core = invert(net, RmtResponse.load(args.data), mesh.core_shape)
    model = embed_core(core, mesh, float(core.mean()))
    out = Path(args.out)
    write_array(out, model.log10_rho, {"kind": "resistivity_model", "mesh_id": model.mesh_id,
                                       "source": str(args.data), "checkpoint": str(args.checkpoint)})
    write_heatmap(out.with_suffix(".svg"), core, title="inverted log10 resistivity", vmin=1, vmax=4,
                  label="log10 ohm m")
    return {"out": str(out.with_suffix(".bin"))}


def cmd_evaluate(args):
    net, _ = load_checkpoint(args.checkpoint)
    rep = evaluate(net, ds.load_split(args.data, args.split, args.limit), f"{args.data}:{args.split}")
    if args.out:
        _write_rows(args.out, [rep.row()])
    return rep.row()


def cmd_experiment(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.which == "noise":
        net, _ = load_checkpoint(args.checkpoint)
        rep = run_noise_experiment(net, ds.load_split(args.data, args.split, args.limit),
                                   tuple(args.levels), args.seed)
        _write_rows(out / "noise_report", rep.rows)
        return {"rows": rep.rows, "ssim_non_increasing": rep.ssim_non_increasing}
    if args.which == "cs":
        net, _ = load_checkpoint(args.checkpoint)
        data = ds.load_split(args.data, args.split, args.limit)
        idx = data.ids.index(args.sample) if args.sample else 0
        res = run_cs_experiment(net, data.response(idx), args.fraction, args.seed)
        names = ("rho_te", "rho_tm", "phi_te", "phi_tm")
        for c, name in enumerate(names):
            for tag, arr in (("original", res.original), ("masked", res.masked),
                             ("reconstructed", res.reconstructed)):
                v = np.log10(arr[c]) if c < 2 else arr[c]
                write_heatmap(out / f"{name}_{tag}.svg", v, title=f"{name} {tag}", cell_px=12)
        (out / "relative_error_hist.svg").write_text(
            histogram_svg(res.histogram["counts"], res.histogram["edges"], "relative error"))
        for tag, core in (("original", res.inversion_original), ("reconstructed", res.inversion_reconstructed)):
            write_heatmap(out / f"inversion_{tag}.svg", core, title=f"inversion from {tag} data",
                          vmin=1, vmax=4, label="log10 ohm m")
        summary = {"sample": data.ids[idx], "fraction": args.fraction,
                   "median_relative_error": res.histogram["median"],
                   "median_abs_relative_error": res.histogram["median_abs"],
                   "inversion_ssim": res.inversion_ssim}
        write_json(out / "cs_report.json", summary)
        return summary
    # crosstest
    nets = {name: load_checkpoint(path)[0] for name, path in (s.split("=", 1) for s in args.checkpoints)}
    sets = {name: ds.load_split(path, args.split, args.limit)
            for name, path in (s.split("=", 1) for s in args.datasets)}
    rows = crosstest(nets, sets)
    _write_rows(out / "crosstest", rows)
    return {"rows": rows}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rmtgrf", description="RMT deep-learning inversion lab")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a model/response dataset")
    g.add_argument("--kind", choices=ds.KINDS, required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--mesh-config")
    g.set_defaults(func=cmd_gen)

    f = sub.add_parser("forward", help="simulate TE/TM responses of a model file")
    f.add_argument("--model", required=True)
    f.add_argument("--out", required=True)
    f.add_argument("--mesh-config")
    f.set_defaults(func=cmd_forward)

    n = sub.add_parser("add-noise", help="multiplicative Gaussian noise")
    n.add_argument("--data", required=True)
    n.add_argument("--level", type=float, required=True)
    n.add_argument("--seed", type=int, default=0)
    n.add_argument("--out", required=True)
    n.set_defaults(func=cmd_add_noise)

    m = sub.add_parser("mask", help="randomly mask response entries")
    m.add_argument("--data", required=True)
    m.add_argument("--fraction", type=float, default=0.3125)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", required=True)
    m.set_defaults(func=cmd_mask)

    r = sub.add_parser("reconstruct", help="L1 reconstruction of masked entries")
    r.add_argument("--data", required=True)
    r.add_argument("--lambda", dest="lam", type=float, default=1e-3)
    r.add_argument("--iters", type=int, default=500)
    r.add_argument("--tol", type=float, default=1e-6)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_reconstruct)

    t = sub.add_parser("train", help="train a U-Net from a JSON config")
    t.add_argument("--config")
    t.add_argument("--data")
    t.add_argument("--out")
    t.set_defaults(func=cmd_train)

    i = sub.add_parser("invert", help="invert one response file")
    i.add_argument("--checkpoint", required=True)
    i.add_argument("--data", required=True)
    i.add_argument("--out", required=True)
    i.add_argument("--mesh-config")
    i.set_defaults(func=cmd_invert)

    e = sub.add_parser("evaluate", help="MSE/MAE/SSIM on a dataset split")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--split", default="test")
    e.add_argument("--limit", type=int)
    e.add_argument("--out")
    e.set_defaults(func=cmd_evaluate)

    x = sub.add_parser("experiment", help="noise, cs or crosstest studies")
    x.add_argument("which", choices=("noise", "cs", "crosstest"))
    x.add_argument("--checkpoint")
    x.add_argument("--data")
    x.add_argument("--split", default="test")
    x.add_argument("--limit", type=int)
    x.add_argument("--levels", type=float, nargs="+", default=[0.01, 0.03, 0.05])
    x.add_argument("--fraction", type=float, default=0.3125)
    x.add_argument("--sample")
    x.add_argument("--seed", type=int, default=0)
    x.add_argument("--checkpoints", nargs="+", default=[], help="name=checkpoint_dir")
    x.add_argument("--datasets", nargs="+", default=[], help="name=dataset_dir")
    x.add_argument("--out", required=True)
    x.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        if args.command == "experiment":
            need = ("checkpoints", "datasets") if args.which == "crosstest" else ("checkpoint", "data")
            for k in need:
                if not getattr(args, k):
                    raise ConfigError(k, f"required for experiment {args.which}")
        result = args.func(args)
    except RmtError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    print(json.dumps(_plain(result), sort_keys=True))
    return 0


def _plain(obj):
    from .io import to_jsonable
    return to_jsonable(obj)


if __name__ == "__main__":
    sys.exit(main())
