"""Command-line harness: decompose, reconstruct, degrade, train, evaluate.

Exit codes: 0 on success, 1 for usage or configuration problems, 2 for
I/O and file-format failures.  Tabular results go to stdout as CSV-style
lines (comment lines start with ``#``); figures and reports are written
to files when requested.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import datasets, report
from .errors import ConfigError, DataFormatError, ShapeError
from .loss import (LossConfig, lowhigh_emphasis_config, rgb_to_y,
                   subband_losses, total_loss, uniform_config)
from .metrics import MetricReport, psnr, ssim
from .model import (AdamState, ModelConfig, build_model, count_mult_adds,
                    count_params, forward, load_checkpoint, save_checkpoint,
                    train_step)
from .pngio import read_png, write_png
from .pyramidio import read_pyramid, write_pyramid
from .resize import degrade, upscale_bicubic
from .wavelet import make_filter, subband_labels, swt_forward, swt_inverse


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---- helpers ---------------------------------------------------------------


def _load_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"{path}: invalid JSON: {exc}") from exc


def _loss_config(args) -> LossConfig:
    if getattr(args, "loss_config", None):
        return LossConfig.from_dict(_load_json(args.loss_config))
    preset = getattr(args, "preset", None) or "uniform"
    filter_name = getattr(args, "filter", None) or "sym19"
    levels = getattr(args, "levels", None)
    levels = 1 if levels is None else levels
    if preset == "uniform":
        return uniform_config(filter_name, levels)
    if preset == "lowhigh":
        if levels != 1:
            raise ConfigError("the lowhigh preset is a single-level setting")
        return lowhigh_emphasis_config(filter_name)
    if preset == "l1-only":
        return uniform_config(filter_name, levels, weight=0.0)
    raise ConfigError(f"unknown preset {preset!r}; use uniform, lowhigh, or l1-only")


def _model_config(args) -> ModelConfig:
    if getattr(args, "model_config", None):
        return ModelConfig.from_dict(_load_json(args.model_config))
    return ModelConfig()


def _gather_pngs(path) -> list:
    p = Path(path)
    if p.is_dir():
        files = sorted(p.glob("*.png"))
        if not files:
            raise DataFormatError(f"{path}: no PNG files found")
        return files
    if p.is_file():
        return [p]
    raise DataFormatError(f"{path}: no such file or directory")


def _read_rgb(path) -> np.ndarray:
    img, _ = read_png(path)
    if img.shape[0] != 3:
        raise DataFormatError(f"{path}: expected an RGB image")
    return img


def _luma_plane(img: np.ndarray) -> np.ndarray:
    if img.shape[0] == 3:
        return rgb_to_y(img[None])[0, 0]
    return img[0]


def _echo(tag: str, payload: dict) -> None:
    print(f"# {tag} {json.dumps(payload, sort_keys=True)}")


def _super_resolve(model, hr: np.ndarray) -> tuple:
    """Degrade one HR image by the model scale and run the network."""
    scale = model.config.scale
    c, h, w = hr.shape
    if h % scale or w % scale:
        raise ShapeError(
            f"image {h}x{w} is not divisible by scale {scale}; crop it first"
        )
    lr = degrade(hr, scale)
    if lr.shape[1] % model.config.window or lr.shape[2] % model.config.window:
        raise ShapeError(
            f"low-resolution size {lr.shape[1]}x{lr.shape[2]} is not "
            f"divisible by window {model.config.window}"
        )
    sr = forward(model, lr[None]).data[0]
    return lr, np.clip(sr, 0.0, 1.0)


# ---- subcommands -------------------------------------------------------------


def _display_band(band: np.ndarray, is_ll: bool) -> np.ndarray:
    """Rescale a subband into [0, 1] for display.

    Approximation planes map min..max onto the full range; detail planes
    keep zero at mid-gray with symmetric stretch.
    """
    if is_ll:
        lo, hi = band.min(), band.max()
        if hi <= lo:
            return np.full_like(band, 0.5)
        return (band - lo) / (hi - lo)
    peak = np.abs(band).max()
    if peak == 0.0:
        return np.full_like(band, 0.5)
    return 0.5 + band / (2.0 * peak)


def _cmd_swt(args) -> int:
    img, _ = read_png(args.image)
    plane = _luma_plane(img)
    fb = make_filter(args.filter)
    pyramid = swt_forward(plane, fb, args.levels)
    write_pyramid(pyramid, args.out)
    _echo("swt_config", {"filter": args.filter, "levels": args.levels})
    print("subband,min,max,mean_abs")
    for label, band in zip(pyramid.labels, pyramid.subbands):
        print(f"{label},{band.min():.6g},{band.max():.6g},"
              f"{np.abs(band).mean():.6g}")
    if args.png_dir:
        png_dir = Path(args.png_dir)
        png_dir.mkdir(parents=True, exist_ok=True)
        for label, band in zip(pyramid.labels, pyramid.subbands):
            disp = _display_band(band[0, 0], label.startswith("LL"))
            path = png_dir / f"{label}.png"
            write_png(path, disp[None], bit_depth=8)
            print(f"# wrote {path}")
    if args.figure:
        report.save_pyramid_figure(pyramid, args.figure)
        print(f"# wrote {args.figure}")
    print(f"# wrote {args.out}")
    return 0


def _cmd_iswt(args) -> int:
    pyramid = read_pyramid(args.pyramid)
    recon = swt_inverse(pyramid, make_filter(pyramid.filter_name))
    plane = recon[0, 0] if recon.ndim == 4 else recon
    write_png(args.out, plane[None], bit_depth=args.depth)
    print(f"# wrote {args.out} ({plane.shape[0]}x{plane.shape[1]}, "
          f"{args.depth}-bit)")
    return 0


def _cmd_loss(args) -> int:
    x = _read_rgb(args.image)
    y = _read_rgb(args.reference)
    if x.shape != y.shape:
        raise ShapeError(f"image shapes differ: {x.shape} vs {y.shape}")
    config = _loss_config(args)
    _echo("loss_config", config.to_dict())
    xb, yb = x[None], y[None]
    pixel = float(np.mean(np.abs(xb - yb)))
    per_band = subband_losses(xb, yb, config) if any(config.lambdas) else []
    band_labels = subband_labels(config.levels) if per_band else []
    print("term,weight,value,weighted")
    print(f"l1_rgb,1,{pixel:.8g},{pixel:.8g}")
    for label, lam, value in zip(band_labels, config.lambdas, per_band):
        print(f"{label},{lam:g},{value:.8g},{lam * value:.8g}")
    total = total_loss(xb, yb, config)
    print(f"total,,,{total:.8g}")
    if args.report:
        report.write_json(args.report, {
            "loss_config": config.to_dict(),
            "l1_rgb": pixel,
            "subbands": [
                {"label": lab, "weight": lam, "value": val}
                for lab, lam, val in zip(band_labels, config.lambdas, per_band)
            ],
            "total": total,
        })
        print(f"# wrote {args.report}")
    if args.figure and per_band:
        report.save_subband_loss_figure(band_labels, per_band,
                                        list(config.lambdas), args.figure)
        print(f"# wrote {args.figure}")
    return 0


def _cmd_degrade(args) -> int:
    img, depth = read_png(args.image)
    lr = degrade(img, args.scale)
    write_png(args.out, lr, bit_depth=depth)
    print(f"# wrote {args.out} ({lr.shape[1]}x{lr.shape[2]})")
    return 0


def _cmd_upscale(args) -> int:
    img, depth = read_png(args.image)
    up = upscale_bicubic(img, args.scale)
    write_png(args.out, np.clip(up, 0.0, 1.0), bit_depth=depth)
    print(f"# wrote {args.out} ({up.shape[1]}x{up.shape[2]})")
    return 0


def evaluate_dirs(sr_dir, gt_dir, crop: int = 0,
                  on_y: bool = False) -> MetricReport:
    """Score outputs against same-named reference PNGs.

    Every reference image in ``gt_dir`` must have an output of the same
    file name in ``sr_dir``; a missing pair is reported by name.
    """
    gt_files = _gather_pngs(gt_dir)
    by_name = {f.name: f for f in _gather_pngs(sr_dir)}
    result = MetricReport(crop=crop, on_y=on_y)
    for f in gt_files:
        if f.name not in by_name:
            raise DataFormatError(f"{sr_dir}: no output image named {f.name}")
        hr = _read_rgb(f)
        sr = _read_rgb(by_name[f.name])
        if sr.shape != hr.shape:
            raise ShapeError(
                f"{f.name}: output {sr.shape} does not match "
                f"reference {hr.shape}"
            )
        result.add(f.stem, psnr(sr, hr, crop=crop, on_y=on_y),
                   ssim(sr, hr, crop=crop, on_y=on_y))
    return result


def _metric_rows(result: MetricReport) -> list:
    rows = [(name, f"{p:.4f}", f"{s:.6f}")
            for name, p, s in zip(result.names, result.psnr_values,
                                  result.ssim_values)]
    rows.append(("mean", f"{result.mean_psnr:.4f}",
                 f"{result.mean_ssim:.6f}"))
    return rows


def _cmd_eval(args) -> int:
    if args.checkpoint:
        model = load_checkpoint(args.checkpoint)
        crop = model.config.scale if args.crop is None else args.crop
        _echo("model_config", model.config.to_dict())
        result = MetricReport(crop=crop, on_y=args.y)
        for f in _gather_pngs(args.hr):
            hr = _read_rgb(f)
            _, sr = _super_resolve(model, hr)
            result.add(f.stem, psnr(sr, hr, crop=crop, on_y=args.y),
                       ssim(sr, hr, crop=crop, on_y=args.y))
    else:
        if not args.sr:
            raise UsageError("eval needs either --sr or --checkpoint")
        crop = args.crop or 0
        sr_path, hr_path = Path(args.sr), Path(args.hr)
        if sr_path.is_file() and hr_path.is_file():
            hr = _read_rgb(hr_path)
            sr = _read_rgb(sr_path)
            if sr.shape != hr.shape:
                raise ShapeError(
                    f"{sr_path.name}: output {sr.shape} does not match "
                    f"reference {hr.shape}"
                )
            result = MetricReport(crop=crop, on_y=args.y)
            result.add(hr_path.stem, psnr(sr, hr, crop=crop, on_y=args.y),
                       ssim(sr, hr, crop=crop, on_y=args.y))
        else:
            result = evaluate_dirs(args.sr, args.hr, crop=crop, on_y=args.y)

    print("image,psnr,ssim")
    for name, p, s in zip(result.names, result.psnr_values,
                          result.ssim_values):
        print(f"{name},{p:.4f},{s:.6f}")
    print(f"mean,{result.mean_psnr:.4f},{result.mean_ssim:.6f}")
    if args.report:
        report.write_json(args.report, result.to_dict())
        print(f"# wrote {args.report}")
        table_path = Path(args.report).with_suffix(".txt")
        table_path.write_text(
            report.text_table(["image", "psnr", "ssim"],
                              _metric_rows(result)),
            encoding="utf-8",
        )
        print(f"# wrote {table_path}")
    if args.csv:
        rows = list(zip(result.names, result.psnr_values, result.ssim_values))
        rows.append(("mean", result.mean_psnr, result.mean_ssim))
        report.write_csv(args.csv, ["image", "psnr", "ssim"], rows)
        print(f"# wrote {args.csv}")
    if args.figure:
        report.save_metric_figure(result, args.figure)
        print(f"# wrote {args.figure}")
    return 0


def _parse_milestones(text: str) -> tuple:
    if not text:
        return ()
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad milestone list {text!r}") from exc


_RUN_KEYS = ("model", "loss", "steps", "batch", "patch", "lr",
             "milestones", "seed")
_RUN_DEFAULTS = {"steps": 200, "batch": 4, "patch": 16, "lr": 2e-4,
                 "seed": 0}


def _run_settings(args) -> dict:
    """Resolve training settings: CLI flags win over --config, then defaults.

    Returns the fully-resolved settings with the model and loss configs
    already constructed, suitable for echoing back out as JSON.
    """
    raw = _load_json(args.config) if args.config else {}
    if not isinstance(raw, dict):
        raise DataFormatError(f"{args.config}: expected a JSON object")
    unknown = sorted(set(raw) - set(_RUN_KEYS))
    if unknown:
        raise ConfigError(f"unknown run config keys: {', '.join(unknown)}")

    if getattr(args, "model_config", None):
        model_config = ModelConfig.from_dict(_load_json(args.model_config))
    elif "model" in raw:
        model_config = ModelConfig.from_dict(raw["model"])
    else:
        model_config = ModelConfig()

    loss_flags = (getattr(args, "loss_config", None) or args.preset is not None
                  or args.filter is not None or args.levels is not None)
    if loss_flags:
        loss_config = _loss_config(args)
    elif "loss" in raw:
        loss_config = LossConfig.from_dict(raw["loss"])
    else:
        loss_config = uniform_config()

    def pick(name, cast):
        cli = getattr(args, name)
        if cli is not None:
            return cli
        if name in raw:
            try:
                return cast(raw[name])
            except (TypeError, ValueError) as exc:
                raise ConfigError(
                    f"bad run config value for {name}: {raw[name]!r}"
                ) from exc
        return _RUN_DEFAULTS[name]

    if args.milestones is not None:
        milestones = _parse_milestones(args.milestones)
    elif "milestones" in raw:
        try:
            milestones = tuple(int(v) for v in raw["milestones"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(
                f"bad run config milestones: {raw['milestones']!r}"
            ) from exc
    else:
        milestones = ()

    return {
        "model": model_config,
        "loss": loss_config,
        "steps": pick("steps", int),
        "batch": pick("batch", int),
        "patch": pick("patch", int),
        "lr": pick("lr", float),
        "milestones": milestones,
        "seed": pick("seed", int),
    }


def _run_training(hr_images, model_config: ModelConfig,
                  loss_config: LossConfig, steps: int, batch: int,
                  patch: int, lr: float, milestones: tuple, seed: int,
                  print_every: int = 0):
    """Shared train loop; returns (model, per-step losses)."""
    if patch % model_config.window:
        raise ConfigError(
            f"patch {patch} is not divisible by window {model_config.window}"
        )
    scale = model_config.scale
    pairs = []
    for hr in hr_images:
        c, h, w = hr.shape
        if h % scale or w % scale:
            raise ShapeError(
                f"training image {h}x{w} is not divisible by scale {scale}"
            )
        pairs.append((degrade(hr, scale), hr))
    model = build_model(model_config)
    state = AdamState(lr=lr, milestones=milestones)
    rng = np.random.default_rng(seed)
    losses = []
    for step in range(1, steps + 1):
        lr_batch, hr_batch = datasets.sample_batch(pairs, batch, patch,
                                                   scale, rng)
        value = train_step(model, lr_batch, hr_batch, loss_config, state)
        losses.append(value)
        if print_every and (step % print_every == 0 or step == 1
                            or step == steps):
            print(f"{step},{value:.8g}")
    return model, losses


def _cmd_train(args) -> int:
    settings = _run_settings(args)
    model_config, loss_config = settings["model"], settings["loss"]
    resolved = dict(settings,
                    model=model_config.to_dict(),
                    loss=loss_config.to_dict(),
                    milestones=list(settings["milestones"]))
    _echo("run_config", resolved)
    hr_images = [_read_rgb(f) for f in _gather_pngs(args.hr)]
    out = Path(args.out)
    if str(out.parent) not in ("", "."):
        out.parent.mkdir(parents=True, exist_ok=True)
    print("step,loss")
    model, losses = _run_training(
        hr_images, model_config, loss_config, settings["steps"],
        settings["batch"], settings["patch"], settings["lr"],
        settings["milestones"], settings["seed"],
        print_every=args.print_every,
    )
    save_checkpoint(model, out)
    print(f"# wrote {out}")
    config_path = out.parent / f"{out.stem}_config.json"
    report.write_json(config_path, resolved)
    print(f"# wrote {config_path}")
    log_path = Path(args.log) if args.log else out.parent / f"{out.stem}_loss.csv"
    report.write_csv(log_path, ["step", "loss"],
                     list(enumerate(losses, start=1)))
    print(f"# wrote {log_path}")
    try:
        _, sr = _super_resolve(model, hr_images[0])
    except ShapeError as exc:
        print(f"# skipped validation render: {exc}")
    else:
        val_path = out.parent / f"{out.stem}_val.png"
        write_png(val_path, sr, bit_depth=8)
        print(f"# wrote {val_path}")
    if args.figure:
        report.save_loss_curve(list(range(1, len(losses) + 1)), losses,
                               args.figure)
        print(f"# wrote {args.figure}")
    return 0


def _cmd_count(args) -> int:
    config = _model_config(args)
    _echo("model_config", config.to_dict())
    model = build_model(config)
    print("quantity,value")
    print(f"params,{count_params(model)}")
    print(f"mult_adds,{count_mult_adds(model, args.height, args.width)}")
    return 0


def _cmd_stripes(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    images = datasets.stripe_set(args.count, args.size, seed=args.seed)
    for i, img in enumerate(images):
        path = out / f"stripe_{i:02d}.png"
        write_png(path, img, bit_depth=args.depth)
        print(f"# wrote {path}")
    return 0


def _cmd_ablate(args) -> int:
    model_config = _model_config(args)
    _echo("model_config", model_config.to_dict())
    hr_images = [_read_rgb(f) for f in _gather_pngs(args.hr)]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    milestones = _parse_milestones(args.milestones)

    arms = {
        "l1_only": uniform_config(args.filter, 1, weight=0.0),
        "l1_swt": uniform_config(args.filter, 1),
    }
    probe = uniform_config(args.filter, 1)
    band_names = subband_labels(1)
    curves = {}
    rows = []
    for name, loss_config in arms.items():
        _echo(f"loss_config[{name}]", loss_config.to_dict())
        model, losses = _run_training(
            hr_images, model_config, loss_config, args.steps, args.batch,
            args.patch, args.lr, milestones, args.seed,
        )
        save_checkpoint(model, out / f"{name}.ckpt")
        curves[name] = losses
        result = MetricReport(crop=model_config.scale, on_y=True)
        band_sum = np.zeros(len(band_names))
        for i, hr in enumerate(hr_images):
            _, sr = _super_resolve(model, hr)
            result.add(f"img{i:02d}",
                       psnr(sr, hr, crop=model_config.scale, on_y=True),
                       ssim(sr, hr, crop=model_config.scale, on_y=True))
            band_sum += subband_losses(sr[None], hr[None], probe)
        band_mean = band_sum / len(hr_images)
        rows.append((name, losses[-1], result.mean_psnr, result.mean_ssim,
                     *band_mean))

    band_cols = [f"mae_{b.lower()}" for b in band_names]
    header = ["arm", "final_loss", "mean_psnr_y", "mean_ssim_y"] + band_cols
    print(",".join(header))
    for name, final, p, s, *bands in rows:
        cells = [name, f"{final:.8g}", f"{p:.4f}", f"{s:.6f}"]
        cells += [f"{v:.6g}" for v in bands]
        print(",".join(cells))
    report.write_csv(out / "comparison.csv", header, rows)
    report.save_comparison_curves(list(range(1, args.steps + 1)), curves,
                                  out / "loss_curves.png")
    print(f"# wrote {out / 'comparison.csv'}")
    print(f"# wrote {out / 'loss_curves.png'}")
    return 0


# ---- parser -------------------------------------------------------------------


def _add_loss_options(p, defaulted: bool = True):
    """Loss flags; pass defaulted=False where a run config may fill them."""
    p.add_argument("--loss-config", help="JSON file with loss settings")
    p.add_argument("--preset", default="uniform" if defaulted else None,
                   choices=["uniform", "lowhigh", "l1-only"],
                   help="built-in loss weighting")
    p.add_argument("--filter", default="sym19" if defaulted else None,
                   help="wavelet filter name")
    p.add_argument("--levels", type=int, default=1 if defaulted else None,
                   help="decomposition depth")


def _build_parser() -> _Parser:
    parser = _Parser(prog="waveletsr",
                     description="Wavelet-loss super-resolution harness")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("swt", help="decompose an image into subbands")
    p.add_argument("image")
    p.add_argument("--out", required=True, help="sidecar output path")
    p.add_argument("--filter", default="sym19")
    p.add_argument("--levels", type=int, default=1)
    p.add_argument("--png-dir",
                   help="also write display-rescaled subband PNGs here")
    p.add_argument("--figure", help="render the subbands to this PNG")
    p.set_defaults(func=_cmd_swt)

    p = sub.add_parser("iswt", help="reconstruct an image from a sidecar")
    p.add_argument("pyramid")
    p.add_argument("--out", required=True)
    p.add_argument("--depth", type=int, default=8, choices=[8, 16])
    p.set_defaults(func=_cmd_iswt)

    p = sub.add_parser("loss", help="loss breakdown between two images")
    p.add_argument("image")
    p.add_argument("reference")
    _add_loss_options(p)
    p.add_argument("--report", help="write a JSON breakdown")
    p.add_argument("--figure", help="bar chart of weighted subband terms")
    p.set_defaults(func=_cmd_loss)

    p = sub.add_parser("degrade", help="bicubic downscale (antialiased)")
    p.add_argument("image")
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_degrade)

    p = sub.add_parser("upscale", help="bicubic upscale baseline")
    p.add_argument("image")
    p.add_argument("--scale", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_upscale)

    p = sub.add_parser("eval", help="PSNR/SSIM of outputs against references")
    p.add_argument("--hr", required=True, help="reference image or directory")
    p.add_argument("--sr", help="output image or directory to score")
    p.add_argument("--checkpoint", help="super-resolve with this model")
    p.add_argument("--crop", type=int, default=None,
                   help="border pixels to ignore (default: scale with "
                        "--checkpoint, else 0)")
    p.add_argument("--y", action="store_true", help="measure on luma")
    p.add_argument("--report", help="write a JSON report")
    p.add_argument("--csv", help="write a CSV report")
    p.add_argument("--figure", help="write a bar-chart figure")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("train", help="optimize a model on an image directory")
    p.add_argument("--hr", required=True)
    p.add_argument("--config",
                   help="JSON run config (model/loss/steps/batch/patch/lr/"
                        "milestones/seed); explicit flags override it")
    p.add_argument("--model-config", help="JSON file with model settings")
    _add_loss_options(p, defaulted=False)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--patch", type=int, default=None,
                   help="low-resolution patch edge")
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--milestones", default=None,
                   help="comma-separated steps where the rate halves")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--log", help="loss CSV path (default: <out>_loss.csv)")
    p.add_argument("--figure", help="write a loss-curve figure")
    p.add_argument("--print-every", type=int, default=10)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("count", help="parameter and mult-add counts")
    p.add_argument("--model-config")
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--width", type=int, default=64)
    p.set_defaults(func=_cmd_count)

    p = sub.add_parser("stripes", help="write a synthetic grating set")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, default=8)
    p.add_argument("--size", type=int, default=96)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--depth", type=int, default=8, choices=[8, 16])
    p.set_defaults(func=_cmd_stripes)

    p = sub.add_parser("ablate",
                       help="train with and without the subband term")
    p.add_argument("--hr", required=True)
    p.add_argument("--model-config")
    p.add_argument("--filter", default="sym19")
    p.add_argument("--steps", type=int, default=120)
    p.add_argument("--batch", type=int, default=4)
    p.add_argument("--patch", type=int, default=16)
    p.add_argument("--lr", type=float, default=2e-3)
    p.add_argument("--milestones", default="")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_ablate)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "command", None) is None:
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except (UsageError, ConfigError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
