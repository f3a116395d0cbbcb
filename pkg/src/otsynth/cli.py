"""Command-line front end.

Exit codes: 0 success, 2 usage or input problems, 3 numeric/runtime
failures.  Every run writes a JSON manifest beside the output image with
the resolved configuration, input hashes and per-stage timings.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click
import numpy as np
from threadpoolctl import threadpool_limits

from . import color as color_mod
from .codec import PyramidCodec, VggCodec, load_archive
from .errors import NumericError, OtsynthError
from .manifest import StageTimer, build_manifest, write_manifest
from .mixing import MixSpec, synthesize_mixture
from .painting import GuidanceMasks, guided_synthesize
from .pipeline import SynthesisConfig, synthesize
from .tensors import read_mask_png, read_png, write_png

WEIGHTS_ENV = "OTSYNTH_WEIGHTS"


def _parse_size(value: str) -> tuple[int, int]:
    try:
        w, h = value.lower().split("x")
        return int(w), int(h)
    except ValueError as exc:
        raise click.BadParameter(f"size must look like 512x512, got {value!r}") from exc


def _load_config_file(ctx, param, value):
    """key=value lines become parameter defaults; flags still win."""
    if value is None:
        return None
    defaults = {}
    for line in Path(value).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise click.BadParameter(f"config line is not key=value: {line!r}")
        key, _, raw = line.partition("=")
        defaults[key.strip().replace("-", "_")] = raw.strip()
    ctx.default_map = dict(ctx.default_map or {})
    ctx.default_map.update(defaults)
    return value


def common_options(fn):
    fn = click.option("--out", required=True, type=click.Path(dir_okay=False), help="Output PNG path.")(fn)
    fn = click.option("--size", default="256x256", show_default=True, help="Output size WxH.")(fn)
    fn = click.option("--seed", default=0, show_default=True, type=int)(fn)
    fn = click.option("--passes", default=5, show_default=True, type=int, help="Global passes.")(fn)
    fn = click.option("--bins", default=128, show_default=True, type=int)(fn)
    fn = click.option("--pca/--no-pca", "use_pca", default=True, show_default=True, help="Transport in a PCA subspace.")(fn)
    fn = click.option("--pca-threshold", default=0.9, show_default=True, type=float)(fn)
    fn = click.option("--min-pyramid", "min_pyramid", default=256, show_default=True, type=int, help="Coarsest pyramid size.")(fn)
    fn = click.option("--codec", default="pyramid", show_default=True, type=click.Choice(["pyramid", "vgg"]))(fn)
    fn = click.option("--weights", envvar=WEIGHTS_ENV, type=click.Path(dir_okay=False), help=f"OTWA archive (or ${WEIGHTS_ENV}).")(fn)
    fn = click.option("--threads", default=os.cpu_count(), show_default="all cores", type=int)(fn)
    fn = click.option("--config", type=click.Path(dir_okay=False, exists=True), callback=_load_config_file, expose_value=False, is_eager=True, help="key=value defaults file.")(fn)
    return fn


@click.group()
def main():
    """Texture synthesis and transfer via sliced optimal transport."""


def _require_file(path, what: str) -> Path:
    if path is None:
        raise click.UsageError(f"missing {what}")
    p = Path(path)
    if not p.is_file():
        raise click.UsageError(f"{what} not found: {p}")
    return p


def _build_codec(codec_name: str, weights, inputs: dict):
    if codec_name == "vgg":
        wpath = _require_file(weights, "weights archive (--weights)")
        inputs["weights"] = wpath
        return VggCodec(load_archive(wpath.read_bytes()))
    return PyramidCodec()


def _make_config(mode, size, passes, bins, content_strength, use_pca, pca_threshold, min_pyramid, seed, codec_name):
    width, height = _parse_size(size)
    try:
        cfg = SynthesisConfig(
            mode=mode,
            output_width=width,
            output_height=height,
            global_passes=passes,
            bins=bins,
            content_strength=content_strength,
            use_pca=use_pca,
            pca_threshold=pca_threshold,
            min_pyramid_size=min_pyramid,
            seed=seed,
            codec=codec_name,
        )
        cfg.validate()
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    return cfg


def _run(command: str, cfg, codec, inputs: dict, out, work, extra: dict | None = None, threads: int | None = None):
    timer = StageTimer()
    try:
        with threadpool_limits(limits=threads):
            timer.start("synthesis")
            image = work()
            timer.stop("synthesis")
    except NumericError as exc:
        click.echo(f"numeric failure: {exc}", err=True)
        sys.exit(3)
    except OtsynthError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except (ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except FloatingPointError as exc:
        click.echo(f"numeric failure: {exc}", err=True)
        sys.exit(3)
    timer.start("write")
    write_png(out, image)
    timer.stop("write")
    manifest = build_manifest(command, cfg, inputs, codec.name, timer, extra)
    write_manifest(out, manifest)


@main.command()
@click.option("--style", required=True, type=click.Path(dir_okay=False), help="Exemplar texture PNG.")
@common_options
def synth(style, out, size, seed, passes, bins, use_pca, pca_threshold, min_pyramid, codec, weights, threads):
    """Synthesize a texture from an exemplar."""
    style_path = _require_file(style, "style image")
    cfg = _make_config("texture", size, passes, bins, 0.0, use_pca, pca_threshold, min_pyramid, seed, codec)
    inputs = {"style": style_path}
    codec_obj = _build_codec(codec, weights, inputs)
    style_img = read_png(style_path)
    _run("synth", cfg, codec_obj, inputs, out, lambda: synthesize(style_img, None, cfg, codec_obj), threads=threads)


@main.command()
@click.option("--style", required=True, type=click.Path(dir_okay=False))
@click.option("--content", required=True, type=click.Path(dir_okay=False))
@click.option("--content-strength", default=0.5, show_default=True, type=float)
@click.option("--color", "color_mode", default="none", show_default=True, type=click.Choice(["none", "global", "luminance", "combined"]), help="Color post-stage.")
@common_options
def style(style, content, content_strength, color_mode, out, size, seed, passes, bins, use_pca, pca_threshold, min_pyramid, codec, weights, threads):
    """Transfer the style of one image onto the content of another."""
    if not 0.0 <= content_strength <= 1.0:
        raise click.UsageError(f"--content-strength must be in [0, 1], got {content_strength}")
    style_path = _require_file(style, "style image")
    content_path = _require_file(content, "content image")
    cfg = _make_config("style", size, passes, bins, content_strength, use_pca, pca_threshold, min_pyramid, seed, codec)
    inputs = {"style": style_path, "content": content_path}
    codec_obj = _build_codec(codec, weights, inputs)
    style_img = read_png(style_path)
    content_img = read_png(content_path)

    def work():
        from .pipeline import fit_content_to_output

        stylized = synthesize(style_img, content_img, cfg, codec_obj)
        if color_mode == "none":
            return stylized
        fitted = fit_content_to_output(content_img, cfg.output_width, cfg.output_height)
        if color_mode == "global":
            return color_mod.color_transfer_global(stylized, fitted, cfg)
        if color_mode == "luminance":
            return color_mod.luminance_transfer(fitted, stylized)
        return color_mod.color_transfer_combined(stylized, fitted, cfg)

    _run("style", cfg, codec_obj, inputs, out, work, extra={"color": color_mode}, threads=threads)


@main.command()
@click.option("--a", "tex_a", required=True, type=click.Path(dir_okay=False), help="First exemplar.")
@click.option("--b", "tex_b", required=True, type=click.Path(dir_okay=False), help="Second exemplar.")
@click.option("--ratio", required=True, type=float, help="Interpolation in [0, 1]; 0 is pure A.")
@click.option("--mixing-mask", type=click.Path(dir_okay=False), help="Optional 8-bit PNG (v/255); random when omitted.")
@common_options
def mix(tex_a, tex_b, ratio, mixing_mask, out, size, seed, passes, bins, use_pca, pca_threshold, min_pyramid, codec, weights, threads):
    """Mix two textures into a hybrid."""
    if not 0.0 <= ratio <= 1.0:
        raise click.UsageError(f"--ratio must be in [0, 1], got {ratio}")
    a_path = _require_file(tex_a, "texture A")
    b_path = _require_file(tex_b, "texture B")
    cfg = _make_config("texture", size, passes, bins, 0.0, use_pca, pca_threshold, min_pyramid, seed, codec)
    inputs = {"texture_a": a_path, "texture_b": b_path}
    mask = None
    if mixing_mask is not None:
        mask_path = _require_file(mixing_mask, "mixing mask")
        inputs["mixing_mask"] = mask_path
        mask = read_mask_png(mask_path).astype(np.float32) / np.float32(255.0)
    codec_obj = _build_codec(codec, weights, inputs)
    spec = MixSpec(texture_a=read_png(a_path), texture_b=read_png(b_path), ratio=ratio, mixing_mask=mask)
    extra = {"ratio": ratio, "mappings_computed": ["a_to_b", "b_to_a"]}
    _run("mix", cfg, codec_obj, inputs, out, lambda: synthesize_mixture(spec, cfg, codec_obj), extra=extra, threads=threads)


@main.command()
@click.option("--style", required=True, type=click.Path(dir_okay=False), help="Exemplar texture PNG.")
@click.option("--style-mask", required=True, type=click.Path(dir_okay=False), help="8-bit ID mask over the exemplar.")
@click.option("--target-mask", required=True, type=click.Path(dir_okay=False), help="8-bit ID mask over the output.")
@common_options
def paint(style, style_mask, target_mask, out, size, seed, passes, bins, use_pca, pca_threshold, min_pyramid, codec, weights, threads):
    """Paint-by-numbers synthesis guided by texture-ID masks."""
    style_path = _require_file(style, "style image")
    smask_path = _require_file(style_mask, "style mask")
    tmask_path = _require_file(target_mask, "target mask")
    tmask = read_mask_png(tmask_path)
    cfg = _make_config("texture", f"{tmask.shape[1]}x{tmask.shape[0]}", passes, bins, 0.0, use_pca, pca_threshold, min_pyramid, seed, codec)
    inputs = {"style": style_path, "style_mask": smask_path, "target_mask": tmask_path}
    codec_obj = _build_codec(codec, weights, inputs)
    masks = GuidanceMasks(style_mask=read_mask_png(smask_path), content_mask=tmask)
    try:
        masks.validate()
    except OtsynthError as exc:
        raise click.UsageError(str(exc)) from exc
    style_img = read_png(style_path)
    _run("paint", cfg, codec_obj, inputs, out, lambda: guided_synthesize(style_img, masks, cfg, codec_obj), threads=threads)


if __name__ == "__main__":
    main()
