"""End-to-end run: fetch, detect, write products locally or back to the origin."""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..fits import Card, FitsImage, read_fits_file, write_fits
from ..namespace import normalize_path
from .config import PipelineConfig
from .detect import FilamentCatalog, compute_threshold, disk_mask, extract_filaments
from .diffusion import diffuse, normalize_image

FITS_SUFFIXES = (".fits", ".fit", ".fts")


@dataclass
class RunReport:
    input: str
    products: dict[str, str]
    filament_count: int
    threshold: float
    timings: dict[str, float] = field(default_factory=dict)
    local_products: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "input": self.input,
            "products": self.products,
            "filament_count": self.filament_count,
            "threshold": self.threshold,
            "timings": self.timings,
        }


@dataclass
class Detection:
    normalized: np.ndarray
    diffused: np.ndarray
    mask: np.ndarray
    threshold: float
    catalog: FilamentCatalog


def product_stem(name: str) -> str:
    base = os.path.basename(name)
    for suffix in FITS_SUFFIXES:
        if base.lower().endswith(suffix):
            return base[: -len(suffix)]
    return base


def detect(image, cfg: PipelineConfig, timings: Optional[dict] = None) -> Detection:
    timings = {} if timings is None else timings

    def timed(name, fn, *args):
        t0 = time.perf_counter()
        out = fn(*args)
        timings[name] = time.perf_counter() - t0
        return out

    norm = timed("normalize", normalize_image, image)
    diffused = timed("diffuse", diffuse, norm, cfg)
    mask = timed("disk_mask", disk_mask, norm, cfg)
    threshold = timed("threshold", compute_threshold, diffused, mask, cfg)
    catalog = timed("extract", extract_filaments, diffused, mask, threshold, cfg, norm)
    return Detection(norm, diffused, mask, threshold, catalog)


def render_products(name: str, det: Detection, cfg: PipelineConfig) -> dict[str, bytes]:
    """Serialize the three products; output is a pure function of the inputs."""
    stem = product_stem(name)
    params = [Card("KAPPA", float(cfg.kappa)), Card("LAMBDA", float(cfg.lam)),
              Card("NITER", cfg.iterations), Card("CONDUCT", cfg.conduction)]
    diffused = FitsImage.from_array(det.diffused, params)
    labels = FitsImage.from_array(det.catalog.label_map,
                                  [Card("THRESH", float(det.threshold)),
                                   Card("NFILAM", len(det.catalog))])
    catalog = {
        "image": os.path.basename(name),
        "threshold": det.threshold,
        "config": cfg.to_dict(),
        "filaments": det.catalog.entries,
    }
    return {
        f"{stem}.diffused.fits": write_fits(diffused, -32),
        f"{stem}.labels.fits": write_fits(labels, 16),
        f"{stem}.catalog.json": (json.dumps(catalog, indent=2) + "\n").encode("utf-8"),
    }


def _write_atomic(path: str, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(prefix=".part-", dir=os.path.dirname(os.path.abspath(path)))
    with os.fdopen(fd, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


def run_pipeline(input_path, output_prefix, cfg: PipelineConfig = PipelineConfig(),
                 client=None, staging_dir: Optional[str] = None) -> RunReport:
    """Run detection on one image.

    With a ``client`` (a ``FedClient``) both ``input_path`` and
    ``output_prefix`` are federation paths: the input is fetched through the
    federation and the products are stored back at the origin. Without one
    they are a local file and a local directory. ``staging_dir`` keeps the
    locally rendered products of a federation run.
    """
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    with tempfile.TemporaryDirectory(prefix="filament-") as scratch:
        if client is not None:
            src = normalize_path(input_path)
            local_input = os.path.join(scratch, src.name)
            client.fetch(src, local_input)
            name = src.name
        else:
            local_input = os.fspath(input_path)
            name = os.path.basename(local_input)
        timings["fetch"] = time.perf_counter() - t0

        image = read_fits_file(local_input)
        det = detect(image, cfg, timings)
        products = render_products(name, det, cfg)

        local_dir = staging_dir or (scratch if client is not None else os.fspath(output_prefix))
        os.makedirs(local_dir, exist_ok=True)
        written: list[str] = []
        stored = []
        t1 = time.perf_counter()
        try:
            for fname, data in products.items():
                target = os.path.join(local_dir, fname)
                _write_atomic(target, data)
                written.append(target)
            if client is not None:
                prefix = normalize_path(output_prefix)
                for target in written:
                    dest = prefix.join(os.path.basename(target))
                    client.store(target, dest)
                    stored.append(dest)
        except BaseException:
            for target in written:
                if os.path.exists(target):
                    os.unlink(target)
            for dest in stored:
                try:
                    client.remove(dest)
                except Exception:
                    pass
            raise
        timings["write"] = time.perf_counter() - t1

    if client is not None:
        product_paths = {os.path.basename(t): str(d) for t, d in zip(written, stored)}
    else:
        product_paths = {os.path.basename(t): t for t in written}
    local = {os.path.basename(t): t for t in written} if staging_dir or client is None else {}
    timings["total"] = time.perf_counter() - t0
    return RunReport(str(input_path), product_paths, len(det.catalog), det.threshold,
                     timings, local)


def _config_from_args(args) -> PipelineConfig:
    return PipelineConfig(kappa=args.kappa, lam=args.lam, iterations=args.iters,
                          conduction=args.conduction, threshold_method=args.threshold,
                          k=args.k, disk_frac=args.disk_frac, min_area=args.min_area)


def main(argv=None) -> int:
    from ..fits import write_fits_file
    from .synth import make_disk, synthetic_fits

    parser = argparse.ArgumentParser(prog="filament", description="solar filament detection")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="detect filaments in one image")
    run.add_argument("--input", required=True)
    run.add_argument("--output", required=True)
    run.add_argument("--kappa", type=float, default=0.1)
    run.add_argument("--lambda", dest="lam", type=float, default=0.20)
    run.add_argument("--iters", type=int, default=10)
    run.add_argument("--conduction", choices=["exp", "rational"], default="exp")
    run.add_argument("--threshold", choices=["mad", "sigma"], default="mad")
    run.add_argument("--k", type=float)
    run.add_argument("--min-area", type=int, default=50)
    run.add_argument("--disk-frac", type=float, default=0.15)
    run.add_argument("--director", default=None,
                     help="treat --input/--output as federation paths served by this director")
    run.add_argument("--geo", help="client location 'lat,lon'")

    synth = sub.add_parser("synth", help="write a synthetic disk image with known filaments")
    synth.add_argument("--out", required=True)
    synth.add_argument("--filaments", type=int, default=3)
    synth.add_argument("--noise", type=float, default=0.0)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--size", type=int, default=256)

    args = parser.parse_args(argv)
    if args.command == "synth":
        disk = make_disk(size=args.size, n_filaments=args.filaments, noise=args.noise,
                         seed=args.seed)
        write_fits_file(args.out, synthetic_fits(disk), -64)
        truth = {"filaments": args.filaments, "areas": disk.areas}
        print(json.dumps(truth))
        return 0

    try:
        cfg = _config_from_args(args)
    except ValueError as exc:
        parser.error(str(exc))
    client = None
    if args.director:
        from ..client import FedClient
        from ..geo import GeoPoint

        geo = GeoPoint.parse(args.geo) if args.geo else None
        client = FedClient(args.director, client_geo=geo, client_name="filament")
    report = run_pipeline(args.input, args.output, cfg, client=client)
    print(json.dumps(report.to_dict(), indent=2))
    return 0


if __name__ == "__main__":
    sys.exit(main())
