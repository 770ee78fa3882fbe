import json
import os

import numpy as np
import pytest

from solarfed.client import FedClient, FetchPlan
from solarfed.fits import FitsError, read_fits_file, write_fits, write_fits_file
from solarfed.filament import PipelineConfig, make_disk
from solarfed.filament.pipeline import main, product_stem, run_pipeline
from solarfed.filament.synth import synthetic_fits
from solarfed.geo import GeoPoint

from conftest import seed_file

PRODUCTS = {"img.diffused.fits", "img.labels.fits", "img.catalog.json"}


def matched_areas(catalog, truth_blobs):
    """Area of the catalog entry covering each ground-truth blob's centre."""
    out = []
    for blob in truth_blobs:
        r, c = np.argwhere(blob).mean(axis=0).round().astype(int)
        lab = catalog["label_map"][r, c]
        out.append(next(e["area_px"] for e in catalog["entries"] if e["label"] == lab) if lab else 0)
    return out


def run_local(tmp_path, syn, cfg=PipelineConfig()):
    src = tmp_path / "img.fits"
    write_fits_file(src, synthetic_fits(syn), -64)
    out = tmp_path / "out"
    report = run_pipeline(src, out, cfg)
    labels = read_fits_file(out / "img.labels.fits").pixels.astype(int)
    cat = json.loads((out / "img.catalog.json").read_text())
    return report, {"label_map": labels, "entries": cat["filaments"]}, cat


def test_product_stem():
    assert product_stem("/bbso/raw/img1.fits") == "img1"
    assert product_stem("x.FTS") == "x"
    assert product_stem("data.bin") == "data.bin"


@pytest.mark.parametrize("seed", [0, 1])
def test_noiseless_recovery_exact(tmp_path, seed):
    syn = make_disk(seed=seed)
    report, cat, raw = run_local(tmp_path, syn)
    assert report.filament_count == 3
    assert set(report.products) == PRODUCTS
    assert matched_areas(cat, syn.filaments) == syn.areas
    assert raw["config"] == PipelineConfig().to_dict()
    assert raw["image"] == "img.fits" and raw["threshold"] == report.threshold


def test_noisy_recovery_within_tolerance(tmp_path):
    syn = make_disk(seed=4, noise=0.02)
    report, cat, _ = run_local(tmp_path, syn)
    assert report.filament_count == 3
    for got, want in zip(matched_areas(cat, syn.filaments), syn.areas):
        assert abs(got - want) <= 0.15 * want


def test_products_are_deterministic(tmp_path):
    syn = make_disk(seed=2)
    for sub in ("a", "b"):
        (tmp_path / sub).mkdir()
        run_local(tmp_path / sub, syn)
    for name in PRODUCTS:
        assert (tmp_path / "a/out" / name).read_bytes() == (tmp_path / "b/out" / name).read_bytes()
    diffused = read_fits_file(tmp_path / "a/out/img.diffused.fits")
    assert diffused.header.get("BITPIX") == -32
    assert read_fits_file(tmp_path / "a/out/img.labels.fits").header.get("BITPIX") == 16


def test_bad_input_leaves_no_products(tmp_path):
    src = tmp_path / "broken.fits"
    src.write_bytes(b"garbage" * 100)
    with pytest.raises(FitsError):
        run_pipeline(src, tmp_path / "out", PipelineConfig())
    assert not (tmp_path / "out").exists() or os.listdir(tmp_path / "out") == []


def test_cli_synth_and_run(tmp_path, capsys):
    assert main(["synth", "--out", str(tmp_path / "s.fits"), "--filaments", "2",
                 "--noise", "0", "--seed", "3", "--size", "200"]) == 0
    truth = json.loads(capsys.readouterr().out)
    assert truth["filaments"] == 2 and len(truth["areas"]) == 2
    assert main(["run", "--input", str(tmp_path / "s.fits"), "--output", str(tmp_path / "o"),
                 "--iters", "5", "--conduction", "rational", "--min-area", "30"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["filament_count"] == 2
    cat = json.loads((tmp_path / "o/s.catalog.json").read_text())
    assert cat["config"]["iterations"] == 5 and cat["config"]["conduction"] == "rational"
    assert sorted(e["area_px"] for e in cat["filaments"]) == sorted(truth["areas"])
    with pytest.raises(SystemExit):
        main(["run", "--input", "x", "--output", "y", "--lambda", "0.3"])


def test_federation_round_trip(stack, tmp_path):
    d = stack.director()
    o = stack.origin(d.url, lat=40, lon=-100)
    c1 = stack.cache(d.url, name="near", lat=0, lon=1)
    c2 = stack.cache(d.url, name="far", lat=30, lon=60)
    seed_file(o.root, "raw/img.fits", write_fits(synthetic_fits(make_disk(seed=1)), -64))

    client = FedClient(d.url, client_geo=GeoPoint(0, 0), client_name="pipe")
    staging = tmp_path / "staging"
    report = run_pipeline("/bbso/raw/img.fits", "/bbso/processed", client=client,
                          staging_dir=str(staging))
    assert report.filament_count == 3
    assert report.products["img.catalog.json"] == "/bbso/processed/img.catalog.json"
    assert os.path.exists(os.path.join(o.root, "processed", "img.labels.fits"))

    for name, path in report.products.items():
        dest = tmp_path / ("via-far-" + name)
        client.fetch_plan(FetchPlan([c2.url + "/data" + path]), dest)
        assert dest.read_bytes() == (staging / name).read_bytes()


class FlakyClient:
    """Delegates to a real client but fails the second store."""

    def __init__(self, inner):
        self.inner, self.stores, self.removed = inner, 0, []

    def fetch(self, *a, **kw):
        return self.inner.fetch(*a, **kw)

    def store(self, src, path):
        self.stores += 1
        if self.stores == 2:
            raise ConnectionError("origin went away")
        return self.inner.store(src, path)

    def remove(self, path):
        self.removed.append(str(path))
        return self.inner.remove(path)


def test_federation_partial_writeback_rolled_back(stack):
    d = stack.director()
    o = stack.origin(d.url)
    seed_file(o.root, "raw/img.fits", write_fits(synthetic_fits(make_disk(seed=0, size=160, radius=60)), -64))
    flaky = FlakyClient(FedClient(d.url))
    with pytest.raises(ConnectionError):
        run_pipeline("/bbso/raw/img.fits", "/bbso/processed", client=flaky)
    assert len(flaky.removed) == 1
    leftover = os.listdir(os.path.join(o.root, "processed")) if os.path.isdir(
        os.path.join(o.root, "processed")) else []
    assert leftover == []
