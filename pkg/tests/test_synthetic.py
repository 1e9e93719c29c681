import json

import numpy as np
import pytest
from scipy import ndimage

from wsrank.barcode import read_barcode
from wsrank.homology import h0_superlevel
from wsrank.synthetic import (CANVAS, HIGH_BLOCK, NOISE_BLOCK, NOISE_INTENSITY, gen_dataset1, gen_dataset2, generate,
                              image_barcodes, load_manifest, read_pgm, to_dataset, write_dataset, write_pgm)


def blocks(img):
    """Connected nonzero regions and their sizes."""
    labels, n = ndimage.label(img > 0)
    return labels, np.bincount(labels.ravel())[1:]


class TestGeneration:
    def test_deterministic(self):
        a, b = gen_dataset1(3, 5), gen_dataset1(3, 5)
        assert all(x.pixels.tobytes() == y.pixels.tobytes() for x, y in zip(a, b))
        assert [x.id for x in a] == ["A000", "A001", "A002", "B000", "B001", "B002"]

    def test_seed_changes_output(self):
        assert gen_dataset2(1, 1)[0].pixels.tobytes() != gen_dataset2(1, 2)[0].pixels.tobytes()

    def test_prefix_stable(self):
        small, big = generate(2, 2, 9), generate(2, 4, 9)
        assert small[0].pixels.tobytes() == big[0].pixels.tobytes()
        assert small[2].pixels.tobytes() == big[4].pixels.tobytes()

    def test_dataset1_ranges(self):
        for im in gen_dataset1(10, 7):
            lo, hi = (245, 255) if im.label == "A" else (200, 210)
            assert lo <= im.pixels.max() <= hi
            assert 50 <= im.n_noise <= 100

    def test_dataset2_counts(self):
        for im in gen_dataset2(10, 7):
            lo, hi = (20, 30) if im.label == "A" else (120, 130)
            assert lo <= im.n_noise <= hi
            assert im.high_intensity == (100, 255)

    def test_geometry(self):
        for im in generate(2, 3, 3):
            img = im.pixels
            assert img.shape == (CANVAS, CANVAS)
            labels, sizes = blocks(img)
            # one high block and the noise blocks, none touching
            assert len(sizes) == 1 + im.n_noise
            assert sorted(sizes.tolist()) == [NOISE_BLOCK ** 2] * im.n_noise + [HIGH_BLOCK ** 2]
            for k, size in enumerate(sizes, start=1):
                vals = np.unique(img[labels == k])
                if size == NOISE_BLOCK ** 2:
                    assert len(vals) == 1
                    assert NOISE_INTENSITY[0] <= vals[0] <= NOISE_INTENSITY[1]
                else:
                    assert vals.min() >= 100

    def test_barcode_shape(self):
        im = generate(1, 1, 0)[0]
        X = h0_superlevel(im.pixels)
        # one bar per block ends at the background; the rest are local maxima inside the high block
        assert sum(b.death == 255 for b in X) == 1 + im.n_noise
        inner = [b for b in X if b.death < 255]
        assert all(b.birth >= 0 and b.death <= 255 - 245 for b in inner)
        assert min(b.birth for b in X) == 255 - im.pixels.max()

    def test_invalid(self):
        with pytest.raises(ValueError):
            generate(3, 1, 0)
        with pytest.raises(ValueError):
            generate(1, 0, 0)

    def test_process_pool_matches_serial(self):
        images = [im.pixels for im in generate(1, 2, 4)]
        assert image_barcodes(images, jobs=2) == image_barcodes(images)


class TestFormats:
    def test_pgm_round_trip(self, tmp_path):
        img = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
        write_pgm(tmp_path / "x.pgm", img)
        assert np.array_equal(read_pgm(tmp_path / "x.pgm"), img)

    def test_pgm_header_comments(self, tmp_path):
        (tmp_path / "c.pgm").write_bytes(b"P5\n# made by hand\n2 1\n255\n\x07\x09")
        assert read_pgm(tmp_path / "c.pgm").tolist() == [[7, 9]]

    def test_pgm_errors(self, tmp_path):
        (tmp_path / "a.pgm").write_bytes(b"P2\n1 1\n255\n0")
        with pytest.raises(ValueError):
            read_pgm(tmp_path / "a.pgm")
        (tmp_path / "b.pgm").write_bytes(b"P5\n2 2\n255\n\x00")
        with pytest.raises(ValueError):
            read_pgm(tmp_path / "b.pgm")
        with pytest.raises(ValueError):
            write_pgm(tmp_path / "c.pgm", np.full((2, 2), 300))

    def test_manifest_round_trip(self, tmp_path):
        images = generate(2, 2, 1)
        path = write_dataset(images, tmp_path, dataset=2, seed=1)
        manifest = json.loads(path.read_text())
        assert manifest["dataset"] == 2 and manifest["seed"] == 1 and manifest["n_per_class"] == 2
        assert [s["id"] for s in manifest["samples"]] == [im.id for im in images]
        loaded = load_manifest(path)
        direct = to_dataset(images)
        assert loaded == direct
        for s, im in zip(manifest["samples"], images):
            assert np.array_equal(read_pgm(tmp_path / s["image"]), im.pixels)
            assert read_barcode(tmp_path / s["barcode"]) == h0_superlevel(im.pixels)

    def test_manifest_from_images_only(self, tmp_path):
        images = generate(1, 1, 2)
        path = write_dataset(images, tmp_path, dataset=1, seed=2)
        manifest = json.loads(path.read_text())
        for s in manifest["samples"]:
            del s["barcode"]
        path.write_text(json.dumps(manifest))
        assert load_manifest(path) == to_dataset(images)
