"""Depth losses against brute-force oracles, alignment, colorization, I/O."""

import math

import numpy as np
import pytest

from usvsim import depth

# ------------------------------------------------- brute-force oracles


def mae_oracle(a, b):
    h, w = a.shape
    total = 0.0
    for i in range(h):
        for j in range(w):
            total += abs(a[i, j] - b[i, j])
    return total / (w * h)


def cutmix_oracle(pred, pa, pb, mask):
    h, w = pred.shape
    total = 0.0
    for i in range(h):
        for j in range(w):
            src = pa if mask[i, j] else pb
            total += abs(pred[i, j] - src[i, j])
    return total / (w * h)


def align_oracle(f, g, alpha):
    n, k = f.shape
    total = 0.0
    for i in range(n):
        dot = sum(f[i, j] * g[i, j] for j in range(k))
        na = math.sqrt(sum(f[i, j] ** 2 for j in range(k)))
        nb = math.sqrt(sum(g[i, j] ** 2 for j in range(k)))
        total += max(0.0, alpha - dot / (na * nb))
    return total / n


def rng():
    return np.random.default_rng(777)


# ----------------------------------------------------------- loss values

def test_labeled_loss_worked_example():
    pred = np.array([[1.0, 2.0], [3.0, 4.0]])
    gt = np.array([[1.0, 1.0], [3.0, 3.0]])
    assert depth.labeled_loss(pred, gt) == pytest.approx(0.5)


def test_labeled_loss_zero_iff_equal():
    a = rng().uniform(0, 5, (4, 4))
    assert depth.labeled_loss(a, a) == 0.0
    b = a.copy()
    b[2, 3] += 0.1
    assert depth.labeled_loss(a, b) > 0.0


def test_labeled_loss_constant_offset():
    r = rng()
    gt = r.uniform(0, 1, (5, 5))
    pred = gt + 0.37  # pred >= gt everywhere
    assert depth.labeled_loss(pred, gt) == pytest.approx(0.37)


def test_labeled_loss_metric_properties():
    r = rng()
    for _ in range(50):
        a, b, c = (r.uniform(0, 3, (4, 5)) for _ in range(3))
        ab = depth.labeled_loss(a, b)
        assert ab == pytest.approx(depth.labeled_loss(b, a))  # symmetry
        assert ab <= depth.labeled_loss(a, c) + depth.labeled_loss(c, b) + 1e-12


def test_losses_match_brute_force_oracles():
    r = rng()
    for _ in range(100):
        h, w = int(r.integers(1, 9)), int(r.integers(1, 9))
        a = r.uniform(0, 4, (h, w))
        b = r.uniform(0, 4, (h, w))
        c = r.uniform(0, 4, (h, w))
        mask = r.random((h, w)) < 0.5
        assert depth.labeled_loss(a, b) == pytest.approx(mae_oracle(a, b), abs=1e-12)
        assert depth.pseudo_loss(a, b) == pytest.approx(mae_oracle(a, b), abs=1e-12)
        assert depth.cutmix_loss(a, b, c, mask) == \
            pytest.approx(cutmix_oracle(a, b, c, mask), abs=1e-12)
        n, k = int(r.integers(1, 17)), int(r.integers(1, 9))
        f = r.uniform(-2, 2, (n, k)) + 0.05
        g = r.uniform(-2, 2, (n, k)) + 0.05
        alpha = float(r.uniform(-1, 1))
        assert depth.align_loss(f, g, alpha) == \
            pytest.approx(align_oracle(f, g, alpha), abs=1e-12)


def test_pseudo_equals_labeled_on_same_inputs():
    r = rng()
    a, b = r.uniform(0, 1, (3, 3)), r.uniform(0, 1, (3, 3))
    assert depth.pseudo_loss(a, b) == depth.labeled_loss(a, b)


def test_cutmix_degenerate_masks():
    r = rng()
    p, a, b = (r.uniform(0, 1, (4, 4)) for _ in range(3))
    all_true = np.ones((4, 4), dtype=bool)
    assert depth.cutmix_loss(p, a, b, all_true) == \
        pytest.approx(depth.pseudo_loss(p, a))
    # pred stitched from the sources scores zero
    mask = r.random((4, 4)) < 0.5
    stitched = np.where(mask, a, b)
    assert depth.cutmix_loss(stitched, a, b, mask) == 0.0


def test_cutmix_mask_complement_symmetry():
    r = rng()
    for _ in range(20):
        p, a, b = (r.uniform(0, 2, (3, 5)) for _ in range(3))
        mask = r.random((3, 5)) < 0.4
        assert depth.cutmix_loss(p, a, b, mask) == \
            pytest.approx(depth.cutmix_loss(p, b, a, ~mask), abs=1e-12)


def test_unlabeled_loss():
    assert depth.unlabeled_loss(0.0, 0.0) == 0.0
    assert depth.unlabeled_loss(0.2, 0.3) == pytest.approx(0.5)
    with pytest.raises(depth.DepthError):
        depth.unlabeled_loss(-0.1, 0.0)
    r = rng()
    p, a, b = (r.uniform(0, 1, (3, 3)) for _ in range(3))
    mask = r.random((3, 3)) < 0.5
    assert depth.unlabeled_loss(depth.pseudo_loss(p, a),
                                depth.cutmix_loss(p, a, b, mask)) == \
        pytest.approx(depth.pseudo_loss(p, a) + depth.cutmix_loss(p, a, b, mask))


def test_align_loss_examples():
    eye = np.array([[1.0, 0.0], [0.0, 1.0]])
    assert depth.align_loss(eye, eye, 1.0) == pytest.approx(0.0)  # cos = 1
    orth = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert depth.align_loss(eye, orth, 0.5) == pytest.approx(0.5)  # cos = 0
    anti = -eye
    assert depth.align_loss(eye, anti, 0.0) == pytest.approx(1.0)  # cos = -1


def test_align_loss_nondecreasing_in_alpha():
    r = rng()
    f = r.uniform(-1, 1, (8, 4)) + 0.05
    g = r.uniform(-1, 1, (8, 4)) + 0.05
    values = [depth.align_loss(f, g, a) for a in np.linspace(-1, 1, 21)]
    assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))


def test_align_loss_zero_norm_rejected():
    f = np.array([[0.0, 0.0]])
    with pytest.raises(depth.DepthError):
        depth.align_loss(f, np.array([[1.0, 0.0]]), 0.5)


def test_total_loss():
    w = depth.LossWeights(lam=0.5, alpha=0.5)
    assert depth.total_loss(0.0, 0.0, 0.0, w) == 0.0
    assert depth.total_loss(1.0, 2.0, 3.0, w) == pytest.approx(4.5)
    assert depth.total_loss(1.0, 2.0, 3.0, depth.LossWeights(lam=0.0)) == \
        pytest.approx(3.0)
    with pytest.raises(depth.DepthError):
        depth.total_loss(-1.0, 0.0, 0.0, w)
    with pytest.raises(depth.DepthError):
        depth.total_loss(0.0, 0.0, 0.0, depth.LossWeights(lam=-1.0))


def test_dimension_mismatch_rejected():
    with pytest.raises(depth.DepthError):
        depth.labeled_loss(np.zeros((2, 2)), np.zeros((2, 3)))
    with pytest.raises(depth.DepthError):
        depth.cutmix_loss(np.zeros((2, 2)), np.zeros((2, 2)),
                          np.zeros((2, 2)), np.zeros((3, 3), dtype=bool))


# ------------------------------------------------------------ preprocess

def test_preprocess_identity():
    arr = np.array([[0.0, 0.5], [0.75, 1.0]])
    out = depth.preprocess(arr, 2, 2)
    np.testing.assert_allclose(out.values, arr)


def test_preprocess_constant_map_zeroes():
    out = depth.preprocess(np.full((3, 3), 7.0), 3, 3)
    np.testing.assert_array_equal(out.values, np.zeros((3, 3)))


def test_preprocess_downsample_to_single_pixel():
    # bilinear at the center of [0,2;4,8] averages to 3.5, then a 1x1
    # map is constant and normalizes to zero
    arr = np.array([[0.0, 2.0], [4.0, 8.0]])
    resized = depth._K.bilinear_resize(arr, 1, 1)
    assert resized[0, 0] == pytest.approx(3.5)
    out = depth.preprocess(arr, 1, 1)
    assert out.values[0, 0] == 0.0


def test_preprocess_crop():
    arr = np.arange(16, dtype=float).reshape(4, 4)
    out = depth.preprocess(arr, 2, 2, crop=(1, 1, 2, 2))
    inner = arr[1:3, 1:3]
    expected = (inner - inner.min()) / (inner.max() - inner.min())
    np.testing.assert_allclose(out.values, expected)


def test_preprocess_crop_out_of_bounds():
    with pytest.raises(depth.DepthError):
        depth.preprocess(np.zeros((4, 4)), 2, 2, crop=(3, 3, 2, 2))


def test_preprocess_upsample_shape():
    out = depth.preprocess(np.random.default_rng(0).uniform(0, 1, (3, 4)), 9, 7)
    assert (out.height, out.width) == (7, 9)
    assert out.values.min() == 0.0 and out.values.max() == 1.0


# ------------------------------------------------------------ fit_affine

def test_fit_affine_exact_recovery():
    r = rng()
    pred = r.uniform(0, 1, (6, 6))
    ref = 2.0 * pred + 3.0
    fit = depth.fit_affine(pred, ref)
    assert fit.scale == pytest.approx(2.0, abs=1e-9)
    assert fit.shift == pytest.approx(3.0, abs=1e-9)
    assert depth.labeled_loss(fit.apply(pred), ref) < 1e-9


def test_fit_affine_identity():
    pred = rng().uniform(0, 1, (4, 4))
    fit = depth.fit_affine(pred, pred)
    assert fit.scale == pytest.approx(1.0)
    assert fit.shift == pytest.approx(0.0, abs=1e-12)


def test_fit_affine_zero_variance_error():
    with pytest.raises(depth.DepthError):
        depth.fit_affine(np.full((3, 3), 1.0), rng().uniform(0, 1, (3, 3)))


def test_fit_affine_beats_identity_fit():
    r = rng()
    for _ in range(50):
        pred = r.uniform(0, 2, (5, 5))
        ref = r.uniform(0, 2, (5, 5))
        fit = depth.fit_affine(pred, ref)
        res_fit = float(((fit.apply(pred) - ref) ** 2).sum())
        res_id = float(((pred - ref) ** 2).sum())
        assert res_fit <= res_id + 1e-12


def test_fit_affine_negative_scale_allowed():
    pred = rng().uniform(0, 1, (4, 4))
    fit = depth.fit_affine(pred, -1.5 * pred + 4.0)
    assert fit.scale == pytest.approx(-1.5, abs=1e-9)


# ------------------------------------------------------------- colorize

def test_colorize_endpoints():
    table = depth.load_gradient()
    rgb = depth.colorize(np.array([[0.0, 1.0]]))
    np.testing.assert_array_equal(rgb[0, 0], table[0])
    np.testing.assert_array_equal(rgb[0, 1], table[255])
    # warm near, cool far
    assert int(table[0][0]) > int(table[0][2])
    assert int(table[255][2]) > int(table[255][0])


def test_colorize_constant_renders_warm():
    table = depth.load_gradient()
    rgb = depth.colorize(np.full((2, 3), 5.0))
    assert (rgb == table[0]).all()


def test_colorize_midpoint_index():
    table = depth.load_gradient()
    rgb = depth.colorize(np.array([[0.0, 0.5, 1.0]]))
    np.testing.assert_array_equal(rgb[0, 1], table[128])  # round(0.5*255)


def test_colorize_affine_invariance():
    r = rng()
    base = r.uniform(0, 1, (6, 7))
    rgb1 = depth.colorize(base)
    rgb2 = depth.colorize(3.7 * base + 11.0)
    np.testing.assert_array_equal(rgb1, rgb2)


def test_gradient_table_shape():
    table = depth.load_gradient()
    assert table.shape == (256, 3)
    assert table.dtype == np.uint8


# ------------------------------------------------------------- file I/O

def test_pgm16_roundtrip(tmp_path):
    r = rng()
    arr = np.round(r.uniform(0, 1, (5, 7)) * 65535) / 65535
    p = tmp_path / "m.pgm"
    depth.write_pgm16(p, arr)
    again = depth.read_pgm16(p)
    np.testing.assert_allclose(again.values, arr, atol=1e-12)


def test_pgm16_header_validation(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P5\n2 2\n255\n\x00\x01\x02\x03")
    with pytest.raises(depth.DepthError):
        depth.read_pgm16(p)  # 8-bit maxval rejected
    p.write_bytes(b"P6\n2 2\n65535\n")
    with pytest.raises(depth.DepthError):
        depth.read_pgm16(p)


def test_pgm16_truncated(tmp_path):
    p = tmp_path / "t.pgm"
    p.write_bytes(b"P5\n4 4\n65535\n\x00\x01")
    with pytest.raises(depth.DepthError):
        depth.read_pgm16(p)


def test_text_grid_roundtrip(tmp_path):
    arr = rng().uniform(0, 9, (3, 4))
    p = tmp_path / "g.txt"
    depth.write_text_grid(p, arr)
    again = depth.read_text_grid(p)
    np.testing.assert_array_equal(again.values, arr)
    assert p.read_text().split()[:2] == ["4", "3"]  # header is W H


def test_text_grid_count_mismatch(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("2 2\n1 2 3\n")
    with pytest.raises(depth.DepthError):
        depth.read_text_grid(p)


def test_features_roundtrip(tmp_path):
    feats = rng().uniform(-1, 1, (4, 3))
    p = tmp_path / "f.txt"
    depth.write_features(p, feats)
    np.testing.assert_array_equal(depth.read_features(p), feats)


def test_ppm_writer(tmp_path):
    rgb = np.zeros((2, 2, 3), dtype=np.uint8)
    rgb[0, 0] = (255, 1, 2)
    p = tmp_path / "img.ppm"
    depth.write_ppm(p, rgb)
    data = p.read_bytes()
    assert data.startswith(b"P6\n2 2\n255\n")
    assert data[len(b"P6\n2 2\n255\n"):] == rgb.tobytes()


def test_depthmap_validation():
    with pytest.raises(depth.DepthError):
        depth.DepthMap(np.array([[1.0, -0.5]]))
    with pytest.raises(depth.DepthError):
        depth.DepthMap(np.array([[math.nan]]))
    with pytest.raises(depth.DepthError):
        depth.DepthMap(np.zeros((0, 3)))
