import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from numpy.lib.stride_tricks import sliding_window_view

from corruptkit import corrupt
from corruptkit.corrupt import (
    CorruptionSpec,
    SeverityGrid,
    apply_spec,
    blur,
    builtin_grid,
    gamma,
    gaussian_kernel,
    gaussian_noise,
    jpeg_round_trip,
    linear_adjust,
    parse_spec,
    poisson_gaussian_noise,
    resize_degrade,
)
from corruptkit.exceptions import ParameterError
from corruptkit.imgcore import derive_rng, psnr

images = arrays(np.uint8, st.tuples(st.integers(4, 20), st.integers(4, 20), st.just(3)))


def const(v, h=32, w=32):
    return np.full((h, w, 3), v, np.uint8)


def rng(stage="t", item="img"):
    return derive_rng(7, item, stage)


# --------------------------------------------------------------------- noise

def test_gaussian_noise_zero_sigma_identity(random_image):
    img = random_image()
    assert np.array_equal(gaussian_noise(img, 0, rng()), img)


def test_gaussian_noise_stddev():
    out = gaussian_noise(const(128, 256, 256), 30, rng())
    assert 28.5 <= out.astype(float).std() <= 31.5


def test_gaussian_noise_clipping_bias():
    out = gaussian_noise(const(0, 256, 256), 30, rng())
    assert out.astype(float).mean() > 0


def test_gaussian_noise_negative_sigma():
    with pytest.raises(ParameterError):
        gaussian_noise(const(0), -1, rng())


def test_gaussian_noise_formula_against_stream(random_image):
    img = random_image(8, 8)
    out = gaussian_noise(img, 12.5, rng())
    draws = rng().generator.standard_normal(img.shape) * 12.5
    expected = np.clip(np.floor(img + draws + 0.5), 0, 255).astype(np.uint8)
    assert np.array_equal(out, expected)


def test_poisson_gaussian_zero_identity(random_image):
    img = random_image()
    assert np.array_equal(poisson_gaussian_noise(img, 0, 0, rng()), img)


def test_poisson_gaussian_reduces_to_gaussian():
    img = const(128, 256, 256)
    pg = poisson_gaussian_noise(img, 0, (30 / 255) ** 2, rng("pg")).astype(float).std()
    gn = gaussian_noise(img, 30, rng("gn")).astype(float).std()
    assert abs(pg - gn) / gn < 0.05


def test_poisson_gaussian_signal_dependence():
    bright = poisson_gaussian_noise(const(255, 256, 256), 0.01, 1e-4, rng("b"))
    dark = poisson_gaussian_noise(const(26, 256, 256), 0.01, 1e-4, rng("d"))
    assert bright.astype(float).std() > dark.astype(float).std()


@pytest.mark.parametrize("a,b", [(-0.1, 0), (0, -1e-3)])
def test_poisson_gaussian_bad_params(a, b):
    with pytest.raises(ParameterError):
        poisson_gaussian_noise(const(0), a, b, rng())


# --------------------------------------------------------------------- blur

def _reflect101_pad(img, r):
    return np.pad(img, ((r, r), (r, r), (0, 0)), mode="reflect")


def _conv_oracle(img, kernel2d):
    k = kernel2d.shape[0]
    r = k // 2
    padded = _reflect101_pad(img.astype(np.float64), r)
    win = sliding_window_view(padded, (k, k), axis=(0, 1))  # H, W, C, k, k
    return np.einsum("hwcij,ij->hwc", win, kernel2d)


@pytest.mark.parametrize("flt", ["gaussian", "average", "median"])
@pytest.mark.parametrize("k", [3, 7, 11, 31])
def test_blur_constant_fixed_point(flt, k):
    for v in (0, 1, 127, 254, 255):
        img = const(v, 17, 23)
        assert np.array_equal(blur(img, flt, k), img)


def test_average_blur_single_pixel():
    img = np.zeros((11, 11, 3), np.uint8)
    img[5, 5] = 255
    out = blur(img, "average", 3)
    expected = np.zeros_like(img)
    expected[4:7, 4:7] = round(255 / 9)
    assert round(255 / 9) == 28
    assert np.array_equal(out, expected)


def test_gaussian_kernel_normalised():
    for k in (3, 5, 11, 31):
        g = gaussian_kernel(k)
        assert g.shape == (k, k)
        assert abs(g.sum() - 1.0) < 1e-9
    assert corrupt.gaussian_sigma(3) == pytest.approx(0.8)


@pytest.mark.parametrize("flt", ["gaussian", "average"])
@pytest.mark.parametrize("k", [3, 5, 9])
def test_linear_blur_matches_direct_convolution(flt, k, random_image):
    img = random_image(13, 19, seed=k)
    kern = gaussian_kernel(k) if flt == "gaussian" else np.full((k, k), 1.0 / k**2)
    ref = _conv_oracle(img, kern)
    out = blur(img, flt, k).astype(np.float64)
    frac = ref - np.floor(ref)
    safe = np.abs(frac - 0.5) > 1e-6  # rounding is ambiguous only at exact halves
    assert np.array_equal(out[safe], np.clip(np.floor(ref[safe] + 0.5), 0, 255))


@pytest.mark.parametrize("k", [3, 5])
def test_median_matches_bruteforce(k, random_image):
    img = random_image(12, 9, seed=k)
    r = k // 2
    win = sliding_window_view(_reflect101_pad(img, r), (k, k), axis=(0, 1))
    ref = np.median(win.reshape(*img.shape, k * k), axis=-1)
    assert np.array_equal(blur(img, "median", k), ref.astype(np.uint8))


@pytest.mark.parametrize("k", [2, 4, 1, 33, 3.5, "3"])
def test_blur_bad_kernel(k):
    with pytest.raises(ParameterError):
        blur(const(0), "gaussian", k)


def test_blur_bad_filter():
    with pytest.raises(ParameterError):
        blur(const(0), "box", 3)


# --------------------------------------------------------------------- jpeg

def test_jpeg_q95_psnr(natural_image):
    assert psnr(natural_image, jpeg_round_trip(natural_image, 95)) >= 35.0


def test_jpeg_psnr_monotone(natural_image):
    p = [psnr(natural_image, jpeg_round_trip(natural_image, q)) for q in (95, 60, 30)]
    assert p[0] > p[1] > p[2]


def test_jpeg_constant_gray():
    # q >= 20 keeps the DC quantisation step small enough for the <= 2 bound
    for q in range(20, 101, 5):
        for v in range(256):
            out = jpeg_round_trip(const(v, 16, 16), q).astype(int)
            assert np.abs(out - v).max() <= 2, (q, v)


@pytest.mark.parametrize("q", [0, 101])
def test_jpeg_bad_quality(q):
    with pytest.raises(ParameterError):
        jpeg_round_trip(const(0), q)


def test_jpeg_preserves_odd_dimensions(random_image):
    img = random_image(13, 21)
    assert jpeg_round_trip(img, 50).shape == img.shape


# --------------------------------------------------------------------- resize

@pytest.mark.parametrize("f", [2, 4, 8, 16])
def test_resize_constant_identity(f):
    for v in (0, 3, 128, 255):
        img = const(v, 37, 50)
        assert np.array_equal(resize_degrade(img, f), img)


def test_resize_psnr_monotone(natural_image):
    p = [psnr(natural_image, resize_degrade(natural_image, f)) for f in (4, 8, 16)]
    assert p[0] > p[1] > p[2]


def test_resize_checker_blocks():
    img = np.zeros((16, 16, 3), np.uint8)
    idx = np.arange(16) // 8
    img[((idx[:, None] + idx[None, :]) % 2) == 1] = 255
    out = resize_degrade(img, 2)
    # box down-sampling is exact on uniform 2x2 cells, so every pixel whose
    # bilinear neighbourhood lies inside one block comes back unchanged
    interior = np.ones(16, bool)
    interior[[7, 8]] = False
    mask = interior[:, None] & interior[None, :]
    assert np.array_equal(out[mask], img[mask])
    # pixels touching a block edge are interpolated between 0 and 255
    assert (out[~mask] != img[~mask]).any()


def test_resize_errors():
    with pytest.raises(ParameterError):
        resize_degrade(const(0, 7, 40), 8)
    with pytest.raises(ParameterError):
        resize_degrade(const(0), 3)


# --------------------------------------------------------------------- enhancement

def test_gamma_identity_and_endpoints(random_image):
    img = random_image()
    assert np.array_equal(gamma(img, 1), img)
    ends = np.array([[[0, 255, 0]]], np.uint8)
    for g in (0.1, 0.75, 2.5, 10):
        assert np.array_equal(gamma(ends, g), ends)


def test_gamma_value():
    assert 255 * (128 / 255) ** 2.5 == pytest.approx(45.52, abs=0.01)
    assert gamma(const(128, 1, 1), 2.5)[0, 0, 0] == 46


@pytest.mark.parametrize("g", [0, -1])
def test_gamma_bad(g):
    with pytest.raises(ParameterError):
        gamma(const(1), g)


def test_linear_adjust(random_image):
    img = random_image()
    assert np.array_equal(linear_adjust(img, 1, 0), img)
    assert linear_adjust(const(100, 1, 1), 1.2, 10)[0, 0, 0] == 130
    assert linear_adjust(const(200, 1, 1), 2, 0)[0, 0, 0] == 255
    with pytest.raises(ParameterError):
        linear_adjust(img, 0, 0)


# --------------------------------------------------------------------- properties

_DETERMINISTIC = [
    lambda x: blur(x, "gaussian", 5),
    lambda x: blur(x, "average", 3),
    lambda x: blur(x, "median", 3),
    lambda x: gamma(x, 0.75),
    lambda x: linear_adjust(x, 1.5, -20),
    lambda x: resize_degrade(x, 4),
    lambda x: jpeg_round_trip(x, 60),
]


@settings(max_examples=25, deadline=None)
@given(images)
def test_operators_preserve_shape_and_input(img):
    before = img.copy()
    for op in _DETERMINISTIC:
        out = op(img)
        assert out.shape == img.shape and out.dtype == np.uint8
    assert np.array_equal(img, before)


@settings(max_examples=25, deadline=None)
@given(images, st.integers(0, 2**32))
def test_stochastic_ops_are_pure_in_provenance(img, seed):
    a = gaussian_noise(img, 10, derive_rng(seed, "i", "s"))
    b = gaussian_noise(img, 10, derive_rng(seed, "i", "s"))
    assert np.array_equal(a, b)
    c = poisson_gaussian_noise(img, 0.01, 1e-4, derive_rng(seed, "i", "s"))
    d = poisson_gaussian_noise(img, 0.01, 1e-4, derive_rng(seed, "i", "s"))
    assert np.array_equal(c, d)


def test_deterministic_specs_ignore_rng(random_image):
    img = random_image()
    for spec in builtin_grid():
        if spec.is_stochastic:
            continue
        a = apply_spec(img, spec, derive_rng(1, "a", "x"))
        b = apply_spec(img, spec, derive_rng(2, "b", "y"))
        assert np.array_equal(a, b), spec.label


# --------------------------------------------------------------------- specs

def test_spec_validation():
    with pytest.raises(ParameterError):
        CorruptionSpec("gamma", {})
    with pytest.raises(ParameterError):
        CorruptionSpec("gamma", {"g": 1, "extra": 2})
    with pytest.raises(ParameterError):
        CorruptionSpec("sharpen", {})
    with pytest.raises(ParameterError):
        CorruptionSpec("compose", children=(CorruptionSpec("gamma", {"g": 1}),))
    with pytest.raises(ParameterError):
        CorruptionSpec("jpeg", {"quality": 60.5})


def test_apply_spec_gamma_one_identity(random_image):
    img = random_image()
    assert np.array_equal(apply_spec(img, CorruptionSpec("gamma", {"g": 1})), img)


def test_apply_spec_compose_definition(random_image):
    img = random_image()
    spec = CorruptionSpec("compose", children=(
        CorruptionSpec("gaussian_noise", {"sigma": 30}),
        CorruptionSpec("jpeg", {"quality": 60}),
    ))
    r = derive_rng(3, "img", "cell")
    expected = jpeg_round_trip(gaussian_noise(img, 30, r.child(0)), 60)
    assert np.array_equal(apply_spec(img, spec, derive_rng(3, "img", "cell")), expected)


def test_apply_spec_fig2_combo(random_image):
    img = random_image()
    out = apply_spec(img, builtin_grid().get("GB+GN+GC"), rng())
    assert out.shape == img.shape
    assert not np.array_equal(out, img)


def test_apply_spec_needs_rng_for_noise(random_image):
    with pytest.raises(ParameterError):
        apply_spec(random_image(), CorruptionSpec("gaussian_noise", {"sigma": 1}))


def test_parse_spec():
    s = parse_spec("gamma:g=1")
    assert s.kind == "gamma" and s.params == {"g": 1}
    s = parse_spec("linear_adjust:alpha=1.5,beta=-20")
    assert s.params == {"alpha": 1.5, "beta": -20}
    with pytest.raises(ParameterError):
        parse_spec("gamma:g")
    with pytest.raises(ParameterError):
        parse_spec("gamma:g=abc")


# --------------------------------------------------------------------- grid

def test_builtin_grid_contents():
    g = builtin_grid()
    assert g[0].label == "unaltered"
    assert "JPEG 60" in g.labels
    assert sum(c.kind == "gaussian_noise" for c in g) == 6
    assert len(set(g.labels)) == len(g)
    assert {c.params["sigma"] for c in g if c.kind == "gaussian_noise"} == {5, 10, 20, 30, 40, 50}
    assert {c.params["quality"] for c in g if c.kind == "jpeg"} == {95, 60, 30}
    assert {c.params["factor"] for c in g if c.kind == "resize_degrade"} == {4, 8, 16}
    assert {c.params["g"] for c in g if c.kind == "gamma"} == {0.1, 0.75, 2.5}
    pg = g.get("Pois-Gau Noise")
    assert pg.params == {"a": 0.01, "b": 1e-4}
    all_ = g.get("All")
    assert [c.kind for c in all_.children] == ["gamma", "gaussian_blur", "gaussian_noise", "jpeg"]


def test_grid_json_round_trip(tmp_path):
    g = builtin_grid()
    g.to_json(tmp_path / "g.json")
    assert SeverityGrid.from_json(tmp_path / "g.json") == g
    doc = json.loads(g.to_json())
    assert doc["cells"][1] == {"label": "JPEG 95", "kind": "jpeg", "params": {"quality": 95}}


def test_grid_invariants():
    gm = CorruptionSpec("gamma", {"g": 1}, "x")
    g = SeverityGrid([gm])
    assert g.labels == ["unaltered", "x"]
    with pytest.raises(ParameterError):
        SeverityGrid([gm, gm])
    with pytest.raises(ParameterError):
        SeverityGrid([gm, corrupt.UNALTERED])
    with pytest.raises(ParameterError):
        SeverityGrid.from_dict({"cells": "nope"})
