import os
import xml.etree.ElementTree as ET

import numpy as np
import pytest

import lrnerv

CONFIG_DIR = os.environ.get(
    "LRNERV_CONFIG_DIR", os.path.join(os.path.dirname(__file__), "..", "..", "configs")
)


def test_rank_and_counts():
    assert lrnerv.select_rank(96, 384, 0.25) == 24
    assert lrnerv.dense_param_count(96, 384, 3) == 331776
    assert lrnerv.lr_param_count(96, 384, 3, 24) == 34560
    with pytest.raises(ValueError):
        lrnerv.select_rank(8, 8, 0.0)


def test_lrconv_matches_composed_kernel():
    layer = lrnerv.LRConv(5, 7, 3, 0.5, seed=3)
    assert layer.proj.shape == (layer.rank, 5, 3, 1)
    assert layer.recon.shape == (7, layer.rank, 1, 3)
    x = np.random.default_rng(0).uniform(-1, 1, (5, 9, 10))
    dense = lrnerv.conv2d(x, layer.effective_kernel(), layer.bias, pad=1)
    np.testing.assert_allclose(layer.forward(x), dense, atol=1e-12)


def test_conv2d_against_numpy():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(2, 6, 5))
    w = rng.normal(size=(3, 2, 3, 3))
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1)))
    want = np.zeros((3, 6, 5))
    for i in range(6):
        for j in range(5):
            want[:, i, j] = np.tensordot(w, xp[:, i : i + 3, j : j + 3], axes=3)
    np.testing.assert_allclose(lrnerv.conv2d(x, w, pad=1), want, atol=1e-12)


def test_metrics():
    a = np.full((3, 32, 32), 0.3)
    assert lrnerv.psnr(a, a + 0.1) == pytest.approx(20.0)
    frames = lrnerv.synthetic_video(2, 64, 128)
    assert frames[0].shape == (3, 64, 128)
    assert lrnerv.ms_ssim(frames[0], frames[0]) == pytest.approx(1.0)
    assert 0.0 < lrnerv.ssim(frames[0], frames[1]) < 1.0


def test_quantize():
    q, scales = lrnerv.quantize(np.array([-1.0, 0.5, 1.0]))
    assert q.tolist() == [-127, 64, 127]
    assert scales == [pytest.approx(1 / 127)]
    w = np.random.default_rng(2).normal(size=(4, 9))
    back = lrnerv.fake_quantize(w)
    assert np.max(np.abs(back - w)) <= np.max(np.abs(w)) / 127 / 2 + 1e-15


def test_plan_and_report():
    assert lrnerv.parse_plan("3-4") == [3, 4]
    assert lrnerv.plan_label("0,1,2") == "0-2"
    report = lrnerv.model_report(os.path.join(CONFIG_DIR, "canonical.cfg"), "4")
    assert report["params"] == 2898789
    assert report["param_reduction_pct"] == pytest.approx(9.30, abs=0.01)
    assert any(layer["name"] == "stages.4.proj" for layer in report["layers"])


def test_svg_is_valid_xml():
    csv = (
        "plan,precision,bits,params,gflops,bpp,psnr,ms_ssim,param_reduction_pct,flicker_ratio,status\n"
        "-,float32,32,100,0.5,0.4,30,0.9,0,1.1,ok\n"
        "4,float32,32,90,0.3,0.36,29.5,0.89,10,1.2,ok\n"
        "0-4,int8,8,50,0.2,0.05,,,50,,failed: diverged\n"
    )
    root = ET.fromstring(lrnerv.rd_plot_svg(csv))
    assert root.tag.endswith("svg")
