import numpy as np
import pytest

from liegeo.plotting import plot_drift, plot_projection


def _helix(m=200):
    t = np.linspace(0, 6, m)
    return np.column_stack([np.cos(t), np.sin(t), 0.1 * t])


def test_projection_formats(tmp_path):
    pts = _helix()
    for ext, magic in (("png", b"\x89PNG"), ("pdf", b"%PDF")):
        path = plot_projection(pts, ["x_13", "x_14", "x_24"], tmp_path / f"c.{ext}", title="helix")
        assert path.read_bytes()[:4] == magic


def test_svg_output_is_byte_stable(tmp_path):
    a = plot_projection(_helix(), ["x_1", "x_2", "x_3"], tmp_path / "a.svg")
    b = plot_projection(_helix(), ["x_1", "x_2", "x_3"], tmp_path / "b.svg")
    assert a.read_bytes() == b.read_bytes()


def test_projection_rejects_wrong_shape(tmp_path):
    with pytest.raises(ValueError):
        plot_projection(np.zeros((10, 2)), ["a", "b", "c"], tmp_path / "x.png")


def test_drift_plot_handles_exactly_conserved_series(tmp_path):
    t = np.linspace(0, 1, 50)
    path = plot_drift(t, {"H": np.ones(50), "I1": 1 + 1e-12 * t}, tmp_path / "sub" / "d.png")
    assert path.exists() and path.stat().st_size > 0
