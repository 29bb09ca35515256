"""Virtual-experiment signal construction tests."""

import numpy as np
import pytest

from loadtune import make_virtual, simulate, tf_inv, tf_mul, tf_neg, tf_sub
from loadtune.virtual import dump_virtual


def test_signal_definitions(ol_noisy, reference_model, Cf_pidf):
    vs = make_virtual(ol_noisy, reference_model, Cf_pidf)
    Qd_inv = tf_inv(reference_model)
    assert np.array_equal(vs.e_bar, -ol_noisy.y)
    assert np.allclose(vs.d_bar, simulate(Qd_inv, ol_noisy.y), atol=1e-12)
    assert np.allclose(vs.u_bar, ol_noisy.u - vs.d_bar, atol=1e-12)
    assert np.allclose(vs.ef_bar, simulate(Cf_pidf, vs.e_bar), atol=1e-12)
    assert vs.N == ol_noisy.N
    assert vs.max_abs_d_bar == pytest.approx(np.max(np.abs(vs.d_bar)))


def test_virtual_control_action_is_ideal_feedback(
    ol_noiseless, plant, reference_model, Cf_pidf, ideal_pidf
):
    # On noiseless data u_bar = (G^-1 - Qd^-1) y = C_d * e_bar.
    vs = make_virtual(ol_noiseless, reference_model, Cf_pidf)
    expected = simulate(ideal_pidf, vs.e_bar)
    scale = np.max(np.abs(vs.u_bar))
    assert np.max(np.abs(vs.u_bar - expected)) < 1e-8 * scale


def test_discard_prefix(ol_noisy, reference_model, Cf_pidf):
    full = make_virtual(ol_noisy, reference_model, Cf_pidf)
    cut = make_virtual(ol_noisy, reference_model, Cf_pidf, discard_prefix=600)
    assert cut.N == full.N - 600
    assert np.array_equal(cut.u_bar, full.u_bar[600:])
    assert np.array_equal(cut.ef_bar, full.ef_bar[600:])
    with pytest.raises(ValueError):
        make_virtual(ol_noisy, reference_model, Cf_pidf, discard_prefix=ol_noisy.N)


def test_dump_virtual(tmp_path, ol_noisy, reference_model, Cf_pidf):
    vs = make_virtual(ol_noisy, reference_model, Cf_pidf)
    path = tmp_path / "virtual.csv"
    dump_virtual(vs, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "t,e_bar,d_bar,u_bar,ef_bar"
    assert len(lines) == vs.N + 1
