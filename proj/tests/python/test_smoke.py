import math
import os

import pytest

import csfiqa


def test_softmax_sums_to_one():
    p = csfiqa.softmax([0.3, -1.2, 2.0, 0.0])
    assert abs(sum(p) - 1.0) < 1e-12
    assert all(v > 0 for v in p)


def test_softmax_uniform():
    p = csfiqa.softmax([0.0, 0.0, 0.0])
    assert p == pytest.approx([1 / 3] * 3)


def test_masked_softmax_drops_exact_zero():
    p = csfiqa.masked_softmax([5.0, 1.0, 1.0], [True, True, False])
    assert p[2] == 0.0
    assert abs(sum(p) - 1.0) < 1e-12
    with pytest.raises(csfiqa.InvalidMaskError):
        csfiqa.masked_softmax([1.0, 2.0], [False, False])


def test_cosine_sim():
    assert csfiqa.cosine_sim([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)
    assert csfiqa.cosine_sim([1, 0], [0, 2]) == pytest.approx(0.0)
    with pytest.raises(csfiqa.NumericError):
        csfiqa.cosine_sim([0, 0], [1, 1])


def test_info_nce_two_way_tie_is_ln2():
    v = [1.0, 0.0]
    loss = csfiqa.info_nce(v, positives=[v], negatives=[v], tau=0.5)
    assert loss == pytest.approx(math.log(2.0), abs=1e-12)


def test_classify_pairs():
    pos, neg = csfiqa.classify_pairs([0.5, 0.5, 0.9], anchor=0, beta_pair=0.1)
    assert pos == [1]
    assert neg == [2]


def test_noise_loss_identical_regions():
    # Every region identical: all 2x2 cross-scale similarities are exactly 1.
    r = [[1.0, 2.0], [1.0, 2.0]]
    loss = csfiqa.noise_loss(r, r)
    assert loss == pytest.approx(len(r) * len(r) * math.exp(-1.0), rel=1e-9)


def test_rank_metrics():
    assert csfiqa.srcc([1, 2, 3, 5, 4], [1, 2, 3, 4, 5]) == pytest.approx(0.9, abs=1e-12)
    assert csfiqa.plcc([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert csfiqa.median([3.0, 1.0, 2.0]) == 2.0


def test_synth_data(tmp_path):
    rows = csfiqa.synth_data(4, seed=7, out_dir=str(tmp_path))
    assert len(rows) == 4
    for path, mos in rows:
        assert os.path.exists(tmp_path / path)
        assert 0.0 <= mos <= 1.0
    again = csfiqa.synth_data(4, seed=7, out_dir=str(tmp_path / "again"))
    assert [m for _, m in rows] == [m for _, m in again]
