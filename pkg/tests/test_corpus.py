"""Corpus tests: pose normalization, padding, JSONL persistence, synthesis."""

import json

import numpy as np
import pytest

from mh_phone.corpus import (FEATURE_ORDER, KEYPOINTS, N_FEATURES, Corpus,
                             RawSign, SignSequence, ingest_raw_sign,
                             load_corpus, normalize_pose, pad_sign,
                             save_corpus, synth_corpus)
from mh_phone.errors import (DegenerateScale, InvariantViolation, ParseError,
                             TooLong)
from mh_phone.params import ModelParams, make_truth_params

from helpers import random_corpus, raw_frame


def test_normalize_translated_unit_shoulders():
    frame = raw_frame(head=(5.0, 5.0), rsh=(4.0, 5.0), lsh=(6.0, 5.0),
                      relb=(5.0, 5.0), lelb=(5.0, 5.0),
                      rwr=(5.0, 5.0), lwr=(5.0, 5.0))
    out = normalize_pose(frame)
    assert out.shape == (N_FEATURES,)
    assert np.array_equal(out[:2], [0.0, 0.0])
    assert np.allclose(out[2:4], [-1.0, 0.0])
    assert np.allclose(out[4:6], [1.0, 0.0])
    assert np.allclose(out[6:], 0.0)


def test_normalize_hand_computed_scale():
    # oracle: the unit of length is the mean of the two head-shoulder distances
    head, rsh, lsh = np.zeros(2), np.array([2.0, 0.0]), np.array([-2.0, 0.0])
    rwr = np.array([1.0, 1.0])
    scale = 0.5 * (np.linalg.norm(rsh - head) + np.linalg.norm(lsh - head))
    out = normalize_pose(raw_frame(head=head, rsh=rsh, lsh=lsh, rwr=rwr))
    idx = FEATURE_ORDER.index("right_wrist.x")
    assert np.allclose(out[idx:idx + 2], (rwr - head) / scale)
    assert np.allclose(out[idx:idx + 2], [0.5, 0.5])


def test_normalize_head_always_exactly_origin():
    rng = np.random.default_rng(11)
    for _ in range(25):
        pts = rng.normal(0.0, 5.0, size=(7, 2))
        frame = {name: pts[k] for k, name in enumerate(KEYPOINTS)}
        out = normalize_pose(frame)
        assert out[0] == 0.0 and out[1] == 0.0


def test_normalize_similarity_invariance():
    rng = np.random.default_rng(3)
    pts = rng.normal(0.0, 2.0, size=(7, 2))
    base = normalize_pose({name: pts[k] for k, name in enumerate(KEYPOINTS)})
    moved = {name: pts[k] * 3.5 + np.array([40.0, -7.0])
             for k, name in enumerate(KEYPOINTS)}
    assert np.allclose(normalize_pose(moved), base)


def test_normalize_degenerate_scale():
    frame = raw_frame(head=(1.0, 1.0), rsh=(1.0, 1.0), lsh=(1.0, 1.0))
    with pytest.raises(DegenerateScale):
        normalize_pose(frame)


def test_normalize_rejects_missing_or_bad_keypoints():
    frame = raw_frame()
    del frame["left_wrist"]
    with pytest.raises(InvariantViolation, match="left_wrist"):
        normalize_pose(frame)
    with pytest.raises(InvariantViolation):
        normalize_pose(raw_frame(rwr=(np.nan, 0.0)))


def test_pad_adds_zero_suffix():
    rng = np.random.default_rng(0)
    data = rng.normal(size=(3, N_FEATURES))
    sign = pad_sign(data, 8)
    assert sign.true_length == 3
    assert sign.features.shape == (8, N_FEATURES)
    assert np.array_equal(sign.features[:3], data)
    assert not sign.features[3:].any()


def test_pad_exact_fit_unchanged():
    rng = np.random.default_rng(1)
    data = rng.normal(size=(25, N_FEATURES))
    sign = pad_sign(data, 25)
    assert sign.true_length == 25
    assert np.array_equal(sign.features, data)


def test_pad_too_long():
    with pytest.raises(TooLong):
        pad_sign(np.ones((26, N_FEATURES)), 25)


def test_sign_rejects_payload_after_zero_row():
    feats = np.ones((4, 3))
    feats[1] = 0.0
    with pytest.raises(InvariantViolation, match="contiguous suffix"):
        SignSequence(gloss="g", features=feats, true_length=4)


def test_sign_rejects_nonzero_padding():
    with pytest.raises(InvariantViolation, match="past true_length"):
        SignSequence(gloss="g", features=np.ones((4, 3)), true_length=2)


def test_sign_features_are_read_only():
    sign = pad_sign(np.ones((2, 4)), 5)
    with pytest.raises(ValueError):
        sign.features[0, 0] = 9.0


def test_raw_sign_validation():
    with pytest.raises(InvariantViolation, match="noise_level"):
        RawSign(gloss="g", signer_id="s", noise_level="terrible",
                frames=(raw_frame(),))
    with pytest.raises(InvariantViolation):
        RawSign(gloss="g", signer_id="s", noise_level="none", frames=())


def test_ingest_normalizes_and_pads():
    frames = [raw_frame(head=(k, 0.0), rsh=(k + 1.0, 0.0), lsh=(k - 1.0, 0.0))
              for k in range(4)]
    raw = RawSign(gloss="wave", signer_id="s1", noise_level="low", frames=frames)
    sign = ingest_raw_sign(raw, n_frames=6)
    assert sign.true_length == 4
    assert sign.noise == "low"
    assert sign.features.shape == (6, N_FEATURES)
    assert np.array_equal(sign.features[0], normalize_pose(frames[0]))


def test_corpus_dims_filter_and_immutability():
    rng = np.random.default_rng(5)
    signs = [pad_sign(rng.normal(size=(3, 6)), 5, gloss=f"g{i}",
                      noise="broken" if i % 2 else "none") for i in range(4)]
    corp = Corpus(signs)
    assert corp.dims == (4, 5, 6)
    assert len(corp) == 4 and corp[1].gloss == "g1"
    kept = corp.without_noise("broken")
    assert len(kept) == 2
    assert all(s.noise == "none" for s in kept)
    with pytest.raises(InvariantViolation):
        corp.without_noise("broken", "none")
    with pytest.raises(ValueError):
        corp.features[0, 0, 0] = 1.0
    with pytest.raises(AttributeError):
        corp.signs = ()


def test_corpus_rejects_mixed_shapes():
    a = pad_sign(np.ones((2, 4)), 5)
    b = pad_sign(np.ones((2, 3)), 5)
    with pytest.raises(InvariantViolation, match="shape"):
        Corpus([a, b])
    with pytest.raises(InvariantViolation):
        Corpus([])


def test_round_trip_preserves_everything(tmp_path):
    rng = np.random.default_rng(9)
    corp = random_corpus(rng, m=6, p=7, d=N_FEATURES)
    path = tmp_path / "c.jsonl"
    save_corpus(corp, path, config={"command": "test", "seed": 3})
    back = load_corpus(path)
    assert back.dims == corp.dims
    assert np.array_equal(back.features, corp.features)
    assert np.array_equal(back.true_lengths, corp.true_lengths)
    assert [s.gloss for s in back] == [s.gloss for s in corp]
    header = json.loads(path.read_text().splitlines()[0])
    assert header["format"] == "mh-corpus" and header["version"] == 1
    assert header["D"] == N_FEATURES and header["P"] == 7
    assert header["feature_order"] == list(FEATURE_ORDER)
    assert header["config"] == {"command": "test", "seed": 3}


def _write_corpus_file(path, records, d=3, p=4):
    header = {"format": "mh-corpus", "version": 1, "D": d, "P": p,
              "feature_order": [f"f{i}" for i in range(d)]}
    lines = [json.dumps(header)] + [json.dumps(r) for r in records]
    path.write_text("\n".join(lines) + "\n")


def _record(frames, gloss="g", signer="s", noise="none"):
    return {"gloss": gloss, "signer": signer, "noise": noise, "frames": frames}


def test_load_two_records(tmp_path):
    path = tmp_path / "c.jsonl"
    _write_corpus_file(path, [_record([[1.0, 0.0, 0.0]]),
                              _record([[0.0, 2.0, 0.0], [0.0, 0.0, 3.0]])])
    corp = load_corpus(path)
    assert len(corp) == 2
    assert list(corp.true_lengths) == [1, 2]
    assert corp.dims == (2, 4, 3)


def test_load_wrong_feature_count(tmp_path):
    path = tmp_path / "c.jsonl"
    _write_corpus_file(path, [_record([[1.0, 2.0]])])
    with pytest.raises(InvariantViolation, match="expected 3 features"):
        load_corpus(path)


def test_load_payload_after_zero_row(tmp_path):
    path = tmp_path / "c.jsonl"
    _write_corpus_file(path, [_record([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])])
    with pytest.raises(InvariantViolation, match="end token"):
        load_corpus(path)


def test_load_reports_line_numbers(tmp_path):
    path = tmp_path / "c.jsonl"
    header = {"format": "mh-corpus", "version": 1, "D": 3, "P": 4,
              "feature_order": ["f0", "f1", "f2"]}
    path.write_text(json.dumps(header) + "\n"
                    + json.dumps(_record([[1.0, 0.0, 0.0]])) + "\n{oops\n")
    with pytest.raises(ParseError, match="line 3"):
        load_corpus(path)


def test_load_rejects_foreign_or_broken_headers(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text('{"format": "something-else"}\n')
    with pytest.raises(ParseError, match="line 1"):
        load_corpus(path)
    path.write_text("")
    with pytest.raises(ParseError):
        load_corpus(path)
    _write_corpus_file(path, [])
    with pytest.raises(InvariantViolation, match="no signs"):
        load_corpus(path)


def test_load_record_longer_than_padded_length(tmp_path):
    path = tmp_path / "c.jsonl"
    _write_corpus_file(path, [_record([[1.0, 0.0, 0.0]] * 5)], p=4)
    with pytest.raises(TooLong):
        load_corpus(path)


def test_synth_end_start_gives_all_zero_corpus():
    n, d = 3, 4
    truth = ModelParams(pi=[1.0, 0.0, 0.0], trans=np.full((n, n), 1.0 / n),
                        mu=np.vstack([np.zeros(d), np.ones((n - 1, d))]),
                        sigma=np.full(d, 0.5))
    corp, assign = synth_corpus(truth, 5, seed=0, n_frames=6)
    assert not corp.features.any()
    assert np.array_equal(assign.labels[:, 0], np.zeros(5, dtype=int))
    assert list(corp.true_lengths) == [1] * 5


def test_synth_same_seed_identical():
    truth = make_truth_params(4, 6, seed=2)
    a, la = synth_corpus(truth, 12, seed=77)
    b, lb = synth_corpus(truth, 12, seed=77)
    assert np.array_equal(a.features, b.features)
    assert np.array_equal(la.labels, lb.labels)
    assert [s.gloss for s in a] == [s.gloss for s in b]


def test_synth_noisy_end_token_keeps_full_length():
    truth = make_truth_params(3, 5, seed=1)
    corp, _ = synth_corpus(truth, 8, seed=3, exact_end_token=False, n_frames=10)
    assert list(corp.true_lengths) == [10] * 8
    assert corp.features.any(axis=2).all()


def test_synth_exact_end_token_zero_suffix():
    truth = make_truth_params(4, 6, seed=7, end_prob=0.3)
    corp, assign = synth_corpus(truth, 60, seed=8, n_frames=12)
    entered = np.cumsum(assign.labels == 0, axis=1) > 0
    for i, sign in enumerate(corp):
        length = sign.true_length
        assert not sign.features[length:].any()
        if entered[i].any():
            assert length == max(1, int(np.argmax(entered[i])))
        else:
            assert length == 12


def test_synth_state_frequencies_match_chain_power_oracle():
    # oracle: expected per-sign state counts over P frames are sum_i pi @ T^i
    truth = make_truth_params(5, 6, seed=4, end_prob=0.1)
    m, p = 500, 25
    _, assign = synth_corpus(truth, m, seed=10, n_frames=p)
    expected = np.zeros(truth.n_states)
    occ = truth.pi.copy()
    for _ in range(p):
        expected += occ
        occ = occ @ truth.trans
    per_sign = np.stack([(assign.labels == j).sum(axis=1)
                         for j in range(truth.n_states)], axis=1).astype(float)
    mean = per_sign.mean(axis=0)
    se = per_sign.std(axis=0, ddof=1) / np.sqrt(m)
    assert np.all(np.abs(mean - expected) <= 3.0 * se + 1e-12)


def test_synth_dims_follow_truth_and_request():
    truth = make_truth_params(3, 8, seed=0)
    corp, assign = synth_corpus(truth, 4, seed=1, n_frames=9)
    assert corp.dims == (4, 9, 8)
    assert assign.shape == (4, 9)
    with pytest.raises(InvariantViolation):
        synth_corpus(truth, 0, seed=1)
