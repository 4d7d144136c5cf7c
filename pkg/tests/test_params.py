import json

import numpy as np
import pytest

from framelearn.corpus import Vocab, Vocabularies
from framelearn.params import (
    ALPHA_FAMILIES,
    BKG,
    CNT,
    ModelFormatError,
    ModelParams,
    StructureConfig,
    SufficientStats,
    deserialize_model,
    init_model,
    load_model,
    log_prior,
    m_step,
    save_model,
    serialize_model,
)


def tiny_vocab(n=4):
    tokens = ["<unk>"] + [f"w{i}" for i in range(n - 1)]
    v = Vocab(token_of=tokens, id_of={t: i for i, t in enumerate(tokens)})
    return Vocabularies(v, v, v)


def tiny_model(seed=None, jitter=0.0, **kw):
    structure = StructureConfig(2, [2, 1], [2, 2], n_bkg_events=1, n_bkg_slots=1)
    return init_model(structure, tiny_vocab(), seed=seed, jitter=jitter, **kw)


class TestStructure:
    def test_initial_shape(self):
        s = StructureConfig.initial(3)
        assert s.events_per_frame == [1, 1, 1]
        assert s.slots_per_frame == [2, 2, 2]
        assert s.n_states == 6

    def test_state_count_doubles_for_background(self):
        s = StructureConfig(2, [2, 3], [1, 1])
        assert s.n_content_states == 5
        assert s.n_states == 10
        assert list(s.frame_offsets()) == [0, 2, 5]

    def test_rejects_mismatched_lists(self):
        with pytest.raises(ValueError):
            StructureConfig(2, [1], [1, 1])

    def test_rejects_empty_frame(self):
        with pytest.raises(ValueError):
            StructureConfig(1, [0], [1])


class TestInit:
    def test_zero_jitter_is_uniform(self):
        m = tiny_model(jitter=0.0)
        assert np.array_equal(m.p_bkg, [0.5, 0.5])
        assert np.array_equal(m.p_f_init, [0.5, 0.5])
        f0 = m.frames[0]
        assert np.array_equal(f0.e_head, np.full((2, 4), 0.25))
        assert np.array_equal(f0.slot, np.full((2, 3, 2), 0.5))

    def test_jitter_rows_still_normalized(self):
        m = tiny_model(seed=1, jitter=0.1)
        assert np.allclose(m.p_f_tran.sum(axis=1), 1.0)
        for fp in [*m.frames, m.background]:
            assert np.allclose(fp.e_head.sum(axis=1), 1.0)
            assert np.allclose(fp.slot.sum(axis=2), 1.0)
        assert not np.allclose(m.frames[0].e_head, 0.25)

    def test_same_seed_same_model(self):
        assert tiny_model(seed=3, jitter=0.05) == tiny_model(seed=3, jitter=0.05)

    def test_alpha_defaults_filled(self):
        m = tiny_model()
        assert set(m.alpha) == set(ALPHA_FAMILIES)

    def test_copy_is_deep(self):
        m = tiny_model(seed=2, jitter=0.05)
        c = m.copy()
        assert c == m
        c.frames[0].e_head[0, 0] = 0.9
        assert c != m


class TestMStep:
    def test_additive_smoothing_exact_values(self):
        # Oracle: hand-computed (c + a) / (sum c + a K) fractions.
        m = tiny_model(alpha={fam: 0.5 for fam in ALPHA_FAMILIES})
        stats = SufficientStats.zeros(m)
        stats.bkg[:] = [3.0, 1.0]
        stats.f_init[:] = [2.0, 0.0]
        stats.frames[0].e_head[0, :] = [0.0, 4.0, 0.0, 0.0]
        out = m_step(stats, m)
        assert out.p_bkg[CNT] == pytest.approx((3 + 0.5) / (4 + 0.5 * 2))
        assert out.p_bkg[BKG] == pytest.approx((1 + 0.5) / (4 + 0.5 * 2))
        assert out.p_f_init[0] == pytest.approx((2 + 0.5) / (2 + 0.5 * 2))
        assert out.frames[0].e_head[0, 1] == pytest.approx((4 + 0.5) / (4 + 0.5 * 4))
        assert out.frames[0].e_head[0, 0] == pytest.approx(0.5 / (4 + 0.5 * 4))

    def test_zero_counts_give_uniform(self):
        m = tiny_model()
        out = m_step(SufficientStats.zeros(m), m)
        assert np.allclose(out.background.e_tran, 1.0)
        assert np.allclose(out.frames[0].e_head, 0.25)

    def test_negative_residue_clipped(self):
        # Incremental count replacement can leave tiny negative values.
        m = tiny_model()
        stats = SufficientStats.zeros(m)
        stats.f_init[:] = [1.0, -1e-12]
        out = m_step(stats, m)
        assert np.all(out.p_f_init > 0)
        assert np.isclose(out.p_f_init.sum(), 1.0)

    def test_rows_normalized(self):
        m = tiny_model(seed=0, jitter=0.05)
        stats = SufficientStats.zeros(m)
        rng = np.random.default_rng(0)
        stats.frames[0].slot += rng.uniform(0, 5, stats.frames[0].slot.shape)
        out = m_step(stats, m)
        assert np.allclose(out.frames[0].slot.sum(axis=2), 1.0)


class TestStats:
    def test_iadd_isub_roundtrip(self):
        m = tiny_model()
        a = SufficientStats.zeros(m)
        b = SufficientStats.zeros(m)
        b.f_init[:] = [1.0, 2.0]
        b.frames[0].e_head[0, 1] = 3.0
        b.loglik = -5.0
        b.n_docs = 1
        a.iadd(b)
        a.iadd(b)
        a.isub(b)
        assert np.array_equal(a.f_init, [1.0, 2.0])
        assert a.frames[0].e_head[0, 1] == 3.0
        assert a.loglik == -5.0
        assert a.n_docs == 1


class TestLogPrior:
    def test_matches_direct_sum(self):
        m = tiny_model(seed=4, jitter=0.1, alpha={fam: 0.25 for fam in ALPHA_FAMILIES})
        expected = 0.25 * (
            np.log(m.p_bkg).sum()
            + np.log(m.p_f_init).sum()
            + np.log(m.p_f_tran).sum()
            + sum(
                np.log(fp.e_init).sum()
                + np.log(fp.e_tran).sum()
                + np.log(fp.e_head).sum()
                + np.log(fp.slot).sum()
                + np.log(fp.a_head).sum()
                + np.log(fp.a_dep).sum()
                for fp in [*m.frames, m.background]
            )
        )
        assert log_prior(m) == pytest.approx(float(expected), rel=1e-12)


class TestSerialization:
    def test_roundtrip_exact_equality(self, tmp_path):
        m = tiny_model(seed=9, jitter=0.07, beta=0.83)
        p = tmp_path / "model.json"
        save_model(m, p)
        again = load_model(p)
        # Bit-exact: JSON floats round-trip through repr.
        assert again == m

    def test_document_is_self_describing(self):
        doc = serialize_model(tiny_model())
        assert doc["format"] == "framelearn-model"
        assert doc["version"] == 1
        assert "structure" in doc and "vocab" in doc

    def test_rejects_wrong_format(self):
        with pytest.raises(ModelFormatError):
            deserialize_model({"format": "something-else", "version": 1})

    def test_rejects_unknown_version(self):
        doc = serialize_model(tiny_model())
        doc["version"] = 99
        with pytest.raises(ModelFormatError):
            deserialize_model(doc)

    def test_rejects_shape_mismatch(self):
        doc = serialize_model(tiny_model())
        doc["frames"][0]["e_head"] = [[0.5, 0.5]]
        with pytest.raises(ModelFormatError, match="shape"):
            deserialize_model(doc)

    def test_rejects_negative_probability(self):
        doc = serialize_model(tiny_model())
        doc["frames"][0]["e_init"] = [1.5, -0.5]
        with pytest.raises(ModelFormatError, match="invalid"):
            deserialize_model(doc)

    def test_atomic_write_leaves_no_temp_files(self, tmp_path):
        m = tiny_model()
        p = tmp_path / "model.json"
        save_model(m, p)
        save_model(m, p)  # overwrite in place
        assert [f.name for f in tmp_path.iterdir()] == ["model.json"]
        with open(p) as fh:
            json.load(fh)

    def test_split_pairs_not_serialized(self, tmp_path):
        from framelearn.learn import split_all

        m = split_all(tiny_model(seed=1, jitter=0.05), eps=0.01, seed=0)
        assert m.split_pairs
        p = tmp_path / "model.json"
        save_model(m, p)
        again = load_model(p)
        assert again.split_pairs == []
        assert again == m  # equality ignores the transient field
