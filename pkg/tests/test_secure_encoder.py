import numpy as np
import pytest

from gmacsec import codegraph as cg
from gmacsec import secure_encoder as se
from gmacsec.ensembles import PuncturingDistribution, random_puncturing, node_perspective


@pytest.fixture(scope="module")
def toy(regular36):
    graph = cg.construct_graph(regular36, 20, seed=13)
    pi = random_puncturing(0.2, regular36)
    pattern = se.select_pattern(pi, graph, k=4, seed=5)
    encoder = se.encoder_for_pattern(graph, pattern)
    return graph, pi, pattern, encoder


class TestSelectPattern:
    def test_empty(self, toy, regular36):
        graph = toy[0]
        pat = se.select_pattern(PuncturingDistribution({}), graph, k=0, seed=1)
        assert pat.k == 0 and len(pat.indices) == 0

    def test_quota_counts_regular(self, toy):
        graph, pi, pattern, _ = toy
        assert pattern.k == 4
        assert pattern.degree_counts == {3: 4}

    def test_quota_counts_irregular(self, eqpow_ensemble, eqpow_pi):
        n = 2000
        graph = cg.construct_graph(eqpow_ensemble, n, seed=17)
        k = round(n * 0.25)
        pattern = se.select_pattern(eqpow_pi, graph, k=k, seed=3)
        assert pattern.k == k
        lnode = node_perspective(eqpow_ensemble)
        for d, frac in eqpow_pi.pi.items():
            expect = frac * lnode[d] * n
            assert abs(pattern.degree_counts.get(d, 0) - expect) <= 3

    def test_random_pi_quota(self, eqpow_ensemble):
        n = 2000
        graph = cg.construct_graph(eqpow_ensemble, n, seed=17)
        pi = random_puncturing(0.25, eqpow_ensemble)
        pattern = se.select_pattern(pi, graph, k=round(0.25 * n), seed=3)
        lnode = node_perspective(eqpow_ensemble)
        for d in pi.degrees:
            expect = 0.25 * lnode[d] * n
            assert abs(pattern.degree_counts.get(d, 0) - expect) <= 3

    def test_determinism(self, eqpow_ensemble, eqpow_pi):
        graph = cg.construct_graph(eqpow_ensemble, 1000, seed=17)
        p1 = se.select_pattern(eqpow_pi, graph, k=250, seed=4)
        p2 = se.select_pattern(eqpow_pi, graph, k=250, seed=4)
        assert np.array_equal(p1.indices, p2.indices)

    def test_infeasible_quota(self, toy, regular36):
        graph = toy[0]
        pi = PuncturingDistribution({3: 1.0})
        with pytest.raises(se.PatternError):
            se.select_pattern(pi, graph, k=2 * graph.n_vars, seed=1)

    def test_export_import(self, toy, tmp_path):
        pattern = toy[2]
        path = tmp_path / "pattern.txt"
        se.export_pattern(pattern, path)
        back = se.load_pattern(path)
        assert np.array_equal(back.indices, pattern.indices)


class TestSecureEncode:
    def test_forced_zero_random_message(self, toy):
        _, _, pattern, enc = toy

        class ZeroRng:
            def integers(self, lo, hi, size=None, dtype=None):
                return np.zeros(size, dtype=dtype)

        cw = se.secure_encode(np.zeros(enc.k, dtype=np.uint8), enc, pattern, ZeroRng())
        assert not cw.full.any()
        assert not cw.transmitted.any()

    def test_stochastic_encoding(self, toy, rng):
        _, _, pattern, enc = toy
        secret = np.ones(enc.k, dtype=np.uint8)
        cw1 = se.secure_encode(secret, enc, pattern, np.random.default_rng(1))
        cw2 = se.secure_encode(secret, enc, pattern, np.random.default_rng(2))
        assert enc.check(cw1.full) and enc.check(cw2.full)
        assert not np.array_equal(cw1.transmitted, cw2.transmitted)

    def test_transmitted_length(self, toy, rng):
        graph, _, pattern, enc = toy
        cw = se.secure_encode(rng.integers(0, 2, enc.k, dtype=np.uint8), enc, pattern, rng)
        assert len(cw.transmitted) == graph.n_vars - pattern.k

    def test_secret_recoverable_from_full_word(self, toy, rng):
        _, _, pattern, enc = toy
        secret = rng.integers(0, 2, enc.k, dtype=np.uint8)
        cw = se.secure_encode(secret, enc, pattern, rng)
        assert np.array_equal(cw.full[enc.secret_cols], secret)

    def test_secret_bits_all_punctured(self, toy):
        _, _, pattern, enc = toy
        assert np.array_equal(np.sort(enc.secret_cols), pattern.indices)

    def test_nested_coset_structure(self, toy, rng):
        # two encodings of the same secret differ by an encoding of zero
        _, _, pattern, enc = toy
        secret = rng.integers(0, 2, enc.k, dtype=np.uint8)
        cw1 = se.secure_encode(secret, enc, pattern, np.random.default_rng(11))
        cw2 = se.secure_encode(secret, enc, pattern, np.random.default_rng(12))
        diff = cw1.full ^ cw2.full
        assert enc.check(diff)
        assert not diff[enc.secret_cols].any()

    def test_degenerate_no_secret(self, regular36, rng):
        graph = cg.construct_graph(regular36, 20, seed=13)
        pattern = se.PuncturePattern(np.array([], dtype=np.int64), {})
        enc = se.encoder_for_pattern(graph, pattern)
        cw = se.secure_encode(np.zeros(0, dtype=np.uint8), enc, pattern, rng)
        assert np.array_equal(cw.transmitted, cw.full)

    def test_length_mismatch(self, toy, rng):
        _, _, pattern, enc = toy
        with pytest.raises(ValueError):
            se.secure_encode(np.zeros(enc.k + 1, dtype=np.uint8), enc, pattern, rng)
