import io
import itertools

import numpy as np
import pytest

from isingmimo.errors import ProblemSizeError, UnnormalizedProblemError
from isingmimo.ising import (
    IsingProblem,
    augment_aux,
    brute_force_ground,
    build_ml_ising,
    coupling_energy,
    energy,
    ground_states,
    l0_resilience,
    ml_objective,
    normalize,
    quantize,
    read_ising_text,
    regularize,
    strip_aux,
    write_ising_text,
)
from isingmimo.mimo import (
    ChannelInstance,
    bits_to_frame,
    generate_channel,
    make_constellation,
    realify_observation,
    realify_symbols,
    spins_to_real_symbols,
    transmit,
)
from isingmimo.numerics import SeededRng


def random_problem(seed, n, scale=1.0):
    g = SeededRng(seed).generator()
    h = g.uniform(-scale, scale, n)
    j = np.triu(g.uniform(-scale, scale, (n, n)), 1)
    return IsingProblem(n=n, h=h, j=j + j.T)


def exhaustive_argmin(p):
    best, best_e = None, np.inf
    for s in itertools.product((-1, 1), repeat=p.n):
        e = energy(p, np.array(s, dtype=float))
        if e < best_e:
            best, best_e = s, e
    return np.array(best), best_e


class TestBuild:
    def test_scalar_exact_fit(self):
        cons = make_constellation(2)
        ch = ChannelInstance.from_matrix(np.array([[1.0 + 0j]]), cons)
        p, _ = build_ml_ising(ch, np.array([1.0 + 0j]), cons)
        s, e = brute_force_ground(p)
        assert s[0] == 1
        assert ml_objective(p, s) == pytest.approx(0.0, abs=1e-12)

    @pytest.mark.parametrize("m,n_t", [(2, 2), (16, 2), (4, 3)])
    def test_exhaustive_match(self, m, n_t):
        cons = make_constellation(m)
        rng = SeededRng(100 + m)
        ch = generate_channel(rng.substream(0), n_t, n_t, cons)
        bits = rng.substream(1).generator().integers(0, 2, n_t * cons.bits_per_symbol)
        frame = bits_to_frame(bits.astype(np.uint8), cons, n_t)
        y = transmit(ch, frame, cons, 11.0, rng.substream(2))
        p, t = build_ml_ising(ch, y, cons)
        y_real = realify_observation(y)
        n_real = ch.h_real.shape[1]
        for s in itertools.product((-1, 1), repeat=p.n):
            s_arr = np.array(s, dtype=float)
            x = spins_to_real_symbols(s_arr, cons, n_real)
            direct = float(np.sum((y_real - ch.h_real @ x) ** 2))
            assert ml_objective(p, s_arr) == pytest.approx(direct, rel=1e-8, abs=1e-8)
            assert np.allclose(t @ s_arr, x)


class TestNormalize:
    def test_single_coefficient(self):
        p = IsingProblem(n=1, h=np.array([2.0]), j=np.zeros((1, 1)))
        q = normalize(p)
        assert q.h[0] == 1.0
        assert q.scale == 2.0

    def test_idempotent(self):
        p = normalize(random_problem(1, 5, scale=3.0))
        q = normalize(p)
        assert np.array_equal(p.h, q.h)
        assert q.scale == p.scale

    def test_argmin_invariant(self):
        p = random_problem(2, 8, scale=7.0)
        s_before, _ = brute_force_ground(p)
        s_after, _ = brute_force_ground(normalize(p))
        assert np.array_equal(s_before, s_after)

    def test_objective_invariant(self):
        p = random_problem(3, 6, scale=4.0)
        q = normalize(p)
        for s in itertools.product((-1, 1), repeat=6):
            s_arr = np.array(s, dtype=float)
            assert ml_objective(q, s_arr) == pytest.approx(ml_objective(p, s_arr), rel=1e-12)

    def test_all_zero(self):
        p = IsingProblem(n=2, h=np.zeros(2), j=np.zeros((2, 2)))
        assert normalize(p).scale == 1.0


class TestRegularize:
    def test_bias_shift(self):
        p = IsingProblem(n=1, h=np.array([0.5]), j=np.zeros((1, 1)))
        q = regularize(p, np.array([1]), 0.15)
        assert q.h[0] == pytest.approx(0.8)

    def test_zero_r_unchanged(self):
        p = random_problem(4, 5)
        assert regularize(p, np.ones(5), 0.0) is p

    def test_argmin_matches_penalized_objective(self):
        p = random_problem(5, 8)
        s_p = (2 * SeededRng(6).generator().integers(0, 2, 8) - 1).astype(float)
        q = regularize(p, s_p, 0.15)
        best_direct, best_e = None, np.inf
        for s in itertools.product((-1, 1), repeat=8):
            s_arr = np.array(s, dtype=float)
            e = energy(p, s_arr) + 0.15 * float(np.sum((s_arr - s_p) ** 2))
            if e < best_e:
                best_direct, best_e = s_arr, e
        s_reg, _ = brute_force_ground(q)
        assert np.array_equal(s_reg, best_direct.astype(np.int8))

    def test_offset_keeps_objectives_aligned(self):
        p = random_problem(7, 6)
        s_p = np.ones(6)
        q = regularize(p, s_p, 0.2)
        for s in itertools.product((-1, 1), repeat=6):
            s_arr = np.array(s, dtype=float)
            penalized = ml_objective(p, s_arr) + 0.2 * float(np.sum((s_arr - s_p) ** 2)) * p.scale
            assert ml_objective(q, s_arr) == pytest.approx(penalized, rel=1e-12)


class TestAux:
    def test_single_spin(self):
        p = IsingProblem(n=1, h=np.array([1.0]), j=np.zeros((1, 1)))
        aug = augment_aux(p)
        as_problem = IsingProblem(n=2, h=np.zeros(2), j=aug.j_aug)
        states, e = ground_states(as_problem)
        assert e == pytest.approx(-1.0)
        assert {tuple(s) for s in states} == {(1, 1), (-1, -1)}

    def test_zero_bias_decoupled(self):
        p = random_problem(8, 5)
        p = IsingProblem(n=5, h=np.zeros(5), j=p.j)
        aug = augment_aux(p)
        assert np.all(aug.j_aug[:5, 5] == 0)
        _, e0 = brute_force_ground(p)
        _, e1 = brute_force_ground(IsingProblem(n=6, h=np.zeros(6), j=aug.j_aug))
        assert e1 == pytest.approx(e0)

    def test_random_ground_equivalence(self):
        for seed in range(5):
            p = random_problem(20 + seed, 8)
            aug = augment_aux(p)
            as_problem = IsingProblem(n=9, h=np.zeros(9), j=aug.j_aug)
            _, e0 = brute_force_ground(p)
            states, e1 = ground_states(as_problem)
            assert e1 == pytest.approx(e0, rel=1e-12)
            flipped = {tuple(-s) for s in states}
            assert flipped == {tuple(s) for s in states}
            for s in states:
                assert energy(p, strip_aux(s, aug.aux_index)) == pytest.approx(e0, rel=1e-12)

    def test_strip_examples(self):
        assert np.array_equal(strip_aux(np.array([1, 1, 1]), 2), np.array([1, 1]))
        assert np.array_equal(strip_aux(np.array([1, -1, -1]), 2), np.array([-1, 1]))

    def test_strip_energy_identity(self):
        p = random_problem(30, 6)
        aug = augment_aux(p)
        g = SeededRng(31).generator()
        for _ in range(20):
            s_full = (2 * g.integers(0, 2, 7) - 1).astype(np.int8)
            assert coupling_energy(aug, s_full) == pytest.approx(
                energy(p, strip_aux(s_full, aug.aux_index)), rel=1e-12
            )


class TestEnergy:
    def test_bias_only(self):
        p = IsingProblem(n=1, h=np.array([1.0]), j=np.zeros((1, 1)))
        assert energy(p, np.array([1])) == -1.0

    def test_coupling_double_count(self):
        j = np.array([[0.0, 0.5], [0.5, 0.0]])
        p = IsingProblem(n=2, h=np.zeros(2), j=j)
        assert energy(p, np.array([1, 1])) == -1.0

    def test_flip_symmetry(self):
        p = IsingProblem(n=4, h=np.zeros(4), j=random_problem(40, 4).j)
        s = np.array([1, -1, -1, 1])
        assert energy(p, s) == pytest.approx(energy(p, -s))


class TestBruteForce:
    def test_bias_ground(self):
        p = IsingProblem(n=2, h=np.array([1.0, 1.0]), j=np.zeros((2, 2)))
        s, e = brute_force_ground(p)
        assert np.array_equal(s, [1, 1])
        assert e == -2.0

    def test_ferromagnet_tie_rule(self):
        j = np.triu(np.ones((4, 4)), 1)
        p = IsingProblem(n=4, h=np.zeros(4), j=j + j.T)
        s, _ = brute_force_ground(p)
        assert np.array_equal(s, -np.ones(4, dtype=np.int8))

    def test_dominates_random_vectors(self):
        p = random_problem(50, 12)
        _, e = brute_force_ground(p)
        g = SeededRng(51).generator()
        random_energies = [
            energy(p, 2 * g.integers(0, 2, 12) - 1) for _ in range(1000)
        ]
        assert e <= min(random_energies) + 1e-12

    def test_matches_exhaustive(self):
        p = random_problem(52, 6)
        s, e = brute_force_ground(p)
        s_ref, e_ref = exhaustive_argmin(p)
        assert e == pytest.approx(e_ref, rel=1e-12)
        assert np.array_equal(s, s_ref)

    def test_size_limit(self):
        p = IsingProblem(n=25, h=np.zeros(25), j=np.zeros((25, 25)))
        with pytest.raises(ProblemSizeError):
            brute_force_ground(p)


class TestQuantize:
    def test_two_bit_value_set(self):
        p = normalize(random_problem(60, 6))
        q = quantize(p, 2)
        vals = set(np.abs(q.h)) | set(np.abs(q.j[np.triu_indices(6, 1)]))
        assert vals <= {0.0, 1.0}

    def test_five_bit_example(self):
        # 0.7 * 15 is exactly 10.5 in doubles; half-up rounding gives 11/15
        p = IsingProblem(n=1, h=np.array([0.7]), j=np.zeros((1, 1)))
        q = quantize(p, 5)
        assert q.h[0] == pytest.approx(11 / 15)

    def test_zero_fixed_point(self):
        p = IsingProblem(n=1, h=np.array([0.0]), j=np.zeros((1, 1)))
        for k in (2, 5, 7):
            assert quantize(p, k).h[0] == 0.0

    def test_grid_identity(self):
        levels = (1 << 4) - 1
        g = SeededRng(61).generator()
        h = g.integers(-levels, levels + 1, 6) / levels
        j = np.triu(g.integers(-levels, levels + 1, (6, 6)), 1) / levels
        p = IsingProblem(n=6, h=h, j=j + j.T)
        q = quantize(p, 5)
        assert np.array_equal(q.h, p.h)
        assert np.array_equal(q.j, p.j)

    def test_unnormalized_rejected(self):
        p = IsingProblem(n=1, h=np.array([1.5]), j=np.zeros((1, 1)))
        with pytest.raises(UnnormalizedProblemError):
            quantize(p, 5)

    def test_beyond_double_precision(self):
        p = normalize(random_problem(62, 4))
        assert quantize(p, 64) is p


class TestResilience:
    def test_lossless_zero(self):
        levels = (1 << 4) - 1
        g = SeededRng(70).generator()
        h = g.integers(-levels, levels + 1, 6) / levels
        j = np.triu(g.integers(-levels, levels + 1, (6, 6)), 1) / levels
        p = IsingProblem(n=6, h=h, j=j + j.T)
        assert l0_resilience(p, 5) == 0

    def test_high_precision_zero(self):
        p = normalize(random_problem(71, 8))
        assert l0_resilience(p, 64) == 0

    def test_mostly_zero_at_five_bits(self):
        zero = sum(
            l0_resilience(normalize(random_problem(700 + i, 8)), 5) == 0 for i in range(40)
        )
        assert zero >= 32  # the vast majority of draws


class TestSerialization:
    def test_round_trip(self):
        p = normalize(random_problem(80, 6))
        buf = io.StringIO()
        write_ising_text(p, buf)
        q = read_ising_text(io.StringIO(buf.getvalue()))
        assert q.n == p.n
        assert np.array_equal(q.h, p.h)
        assert np.array_equal(q.j, p.j)

    def test_ferromagnet_file(self):
        text = "2\n0 0.0\n1 0.0\n0 1 1.0\n"
        p = read_ising_text(io.StringIO(text))
        s, e = brute_force_ground(p)
        assert np.array_equal(s, [-1, -1])
        assert e == -2.0
