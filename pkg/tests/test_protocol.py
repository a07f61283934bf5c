import itertools

import numpy as np
import pytest

from enscomp import extopt, linalg, protocol, states
from enscomp.errors import DimensionGuardError, ValidationError
from enscomp.fidelity import fidelity
from enscomp.states import DensityMatrix, Ensemble

from conftest import rand_density, rand_pure_density


def zero_plus_pair():
    plus = np.array([1.0, 1.0]) / np.sqrt(2)
    return Ensemble(
        [0.5, 0.5],
        (DensityMatrix(np.diag([1.0, 0.0]), (2,)),
         DensityMatrix(np.outer(plus, plus), (2,))),
    )


def orthogonal_pair():
    a = np.diag([0.5, 0.5, 0.0, 0.0]).astype(complex)
    b = np.diag([0.0, 0.0, 0.5, 0.5]).astype(complex)
    return Ensemble([0.5, 0.5], (DensityMatrix(a, (4,)), DensityMatrix(b, (4,))))


def test_rate_of():
    assert protocol.rate_of(1, 5) == 0.0
    assert abs(protocol.rate_of(176, 10) - np.log2(176) / 10) < 1e-15
    assert abs(protocol.rate_of(2 ** 7, 7) - 1.0) < 1e-15


def test_typical_subspace_pure_source(rng):
    rho = rand_pure_density(rng, 2)
    ts = protocol.typical_subspace(rho, 5, eps=0.01)
    assert ts.dim == 1
    assert abs(ts.retained_mass - 1.0) < 1e-12


def test_typical_subspace_binomial_oracle():
    from math import comb

    rho = DensityMatrix(np.diag([0.9, 0.1]), (2,))
    ts = protocol.typical_subspace(rho, 10, dim_cap=176)
    mass = sum(comb(10, k) * 0.9 ** (10 - k) * 0.1 ** k for k in range(4))
    assert abs(ts.retained_mass - mass) < 1e-12
    assert ts.dim == 176
    assert abs(protocol.rate_of(ts.dim, 10) - np.log2(176) / 10) < 1e-15
    # minimal-dimension property of the mass target
    ts2 = protocol.typical_subspace(rho, 10, eps=1.0 - mass + 1e-12)
    assert ts2.dim == 176


def test_typical_subspace_flat_spectrum():
    rho = DensityMatrix(np.eye(2) / 2, (2,))
    ts = protocol.typical_subspace(rho, 4, eps=1e-9)
    assert ts.dim == 16


def test_typical_subspace_projector_invariants(rng):
    rho = rand_density(rng, 2)
    ts = protocol.typical_subspace(rho, 3, eps=0.1)
    p = ts.projector()
    assert np.abs(p - p.conj().T).max() < 1e-9
    assert np.abs(p @ p - p).max() < 1e-9
    assert ts.dim == len(ts.basis_states)
    rho_n = rho.matrix
    for _ in range(2):
        rho_n = linalg.tensor_product(rho_n, rho.matrix)
    assert abs(np.trace(p @ rho_n).real - ts.retained_mass) < 1e-10


def test_typical_subspace_mass_monotone_in_cap(rng):
    rho = rand_density(rng, 2)
    masses = [
        protocol.typical_subspace(rho, 4, dim_cap=m).retained_mass
        for m in (1, 2, 4, 8, 16)
    ]
    assert all(b >= a - 1e-12 for a, b in zip(masses, masses[1:]))


def test_typical_subspace_argument_validation(rng):
    rho = rand_density(rng, 2)
    with pytest.raises(ValidationError):
        protocol.typical_subspace(rho, 2)
    with pytest.raises(ValidationError):
        protocol.typical_subspace(rho, 2, eps=0.1, dim_cap=3)
    with pytest.raises(DimensionGuardError):
        protocol.typical_subspace(rand_density(rng, 4), 8, eps=0.1)


def test_js_compress_sequence_cases(rng):
    e = zero_plus_pair()
    ts = protocol.typical_subspace(states.ensemble_density(e), 3, dim_cap=4)
    # a state already inside the subspace is unchanged
    inside_vec = ts.basis[:, 1]
    inside = DensityMatrix(np.outer(inside_vec, inside_vec.conj()), (2, 2, 2))
    out = protocol.js_compress_sequence(inside, ts)
    assert np.abs(out.matrix - inside.matrix).max() < 1e-10
    # an orthogonal state maps to the junk projector
    full = np.eye(8, dtype=complex)
    v = ts.basis
    perp = full - v @ v.conj().T
    w, vec = np.linalg.eigh(perp)
    ortho_vec = vec[:, -1]
    ortho = DensityMatrix(np.outer(ortho_vec, ortho_vec.conj()), (2, 2, 2))
    out = protocol.js_compress_sequence(ortho, ts)
    junk = np.outer(ts.basis[:, 0], ts.basis[:, 0].conj())
    assert np.abs(out.matrix - junk).max() < 1e-9
    # random sequence keeps unit trace and stays a valid state in the subspace
    seq = rand_density(rng, 8, dims=(2, 2, 2))
    out = protocol.js_compress_sequence(seq, ts)
    assert abs(np.trace(out.matrix) - 1.0) < 1e-10
    assert np.abs((np.eye(8) - v @ v.conj().T) @ out.matrix).max() < 1e-9


def test_js_fast_path_matches_dense_route(rng):
    e = zero_plus_pair()
    ts = protocol.typical_subspace(states.ensemble_density(e), 4, dim_cap=6)
    grams = protocol._subspace_grams(ts, e.states)
    for seq in [(0, 0, 1, 1), (1, 0, 1, 0), (1, 1, 1, 1)]:
        sig = DensityMatrix(
            linalg.kron_all([e.states[c].matrix for c in seq]), (2,) * 4
        )
        dense = protocol.js_compress_sequence(sig, ts)
        f_dense = fidelity(sig, dense)
        gm, y = protocol._sequence_y(ts, grams, seq)
        f_fast = protocol._fidelity_in_subspace(gm, y)
        assert abs(f_dense - f_fast) < 1e-7


def test_js_protocol_single_pure_source(rng):
    e = Ensemble([1.0], (rand_pure_density(rng, 2),))
    res = protocol.js_protocol(e, 4, eps=0.01)
    assert res.channel_dim == 1
    assert res.rate == 0.0
    assert abs(res.avg_fidelity - 1.0) < 1e-9


def test_js_protocol_single_state_classical_oracle():
    # everything commutes here, so the run must reproduce the classical
    # fidelity of the truncated binomial distribution exactly
    e = Ensemble([1.0], (DensityMatrix(np.diag([0.9, 0.1]), (2,)),))
    res = protocol.js_protocol(e, 10, dim_cap=176)
    ts = protocol.typical_subspace(states.ensemble_density(e), 10, dim_cap=176)
    mass = ts.retained_mass
    top = 0.9 ** 10
    closed = ((mass - top) + np.sqrt(top * (top + 1.0 - mass))) ** 2
    assert abs(res.avg_fidelity - closed) < 1e-12
    assert res.avg_fidelity >= mass ** 2 - 1e-9
    assert not res.sampled
    assert len(res.per_sequence) == 1


def test_js_protocol_closed_form_oracle():
    # for the |0>/|+> source every sequence sees the same typical mass w, so
    # avg fidelity is exactly w^2 + (1-w) * lambda^n (junk = top eigenstring)
    e = zero_plus_pair()
    lam = (2 + np.sqrt(2)) / 4
    for n, m in ((4, 6), (6, 14)):
        res = protocol.js_protocol(e, n, dim_cap=m, sampling="exact")
        ts = protocol.typical_subspace(states.ensemble_density(e), n, dim_cap=m)
        closed = ts.retained_mass ** 2 + (1 - ts.retained_mass) * lam ** n
        assert abs(res.avg_fidelity - closed) < 1e-6
        assert res.channel_dim == m


def test_js_protocol_rate_covers_compressed_support(rng):
    e = zero_plus_pair()
    n = 3
    res = protocol.js_protocol(e, n, eps=0.1)
    ts = protocol.typical_subspace(states.ensemble_density(e), n, eps=0.1)
    acc = np.zeros((8, 8), dtype=complex)
    for seq in itertools.product(range(2), repeat=n):
        p = float(np.prod(e.probs[list(seq)]))
        sig = DensityMatrix(linalg.kron_all([e.states[c].matrix for c in seq]), (2,) * 3)
        acc += p * protocol.js_compress_sequence(sig, ts).matrix
    compressed = DensityMatrix(acc, (2,) * 3)
    assert res.rate >= np.log2(states.support_dim(compressed)) / n - 1e-9


def test_js_protocol_fidelity_monotone_in_subspace_size():
    e = zero_plus_pair()
    fids = [
        protocol.js_protocol(e, 4, eps=eps, sampling="exact").avg_fidelity
        for eps in (0.2, 0.1, 0.05, 0.01)
    ]
    assert all(b >= a - 1e-9 for a, b in zip(fids, fids[1:]))


def test_js_protocol_mc_deterministic_and_close_to_exact():
    e = zero_plus_pair()
    exact = protocol.js_protocol(e, 6, dim_cap=14, sampling="exact")
    mc1 = protocol.js_protocol(e, 6, dim_cap=14, sampling="mc", mc_samples=300, seed=4)
    mc2 = protocol.js_protocol(e, 6, dim_cap=14, sampling="mc", mc_samples=300, seed=4)
    assert mc1.avg_fidelity == mc2.avg_fidelity
    assert mc1.sampled and mc1.stderr is not None
    assert abs(mc1.avg_fidelity - exact.avg_fidelity) < max(5 * mc1.stderr, 5e-3)
    assert sum(r.draws for r in mc1.per_sequence) == 300


def test_js_protocol_auto_switches_to_sampling():
    e = zero_plus_pair()
    res = protocol.js_protocol(e, 13, dim_cap=64, mc_samples=50, seed=2)
    assert res.sampled  # 2^13 sequences > 4096


def test_extension_protocol_trivial_equals_js():
    e = orthogonal_pair()
    triv = extopt.trivial_assignment(e, 1, 4)
    js = protocol.js_protocol(e, 3, eps=0.05, sampling="exact")
    ep = protocol.extension_protocol(e, 1, triv, 3, eps=0.05, sampling="exact")
    assert abs(js.rate - ep.rate) < 1e-9
    assert abs(js.avg_fidelity - ep.avg_fidelity) < 1e-9
    assert ep.block_length == 3


def test_extension_protocol_known_state_rate_zero(rng):
    e = Ensemble([1.0], (DensityMatrix(np.eye(2) / 2, (2,)),))
    pure = extopt.trivial_assignment(e, 2, purifier_dim=1)
    res = protocol.extension_protocol(e, 1, pure, 3, eps=0.01, sampling="exact")
    assert res.channel_dim == 1
    assert res.rate == 0.0
    assert abs(res.avg_fidelity - 1.0) < 1e-9


def test_extension_protocol_optimized_orthogonal_pair():
    e = orthogonal_pair()
    cfg = extopt.OptimizerConfig(
        multistarts=6, max_iters=500, seed=21, ancilla_dim=2, purifier_dim=2
    )
    res = extopt.minimize_extension_entropy(e, cfg)
    assert abs(res.best_entropy - 1.0) <= 1e-3
    ep = protocol.extension_protocol(
        e, 1, res.best_assignment, 4, eps=0.05, sampling="exact"
    )
    assert ep.rate <= 1.2
    assert ep.avg_fidelity >= 0.95
    assert ep.avg_fidelity >= ep.ext_avg_fidelity - 1e-9


def test_extension_protocol_guard():
    e = orthogonal_pair()
    triv = extopt.trivial_assignment(e, 4)  # block dim 16
    with pytest.raises(DimensionGuardError):
        protocol.extension_protocol(e, 1, triv, 4, eps=0.05)


def test_protocol_result_invariants(rng):
    e = zero_plus_pair()
    res = protocol.js_protocol(e, 4, eps=0.1, sampling="exact")
    assert abs(res.rate - np.log2(res.channel_dim) / res.block_length) < 1e-12
    assert 0.0 <= res.avg_fidelity <= 1.0
    assert abs(sum(r.probability for r in res.per_sequence) - 1.0) < 1e-10
