import itertools

import numpy as np
import pytest

from crdistill.ensembles import AuxChannel, CQEnsemble
from crdistill.errors import EnvelopeExceeded, LengthMismatch
from crdistill.info import shannon_entropy
from crdistill.linalg import DensityMatrix, pure_state
from crdistill.typicality import (
    ProjectorHandle,
    TypicalSetSpec,
    build_g,
    cond_typical_projector,
    conditionally_typical_membership,
    lemma3_check,
    typical_membership,
    typical_mass,
    typical_projector,
    typical_set_size,
    verify_trace_bounds,
    wilson_interval,
)

FAIR = np.array([0.5, 0.5])


def test_membership_examples():
    spec = TypicalSetSpec(2, 4, 0.1, FAIR)
    assert typical_membership(spec, [0, 0, 1, 1])
    assert not typical_membership(spec, [0, 0, 0, 0])
    loose = TypicalSetSpec(2, 4, 1.0, FAIR)
    for word in itertools.product(range(2), repeat=4):
        assert typical_membership(loose, word)


def test_membership_length_check():
    spec = TypicalSetSpec(2, 4, 0.1, FAIR)
    with pytest.raises(LengthMismatch):
        typical_membership(spec, [0, 1])
    with pytest.raises(LengthMismatch):
        TypicalSetSpec(2, 0, 0.1, FAIR)
    with pytest.raises(LengthMismatch):
        TypicalSetSpec(2, 4, 0.0, FAIR)


def test_set_size_anchors():
    # windows [1,3] keep all but the two constant words: 4 + 6 + 4
    assert typical_set_size(TypicalSetSpec(2, 4, 0.3, FAIR))[0] == 14
    # tight window keeps only the balanced type
    assert typical_set_size(TypicalSetSpec(2, 4, 0.1, FAIR))[0] == 6
    # n = 1 with a near-unit slack keeps the whole alphabet
    assert typical_set_size(TypicalSetSpec(3, 1, 0.999, np.ones(3) / 3))[0] == 3


def test_set_size_and_mass_match_enumeration():
    p = np.array([0.7, 0.3])
    for n, delta in [(6, 0.08), (10, 0.12), (12, 0.06)]:
        spec = TypicalSetSpec(2, n, delta, p)
        count = 0
        mass = 0.0
        for word in itertools.product(range(2), repeat=n):
            if typical_membership(spec, word):
                count += 1
                mass += float(np.prod(p[list(word)]))
        assert typical_set_size(spec)[0] == count
        assert typical_mass(spec) == pytest.approx(mass, abs=1e-12)


def test_conditional_membership_identity_channel():
    ident = AuxChannel.identity(2, 2)
    # under the identity reverse channel x must copy u up to the slack
    assert conditionally_typical_membership(
        np.eye(2), [0, 1, 0, 1], [0, 1, 0, 1], 0.1
    )
    assert not conditionally_typical_membership(
        np.eye(2), [0, 1, 0, 1], [1, 1, 0, 1], 0.1
    )
    with pytest.raises(LengthMismatch):
        conditionally_typical_membership(np.eye(2), [0, 1], [0], 0.1)


def test_projector_trace_pure_state():
    rho = pure_state(np.array([1.0, 0.0]))
    h = typical_projector(rho, 6, 0.05)
    count, _ = h.trace()
    assert count == 1
    assert h.own_mass() == pytest.approx(1.0)


def test_projector_trace_maximally_mixed():
    rho = DensityMatrix(np.eye(2) / 2)
    h = typical_projector(rho, 8, 0.6)
    count, log2c = h.trace()
    assert count == 2 ** 8
    assert log2c == pytest.approx(8.0)


def test_projector_anchor_and_dense_parity():
    rho = DensityMatrix(np.diag([0.75, 0.25]))
    h = typical_projector(rho, 8, 0.1)
    count, _ = h.trace()
    assert count == 28
    assert h.own_mass() == pytest.approx(0.31146240234375, abs=1e-12)
    dm = h.dense()
    assert np.trace(dm).real == pytest.approx(count)
    assert np.allclose(dm, dm @ dm, atol=1e-10)  # idempotent
    assert np.allclose(dm, dm.conj().T, atol=1e-12)
    rho_n = rho.mat
    for _ in range(7):
        rho_n = np.kron(rho_n, rho.mat)
    assert np.trace(rho_n @ dm).real == pytest.approx(h.own_mass(), abs=1e-12)


def test_cond_projector_blocks(two_state):
    u_word = np.array([0, 1, 0, 0, 1])
    h = cond_typical_projector(two_state, u_word, 0.2)
    assert h.n == 5
    assert sorted(len(b.positions) for b in h.blocks) == [2, 3]
    dm = h.dense()
    # product of per-block traces
    count, _ = h.trace()
    assert np.trace(dm).real == pytest.approx(count)


def test_wilson_interval_sanity():
    lo, hi = wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert wilson_interval(0, 0) == (0.0, 1.0)
    lo2, hi2 = wilson_interval(1000, 1000)
    assert lo2 > 0.99 and hi2 == 1.0


def test_verify_trace_bounds_masses_grow(two_state, rng):
    rep = verify_trace_bounds(two_state, AuxChannel.bsc(0.1), [6, 10], 0.12,
                              trials=400, rng=rng)
    assert rep.mass_nondecreasing
    mc = [r for r in rep.rows if r.quantity == "retained_mass_mc"]
    exact = [r for r in rep.rows if r.quantity == "retained_mass_exact"]
    for m, e in zip(mc, exact):
        assert m.ci_low - 1e-9 <= e.value <= m.ci_high + 1e-9
    assert np.isfinite(rep.c_fit)


def test_trace_bounds_csv_roundtrip(two_state, rng, tmp_path):
    rep = verify_trace_bounds(two_state, None, [6], 0.12, trials=100, rng=rng)
    path = tmp_path / "bounds.csv"
    rep.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "n,delta,quantity,value,ci_low,ci_high"
    assert len(lines) == len(rep.rows) + 1
    assert "c_fit" in rep.summary()


def test_lemma3_edge_cases(rng):
    # B = identity: eps = 0, bound is 1 + log2(D + 1) >= log2 D = max entropy
    rep = lemma3_check(4, 200, rng)
    assert rep.violations == 0
    assert rep.max_slack <= 0.0
    with pytest.raises(EnvelopeExceeded):
        lemma3_check(32, 1, rng)


def test_build_g_identity_channel_pins_down_x(two_state):
    res = build_g(two_state, AuxChannel.identity(2, 2), 8, 0.2, 0.1)
    assert res.residual_mass <= 0.1 + 1e-12
    assert not res.stalled
    # the classes track the word closely, so the conditional entropy sits far
    # below H(X) = 1 and well above the H(X|U) = 0 target only by the
    # delta-window slack
    assert res.targets["h_x_given_u"] == pytest.approx(0.0, abs=1e-12)
    assert res.h_x_given_g <= 0.55
    blind = build_g(two_state, AuxChannel.constant(2, 2), 8, 0.2, 0.1)
    assert res.h_x_given_g < blind.h_x_given_g - 0.3


def test_build_g_constant_channel_reveals_nothing(two_state):
    res = build_g(two_state, AuxChannel.constant(2, 2), 8, 0.2, 0.1)
    hx = shannon_entropy(two_state.probs)
    # one catch-all class: conditional entropy stays near H(X)
    assert res.h_x_given_g >= hx - 0.25
    assert res.h_x_given_g <= hx + 1e-9


def test_build_g_envelope(two_state):
    with pytest.raises(EnvelopeExceeded):
        build_g(two_state, AuxChannel.identity(2, 2), 21, 0.1, 0.1)
