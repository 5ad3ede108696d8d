"""Smoke test for the Python extension.

Build and install first:
    maturin build --release -m crates/python/Cargo.toml -o target/wheels
    pip install --force-reinstall target/wheels/qutrit_chain-*.whl
Then run with `python python/smoke_test.py` or `pytest python/`.
"""

import math

import pytest

import qutrit_chain as qc

GENERIC = (0.5, 0.6, math.sqrt(0.39))


def test_closed_forms():
    ch = qc.make_channel(*GENERIC)
    assert qc.p_single(ch) == pytest.approx(0.75, abs=1e-15)
    assert qc.p_sctp(ch, 3) == pytest.approx(0.421875, abs=1e-15)
    assert qc.p_gctp4(ch) == pytest.approx(0.67935, abs=1e-12)
    assert qc.p_gctp4_max(0.5) == pytest.approx(0.6796875, abs=1e-15)
    assert qc.p_pgctp(ch, 2) == pytest.approx(qc.p_gctp4(ch) ** 2, abs=1e-15)


def test_channel_validation_is_strict():
    with pytest.raises(ValueError):
        qc.make_channel(0.6, 0.5, math.sqrt(0.39))
    with pytest.raises(ValueError):
        qc.make_channel(0.57735, 0.57735, 0.57735)


def test_exact_and_monte_carlo_agree():
    ch = qc.make_channel(*GENERIC)
    psi = qc.make_state(0.3 + 0.1j, -0.5 + 0.2j, 0.4 - 0.6j)
    proto = qc.Protocol.gctp4()
    exact = qc.exact_success_probability(proto, ch, psi)
    assert exact == pytest.approx(0.67935, abs=1e-10)

    dist = qc.enumerate(proto, ch, psi)
    assert len(dist["class_probabilities"]) == 10
    assert sum(dist["class_probabilities"].values()) == pytest.approx(1.0, abs=1e-12)

    trials = 20_000
    mc = qc.simulate(proto, ch, psi, trials, 3)
    sigma = math.sqrt(exact * (1 - exact) / trials)
    assert abs(mc["frequency"] - exact) < 3 * sigma
    assert mc["min_fidelity"] == pytest.approx(1.0, abs=1e-9)
    assert mc == qc.simulate(proto, ch, psi, trials, 3)


def test_single_run_reports_fidelity():
    psi = qc.haar_random_state(5)
    out = qc.run(qc.Protocol.pgctp(2), qc.Channel.maximally_entangled(), psi, 9)
    assert out["success"]
    assert out["fidelity"] == pytest.approx(1.0, abs=1e-12)
    assert qc.fidelity(out["final_state"], psi) == pytest.approx(1.0, abs=1e-12)
    assert len(out["messages"]) == 6
    assert len(out["classes"]) == 2


def test_sweep_rows():
    rows = qc.sweep(5, [0.5])
    by_env = {r[1]: r for r in rows}
    assert by_env["max"][3] == pytest.approx(0.013363461010158062, rel=1e-14)
    assert by_env["max"][4] == pytest.approx(0.14505957972141914, rel=1e-14)


def test_state_helpers():
    s = qc.State([1, 1j, 0])
    assert s.n_qutrits == 1
    assert sum(abs(a) ** 2 for a in s.amplitudes) == pytest.approx(1.0)
    assert len(qc.tensor(s, s)) == 9


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
