"""Tests for adversary policies, protocol audits, and the lemma suite."""

import dataclasses
import json
import math

import numpy as np
import pytest

import qpiplab.audit as audit
import qpiplab.pcalg as pa
import qpiplab.polycode as pc
import qpiplab.qcore as qc
import qpiplab.qpip as qpip


def one_qubit_circuit(tag_name: str) -> qpip.CircuitIR:
    return qpip.CircuitIR(1, 2, (qpip.CircuitGate(pa.GateTag(tag_name),
                                                  (0,)),))


# ----- adversary policies


def test_policy_kinds_build_provers():
    policies = [
        audit.AdversaryPolicy.honest(),
        audit.AdversaryPolicy.fixed_pauli(
            {0: [(0, pa.SymbolicPauli(2, [1, 0], [0, 0]))]}, name="px"),
        audit.AdversaryPolicy.random_unitary((2,), seed=5),
        audit.AdversaryPolicy.scripted([], misreport_round=2),
        audit.AdversaryPolicy.zeno_demo(e=1, n_per=10),
    ]
    for pol in policies:
        prover = pol.build()
        assert isinstance(prover, qpip.ProverImpl)
    assert policies[1].build().name == "px"


def test_policy_rejects_unknown_kind():
    with pytest.raises(ValueError, match="kind"):
        audit.AdversaryPolicy(kind="omniscient", name="x")


def test_policy_builds_are_independent():
    pol = audit.AdversaryPolicy.random_unitary((2,), seed=9)
    assert pol.build() is not pol.build()


def test_policy_context_exposes_no_verifier_secrets():
    fields = {f.name for f in dataclasses.fields(qpip.PolicyContext)}
    assert fields == {"phase", "round_index", "block_wires", "env_wires",
                      "rng"}


def test_zeno_circuit_shape():
    circ = audit.zeno_demo_circuit(1, n_per=4)
    assert circ.n == 1 and circ.wire_dim == 2
    assert len(circ.gates) == 15 * 4 - 1
    for gate in circ.gates:
        assert isinstance(gate.op, qc.UnitaryMatrix)
        assert np.allclose(gate.op.entries, np.eye(2))


def test_zeno_policy_applies_small_rotations():
    pol = audit.AdversaryPolicy.zeno_demo(e=1, n_per=10, phi=0.3)
    prover = pol.build()
    shape = qc.RegisterShape((2, 2))
    state = qc.basis_state(shape, (0, 0))
    ctx = qpip.PolicyContext(phase="send", round_index=1,
                             block_wires=((0, 1),), env_wires=(),
                             rng=qc.make_rng(0))
    out = prover.policy(state, ctx)
    overlap = abs(np.vdot(state.amplitudes, out.amplitudes))
    assert math.cos(0.03) - 1e-12 <= overlap <= 1.0


# ----- protocol configs and reports


def test_protocol_config_validation():
    circ = audit.clifford_demo_circuit()
    with pytest.raises(ValueError, match="mode"):
        audit.ProtocolConfig(mode="teleport", circuit=circ, inputs=(0, 0))
    with pytest.raises(ValueError, match="disagree"):
        audit.ProtocolConfig(mode="poly", circuit=circ, inputs=(0, 0))


def test_protocol_config_reference_and_bounds():
    cfg = audit.ProtocolConfig(mode="clifford",
                               circuit=audit.clifford_demo_circuit(),
                               inputs=(1, 0))
    assert cfg.reference() == (1,)
    assert cfg.epsilon == 0.5 and cfg.bound == 0.5
    biased = audit.ProtocolConfig(mode="clifford",
                                  circuit=audit.biased_clifford_circuit(0.3),
                                  inputs=(0,))
    assert biased.reference() is None
    assert biased.bound == pytest.approx(0.8)
    poly = audit.ProtocolConfig(mode="poly",
                                circuit=audit.poly_demo_circuit(),
                                inputs=(3,))
    assert poly.reference() == (0,)
    assert poly.epsilon == 0.25


def test_wilson_interval_basics():
    lo, hi = audit.wilson_interval(50, 100)
    assert lo < 0.5 < hi
    assert audit.wilson_interval(0, 0) == (0.0, 1.0)
    lo0, hi0 = audit.wilson_interval(0, 40)
    assert lo0 == 0.0 and hi0 < 0.15


def test_experiment_report_validation():
    good = dict(trials=10, accept_rate=0.5, wrong_accept_rate=0.1,
                abort_rate=0.4, bound=0.5, wilson_accept=(0.2, 0.8),
                wilson_wrong=(0.0, 0.4),
                per_policy={"honest": {"trials": 10, "accept": 5,
                                       "wrong_accept": 1, "abort": 4}},
                seeds=(1,))
    rep = audit.ExperimentReport(**good)
    assert "evidence" in rep.note
    with pytest.raises(ValueError, match=r"\[0, 1\]"):
        audit.ExperimentReport(**{**good, "accept_rate": 1.5})
    with pytest.raises(ValueError, match="interval"):
        audit.ExperimentReport(**{**good, "wilson_accept": (0.9, 0.2)})
    bad_counts = {**good,
                  "per_policy": {"honest": {"trials": 7, "accept": 5,
                                            "wrong_accept": 1, "abort": 1}}}
    with pytest.raises(ValueError, match="counts"):
        audit.ExperimentReport(**bad_counts)


def test_report_dict_is_json_ready():
    cfg = audit.ProtocolConfig(mode="clifford",
                               circuit=one_qubit_circuit("H"), inputs=(0,))
    rep = audit.estimate_completeness(cfg, 30, qc.make_rng(2))
    blob = json.dumps(rep.to_dict())
    assert "wilson_accept" in blob


# ----- completeness estimation


def test_completeness_deterministic_circuit_is_exact():
    cfg = audit.ProtocolConfig(mode="clifford",
                               circuit=audit.clifford_demo_circuit(),
                               inputs=(1, 0))
    rep = audit.estimate_completeness(cfg, 120, qc.make_rng(5))
    assert rep.accept_rate == 1.0
    assert rep.wrong_accept_rate == 0.0
    assert rep.abort_rate == 0.0


def test_completeness_tracks_circuit_bias():
    cfg = audit.ProtocolConfig(mode="clifford",
                               circuit=audit.biased_clifford_circuit(0.2),
                               inputs=(0,), target=(1,))
    rep = audit.estimate_completeness(cfg, 2500, qc.make_rng(7))
    sigma = math.sqrt(0.2 * 0.8 / 2500)
    assert abs(rep.accept_rate - 0.8) < 3 * sigma + 1e-9
    assert rep.wilson_accept[0] < 0.8 < rep.wilson_accept[1]


def test_completeness_poly_engine_is_exact():
    cfg = audit.ProtocolConfig(mode="poly",
                               circuit=audit.poly_demo_circuit(),
                               inputs=(3,))
    rep = audit.estimate_completeness(cfg, 80, qc.make_rng(3))
    assert rep.accept_rate == 1.0
    assert rep.abort_rate == 0.0


def test_trial_runner_is_deterministic_across_jobs():
    cfg = audit.ProtocolConfig(mode="clifford",
                               circuit=one_qubit_circuit("H"), inputs=(0,))
    rep1 = audit.estimate_completeness(cfg, 70, qc.make_rng(13), jobs=1)
    rep2 = audit.estimate_completeness(cfg, 70, qc.make_rng(13), jobs=4)
    assert rep1.per_policy == rep2.per_policy
    assert rep1.seeds == rep2.seeds


# ----- soundness estimation


def test_soundness_fixed_pauli_matches_exact_rates():
    circ = qpip.CircuitIR(2, 2, (qpip.CircuitGate(pa.GateTag("CNOT"),
                                                  (0, 1)),))
    cfg = audit.ProtocolConfig(mode="clifford", circuit=circ,
                               inputs=(1, 1))
    attack = audit.AdversaryPolicy.fixed_pauli(
        {2: [(0, pa.SymbolicPauli(2, [1, 0], [0, 0]))]}, name="x-data")
    rep = audit.estimate_soundness(cfg, attack, 900, qc.make_rng(21))
    sigma_w = math.sqrt((4 / 15) * (11 / 15) / 900)
    sigma_a = math.sqrt((8 / 15) * (7 / 15) / 900)
    assert abs(rep.wrong_accept_rate - 4 / 15) < 4 * sigma_w
    assert abs(rep.abort_rate - 8 / 15) < 4 * sigma_a
    assert rep.bound == 0.5


def test_soundness_breaks_down_per_policy():
    cfg = audit.ProtocolConfig(mode="clifford",
                               circuit=one_qubit_circuit("H"), inputs=(0,))
    pols = [audit.AdversaryPolicy.honest(),
            audit.AdversaryPolicy.random_unitary((2,), seed=8)]
    rep = audit.estimate_soundness(cfg, pols, 60, qc.make_rng(4))
    assert set(rep.per_policy) == {"honest", "random-unitary"}
    assert rep.trials == 120
    assert rep.per_policy["honest"]["abort"] == 0
    assert len(rep.seeds) == 2


def test_zeno_policy_runs_against_broken_variant():
    circ = audit.zeno_demo_circuit(1, n_per=6)
    cfg = audit.ProtocolConfig(mode="clifford", circuit=circ, inputs=(1,),
                               e=1, broken_variant=True)
    pol = audit.AdversaryPolicy.zeno_demo(e=1, n_per=6, phi=0.45)
    rep = audit.estimate_soundness(cfg, pol, 40, qc.make_rng(17))
    counts = rep.per_policy["zeno-demo"]
    assert counts["trials"] == 40
    assert counts["accept"] + counts["wrong_accept"] + counts["abort"] == 40


# ----- blindness audits


def test_blindness_clifford_exact_is_flat():
    pair = ((one_qubit_circuit("H"), (0,)), (one_qubit_circuit("K"), (1,)))
    rep = audit.blindness_audit("clifford", [pair], key_average="exact")
    assert rep.max_distance < 1e-8
    assert rep.passed
    assert len(rep.distances["pair0"]) == 2
    assert max(rep.distances["pair0-mixed-a"]) < 1e-8


def test_blindness_poly_exact_hides_the_input():
    rep = audit.blindness_audit("poly", [((None, (0,)), (None, (3,)))],
                                key_average="exact")
    assert rep.max_distance < 1e-8
    assert max(rep.distances["pair0-mixed"]) < 1e-8


def test_blindness_clifford_sampled_converges():
    pair = ((one_qubit_circuit("H"), (0,)), (one_qubit_circuit("K"), (1,)))
    rep = audit.blindness_audit("clifford", [pair], key_average="sampled",
                                rng=qc.make_rng(3), trials=10_000)
    assert rep.max_distance < 0.02
    assert rep.trials == 10_000


def test_blindness_sampled_shrinks_with_trials():
    pair = ((one_qubit_circuit("H"), (0,)), (one_qubit_circuit("K"), (1,)))
    small = audit.blindness_audit("clifford", [pair],
                                  key_average="sampled",
                                  rng=qc.make_rng(6), trials=2000)
    large = audit.blindness_audit("clifford", [pair],
                                  key_average="sampled",
                                  rng=qc.make_rng(6), trials=8000)
    d_small = np.mean(small.distances["pair0"])
    d_large = np.mean(large.distances["pair0"])
    ratio = d_small / d_large
    assert 1.3 < ratio < 3.2


def test_blindness_poly_sampled_reports_correction_rounds():
    tof = audit.toffoli_demo_circuit()
    rep = audit.blindness_audit("poly",
                                [((tof, (2, 3, 0)), (tof, (1, 4, 2)))],
                                key_average="sampled",
                                rng=qc.make_rng(3), trials=800)
    (key,) = rep.distances.keys()
    assert key.startswith("pair0-round")
    assert len(rep.distances[key]) == 3
    assert rep.max_distance < 0.12


def test_blindness_rejects_unknown_average_and_big_views():
    pair = ((one_qubit_circuit("H"), (0,)), (one_qubit_circuit("K"), (1,)))
    with pytest.raises(ValueError, match="key_average"):
        audit.blindness_audit("clifford", [pair], key_average="guess")
    wide = qpip.CircuitIR(7, 2, ())
    with pytest.raises(ValueError, match="cap"):
        audit.blindness_audit("clifford", [((wide, (0,) * 7),
                                            (wide, (1,) + (0,) * 6))],
                              key_average="exact")


def test_universal_pair_shares_the_circuit_and_hides_programs():
    desc_a = [("F", (0,)), ("SUM", (0, 1))]
    desc_b = [("SUM", (1, 0)), ("F", (1,))]
    (circ_a, in_a), (circ_b, in_b) = audit.universal_blindness_pair(
        desc_a, desc_b, 2, 3, (2, 4))
    assert circ_a is circ_b
    assert len(in_a) == len(in_b) == circ_a.n
    assert in_a != in_b
    rep = audit.blindness_audit("poly", [((circ_a, in_a), (circ_b, in_b))],
                                key_average="exact")
    assert rep.max_distance < 1e-8


# ----- confidence audits


def test_confidence_honest_prover_is_perfect():
    rep = audit.confidence_audit("clifford",
                                 audit.AdversaryPolicy.honest(),
                                 input_digit=0)
    assert rep.beta == pytest.approx(1.0, abs=1e-9)
    assert rep.distance < 1e-9
    assert rep.bound == pytest.approx(0.5, abs=1e-9)


def test_confidence_aux_flip_exact_values():
    flip = audit.AdversaryPolicy.fixed_pauli(
        {0: [(0, pa.SymbolicPauli(2, [0, 1], [0, 0]))]}, name="aux-flip")
    rep = audit.confidence_audit("clifford", flip, input_digit=0)
    assert rep.beta == pytest.approx(7 / 15, abs=1e-9)
    assert rep.distance == pytest.approx(4 / 7, abs=1e-9)
    assert rep.bound == pytest.approx(15 / 14, abs=1e-9)
    assert rep.distance <= rep.bound + 1e-9
    assert rep.slack > 0


def test_confidence_poly_phase_attack_is_invisible():
    phase = audit.AdversaryPolicy.fixed_pauli(
        {0: [(0, pa.SymbolicPauli(5, [0, 0, 0], [1, 2, 3]))]},
        name="phase-only")
    rep = audit.confidence_audit("poly", phase, input_digit=2)
    assert rep.beta == pytest.approx(1.0, abs=1e-9)
    assert rep.distance < 1e-9


def test_confidence_poly_footprint_attack_exact_values():
    foot = audit.AdversaryPolicy.fixed_pauli(
        {0: [(0, pa.SymbolicPauli(5, [1, 1, 1], [0, 0, 0]))]},
        name="uniform-x")
    rep = audit.confidence_audit("poly", foot, input_digit=0)
    assert rep.beta == pytest.approx(0.25, abs=1e-9)
    assert rep.distance == pytest.approx(1.0, abs=1e-9)
    assert rep.bound == pytest.approx(2.0, abs=1e-9)
    assert rep.distance <= rep.bound


def test_confidence_refuses_vacuous_bounds():
    lone = audit.AdversaryPolicy.fixed_pauli(
        {0: [(0, pa.SymbolicPauli(5, [1, 0, 0], [0, 0, 0]))]},
        name="single-x")
    with pytest.raises(ValueError, match="floor"):
        audit.confidence_audit("poly", lone, input_digit=0)


def test_confidence_rejects_non_analytic_policies():
    with pytest.raises(ValueError, match="Pauli"):
        audit.confidence_audit(
            "clifford", audit.AdversaryPolicy.random_unitary((2,), seed=1))
    multi = audit.AdversaryPolicy.fixed_pauli(
        {0: [(1, pa.SymbolicPauli(2, [1, 0], [0, 0]))]}, name="wrong-block")
    with pytest.raises(ValueError, match="single-block"):
        audit.confidence_audit("clifford", multi)
    with pytest.raises(ValueError, match="mode"):
        audit.confidence_audit("teleport", audit.AdversaryPolicy.honest())


def test_confidence_report_serializes():
    rep = audit.confidence_audit("clifford",
                                 audit.AdversaryPolicy.honest())
    blob = json.dumps(rep.to_dict())
    assert "slack" in blob


# ----- lemma suite


def test_lemma_suite_all_pass():
    ledger = audit.lemma_suite(seed=0)
    assert ledger.passed
    assert tuple(r.name for r in ledger.results) == audit.LEMMA_COVERAGE
    assert all(r.residual < 1e-8 for r in ledger.results)
    assert len(ledger.to_lines()) == len(audit.LEMMA_COVERAGE)


def test_lemma_suite_is_deterministic():
    first = audit.lemma_suite(seed=11)
    second = audit.lemma_suite(seed=11)
    assert first.results == second.results


def test_lemma_suite_parallel_matches_serial():
    scope = ("logical-x", "pauli-twirl", "clifford-mixing",
             "interpolation-weights", "unitary-commutation")
    serial = audit.lemma_suite(scope=scope, seed=3, jobs=1)
    parallel = audit.lemma_suite(scope=scope, seed=3, jobs=3)
    assert serial.results == parallel.results


def test_lemma_suite_fault_injection_localizes():
    ledger = audit.lemma_suite(c_vector=(4, 0, 2), seed=0)
    failed = {r.name for r in ledger.failures()}
    assert failed == {"interpolation-weights", "logical-fourier"}
    by_name = {r.name: r for r in ledger.results}
    assert by_name["logical-z"].passed
    assert by_name["logical-x"].passed
    assert by_name["correlated-z"].passed
    assert by_name["interpolation-weights"].residual >= 1.0


def test_lemma_suite_scope_selection():
    ledger = audit.lemma_suite(scope="logical-x,logical-z", seed=0)
    assert [r.name for r in ledger.results] == ["logical-x", "logical-z"]
    with pytest.raises(ValueError, match="unknown lemma"):
        audit.lemma_suite(scope="great-unified-lemma")


def test_lemma_suite_flags_missing_checks(monkeypatch):
    trimmed = {k: v for k, v in audit._LEMMA_CHECKS.items()
               if k != "pauli-twirl"}
    monkeypatch.setattr(audit, "_LEMMA_CHECKS", trimmed)
    ledger = audit.lemma_suite(scope="pauli-twirl", seed=0)
    assert not ledger.passed
    assert ledger.results[0].detail == "listed but not implemented"


def test_lemma_suite_flags_unlisted_checks(monkeypatch):
    padded = dict(audit._LEMMA_CHECKS)
    padded["shadow-check"] = lambda rng, cvec, p: 0.0
    monkeypatch.setattr(audit, "_LEMMA_CHECKS", padded)
    with pytest.raises(RuntimeError, match="coverage"):
        audit.lemma_suite(scope="logical-x", seed=0)


def test_lemma_ledger_serializes():
    ledger = audit.lemma_suite(scope="logical-x", seed=0)
    blob = json.dumps(ledger.to_dict())
    assert "residual" in blob
