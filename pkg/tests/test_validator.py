"""Independent schedule checks and the exhaustive non-delay oracle."""

import pytest

from fafsp.generator import ScenarioConfig, generate_instance
from fafsp.rules import BUILTIN_IDS, RuleSpec
from fafsp.sim import ArcRecord, Schedule, run_dispatch, total_tardiness
from fafsp.validator import (ARRIVAL_BREACH, DELIVERY_MISMATCH, MACHINE_OVERLAP,
                             PRECEDENCE, SETUP_MISMATCH, TARDINESS_MISMATCH,
                             UNASSIGNED, OracleLimitError, brute_force_optimum,
                             validate_schedule)

from helpers import make_instance, minimal_instance, tiny_oracle_instance


def _two_stage_instance():
    return make_instance("pa", [(0, 10.0, [([{0: 5.0}], {1: 3.0})])])


def _sched(arcs, ft, tt, n_jobs=2, n_orders=1):
    return Schedule(tuple(arcs), ft, tt, n_jobs, n_orders)


def test_clean_rollout_validates():
    inst = _two_stage_instance()
    sched = run_dispatch(inst, RuleSpec.builtin("EDD"))
    assert validate_schedule(inst, sched) == []


def test_assembly_starting_early_is_precedence():
    inst = _two_stage_instance()
    sched = _sched([ArcRecord(0, 0, 0.0, 0.0, 5.0), ArcRecord(1, 1, 0.0, 4.0, 7.0)],
                   {0: 7.0}, {0: 0.0})
    kinds = {v.kind for v in validate_schedule(inst, sched)}
    assert kinds == {PRECEDENCE}


def test_overlap_on_machine_detected():
    inst = make_instance("pa", [(0, 50.0, [([{0: 4.0}, {0: 4.0}], {1: 1.0})])])
    sched = _sched([ArcRecord(0, 0, 0.0, 0.0, 4.0), ArcRecord(1, 0, 0.0, 2.0, 6.0),
                    ArcRecord(2, 1, 0.0, 6.0, 7.0)],
                   {0: 7.0}, {0: 0.0}, n_jobs=3)
    kinds = {v.kind for v in validate_schedule(inst, sched)}
    assert MACHINE_OVERLAP in kinds


def test_wrong_setup_detected():
    inst = make_instance("pa", [(0, 50.0, [([{0: 4.0}, {0: 4.0}], {1: 1.0})])],
                         setup=1.0)
    sched = _sched([ArcRecord(0, 0, 0.0, 0.0, 4.0), ArcRecord(1, 0, 0.0, 4.0, 8.0),
                    ArcRecord(2, 1, 0.0, 8.0, 9.0)],
                   {0: 9.0}, {0: 0.0}, n_jobs=3)
    kinds = {v.kind for v in validate_schedule(inst, sched)}
    assert SETUP_MISMATCH in kinds           # job 1 should charge 1.0 after job 0


def test_arrival_breach_detected():
    inst = make_instance("pa", [(3.0, 50.0, [([{0: 5.0}], {1: 3.0})])])
    sched = _sched([ArcRecord(0, 0, 0.0, 0.0, 5.0), ArcRecord(1, 1, 0.0, 5.0, 8.0)],
                   {0: 8.0}, {0: 0.0})
    kinds = {v.kind for v in validate_schedule(inst, sched)}
    assert ARRIVAL_BREACH in kinds


def test_delivery_and_tardiness_mismatches():
    inst = _two_stage_instance()
    sched = _sched([ArcRecord(0, 0, 0.0, 0.0, 5.0), ArcRecord(1, 1, 0.0, 5.0, 8.0)],
                   {0: 9.0}, {0: 5.0})
    kinds = {v.kind for v in validate_schedule(inst, sched)}
    assert DELIVERY_MISMATCH in kinds        # recorded ft 9 != latest assembly ct 8
    assert TARDINESS_MISMATCH in kinds       # tt 5 != max(0, 9 - 10)


def test_unassigned_and_unqualified():
    inst = _two_stage_instance()
    missing = _sched([ArcRecord(0, 0, 0.0, 0.0, 5.0)], {0: 5.0}, {0: 0.0})
    assert any(v.kind == UNASSIGNED for v in validate_schedule(inst, missing))
    wrong = _sched([ArcRecord(0, 1, 0.0, 0.0, 5.0), ArcRecord(1, 1, 0.0, 5.0, 8.0)],
                   {0: 8.0}, {0: 0.0})
    assert any(v.kind == UNASSIGNED and "unqualified" in v.message
               for v in validate_schedule(inst, wrong))


def test_validator_clean_on_random_rollouts():
    rules = [RuleSpec.builtin(r) for r in ("EDD", "FIFO+EET", "MWKR+SPT")]
    for seed in range(30):
        inst = generate_instance(ScenarioConfig(
            m1=1 + seed % 2, m2=2 + seed % 2, phi=0.6, alpha=3, mu=2.0,
            n_init=2, seed=1000 + seed))
        for rule in rules:
            assert validate_schedule(inst, run_dispatch(inst, rule)) == []


def test_forced_sequence_oracle_matches_any_rule():
    inst = minimal_instance(due=6.0)
    opt, osched = brute_force_optimum(inst)
    for rid in ("EDD", "FIFO+SPT"):
        assert opt == pytest.approx(
            total_tardiness(run_dispatch(inst, RuleSpec.builtin(rid))))
    assert validate_schedule(inst, osched) == []


def test_two_job_due_date_ordering_case():
    # PT {3, 4} on one machine, due {3, 7}: due-date order is on time,
    # the reverse is 4 late; the oracle must find zero
    inst = make_instance("pa", [
        (0, 3.0, [([{0: 3.0}], {1: 0.0})]),
        (0, 7.0, [([{0: 4.0}], {1: 0.0})]),
    ])
    opt, osched = brute_force_optimum(inst)
    assert opt == pytest.approx(0.0)
    assert validate_schedule(inst, osched) == []
    first_proc = [a for a in osched.arcs if a.machine == 0][0]
    assert first_proc.job == 0


def test_oracle_dominates_builtins_on_tiny_instances():
    for k in range(10):
        inst = tiny_oracle_instance(6000 + k)
        opt, osched = brute_force_optimum(inst)
        assert validate_schedule(inst, osched) == []
        for rid in BUILTIN_IDS:
            tt = total_tardiness(run_dispatch(inst, RuleSpec.builtin(rid)))
            assert opt <= tt + 1e-9


def test_oracle_respects_limits():
    inst = generate_instance(ScenarioConfig(m1=2, m2=3, phi=0.8, alpha=5, mu=1.0,
                                            n_init=5, seed=1))
    with pytest.raises(OracleLimitError):
        brute_force_optimum(inst)


def test_oracle_tie_break_is_lexicographic():
    # two identical jobs on one machine: both orders are optimal, the log
    # must start with the smaller job id
    inst = make_instance("pa", [
        (0, 50.0, [([{0: 2.0}], {1: 1.0})]),
        (0, 50.0, [([{0: 2.0}], {1: 1.0})]),
    ])
    _, osched = brute_force_optimum(inst)
    assert osched.arcs[0].job == 0
