"""Rule engine: builtin semantics, DSL equivalence, ranking determinism."""

import numpy as np
import pytest

from fafsp.expr import NodeLimitExceeded, ParseError
from fafsp.generator import ScenarioConfig, generate_instance
from fafsp.rules import (BUILTIN_IDS, RuleInvalid, RuleSpec, builtin_source,
                         eval_priority, load_rule_file, parse_rule, rank_arcs,
                         save_rule_file, validate_rule)
from fafsp.sim import compute_features, feasible_arcs, init_sim, run_dispatch

from helpers import make_instance


class FakeView:
    """Duck-typed FeatureView serving fixed per-arc columns."""

    def __init__(self, table):
        self.table = {k: np.asarray(v, dtype=float) for k, v in table.items()}
        self.now = float(self.table["now"][0]) if "now" in self.table else 0.0

    def arc_columns(self, jobs, machines):
        n = len(jobs)
        base = {name: np.zeros(n) for name in
                ("due", "arrival", "now", "slack", "wait", "et", "n_mach",
                 "ops_rem", "work_rem", "pt", "setup", "avail", "queue", "util")}
        base.update({k: v[:n] for k, v in self.table.items()})
        return base


def test_edd_prefers_earlier_due():
    fv = FakeView({"due": [20.0, 15.0], "now": [0.0, 0.0]})
    best = rank_arcs(RuleSpec.builtin("EDD"), fv, [(0, 0), (1, 0)])
    assert best == (1, 0)


def test_expression_arithmetic():
    fv = FakeView({"pt": [3.0], "setup": [1.0]})
    score = eval_priority(RuleSpec.expression("2*pt + setup"), fv, (0, 0))
    assert score == pytest.approx(7.0)


def test_protected_division_in_priority():
    fv = FakeView({"due": [12.0], "util": [0.0]})
    assert eval_priority(RuleSpec.expression("due/util"), fv, (0, 0)) == 0.0


def test_tie_breaks_on_job_then_machine():
    fv = FakeView({"due": [5.0, 5.0, 5.0]})
    best = rank_arcs(RuleSpec.builtin("EDD"), fv, [(2, 1), (1, 2), (1, 1)])
    assert best == (1, 1)


def test_singleton_arc_wins_regardless_of_rule():
    fv = FakeView({"et": [50.0]})
    rule = RuleSpec.expression("exp(exp(exp(et)))")     # would overflow
    assert rank_arcs(rule, fv, [(3, 2)]) == (3, 2)


def test_nonfinite_score_raises_rule_invalid():
    fv = FakeView({"et": [50.0, 50.0]})
    rule = RuleSpec.expression("exp(exp(exp(et)))")
    with pytest.raises(RuleInvalid, match="job"):
        rank_arcs(rule, fv, [(0, 0), (0, 1)])


def test_builtin_semantics_on_live_state():
    # LWKR prefers the order with less remaining work; MWKR the opposite
    inst = make_instance("pa", [
        (0, 50.0, [([{0: 2.0}], {1: 1.0})]),             # work 3
        (0, 50.0, [([{0: 6.0}], {1: 4.0})]),             # work 10
    ])
    state = init_sim(inst)
    fv = compute_features(state)
    arcs = feasible_arcs(state)
    assert rank_arcs(RuleSpec.builtin("LWKR+SPT"), fv, arcs)[0] == 0
    assert rank_arcs(RuleSpec.builtin("MWKR+SPT"), fv, arcs)[0] == 2
    assert rank_arcs(RuleSpec.builtin("FIFO+SPT"), fv, arcs)[0] == 0  # tie -> job id


def test_spt_vs_eet_machine_choice():
    # machine 1 is faster but busy until t=4; EET takes the slower idle one
    inst = make_instance("ppa", [(0, 50.0, [([{0: 5.0, 1: 3.0}], {2: 1.0})]),
                                 (0, 50.0, [([{1: 4.0}], {2: 1.0})])])
    state = init_sim(inst)
    from fafsp.sim import apply_arc
    apply_arc(state, (2, 1))                    # occupy fast machine until t=4
    fv = compute_features(state)
    arcs = feasible_arcs(state)
    assert arcs == [(0, 0)]
    assert rank_arcs(RuleSpec.builtin("MOPNR+SPT"), fv, arcs) == (0, 0)


def test_builtin_source_parses_for_all_nine():
    for rid in BUILTIN_IDS:
        prog = parse_rule(builtin_source(rid))
        assert prog.n_nodes >= 3


@pytest.mark.parametrize("rid", BUILTIN_IDS)
def test_builtin_expression_equivalence(rid):
    builtin = RuleSpec.builtin(rid)
    encoded = RuleSpec.expression(builtin_source(rid))
    for seed in range(10):
        inst = generate_instance(ScenarioConfig(m1=2, m2=2, phi=0.7, alpha=3,
                                                mu=2.0, n_init=2, seed=300 + seed))
        assert run_dispatch(inst, builtin).arcs == run_dispatch(inst, encoded).arcs


def test_scale_invariance_of_argmin():
    inst = generate_instance(ScenarioConfig(m1=2, m2=3, phi=0.8, alpha=3, mu=2.0,
                                            n_init=3, seed=77))
    base_src = "due - now + 0.5*pt + setup + 0.1*queue"
    rules = {c: RuleSpec.expression(f"({base_src})*{c}") for c in (1.0, 2.0, 10.0, 0.5)}
    state = init_sim(inst)
    from fafsp.sim import _advance, apply_arc
    checked = 0
    while state.done_count < state.t.J:
        jobs, machs = state._arc_arrays()
        if len(jobs):
            fv = compute_features(state)
            arcs = list(zip(jobs.tolist(), machs.tolist()))
            picks = {c: rank_arcs(r, fv, arcs) for c, r in rules.items()}
            assert len(set(picks.values())) == 1
            checked += 1
            apply_arc(state, picks[1.0])
        else:
            _advance(state)
    assert checked > 10


def test_validate_rule_outcomes():
    assert validate_rule("due") is True
    assert validate_rule(RuleSpec.builtin("EDD")) is True
    assert validate_rule("exp(exp(exp(et)))") is False     # overflow witness
    assert validate_rule("min(due,") is False
    assert validate_rule("not_an_accessor + 1") is False


def test_parse_rule_error_surface():
    with pytest.raises(ParseError):
        parse_rule("min(due,")
    with pytest.raises(NodeLimitExceeded):
        parse_rule("1" + "+1" * 600)


def test_rule_file_round_trip(tmp_path):
    path = tmp_path / "rule.txt"
    spec = RuleSpec.expression("due - now + 2*pt", name="my_rule")
    save_rule_file(path, spec, description="urgency plus speed", fitness=42.5)
    loaded = load_rule_file(path)
    assert loaded.name == "my_rule"
    assert loaded.description == "urgency plus speed"
    assert loaded.fitness == 42.5
    assert loaded.spec.source == "due - now + 2*pt"


def test_rule_file_builtin_saved_as_expression(tmp_path):
    path = tmp_path / "edd.txt"
    save_rule_file(path, RuleSpec.builtin("EDD"))
    loaded = load_rule_file(path)
    assert loaded.spec.source == builtin_source("EDD")


def test_eval_priority_builtin_composite():
    fv = FakeView({"due": [15.0], "now": [2.0], "avail": [1.0],
                   "setup": [0.5], "pt": [3.0]})
    score = eval_priority(RuleSpec.builtin("EDD"), fv, (0, 0))
    assert score == (15.0, 2.0 + 0.5 + 3.0)
