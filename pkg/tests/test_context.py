import pytest

from conftest import PKDD
from cubeinterest.context import (
    BeliefStore,
    QueryHistory,
    SessionContext,
    ValueInterval,
    filter_history_same_measures,
    known_cells,
    load_expected_labels,
    load_expected_values,
)
from cubeinterest.engine import CellSet, evaluate
from cubeinterest.errors import HistoryConsistencyError
from cubeinterest import qlang


def _belief(cube, text):
    return qlang.parse_belief(text, cube)


def test_append_and_length(pkdd_cube, pkdd_history):
    history = QueryHistory()
    for q in pkdd_history:
        history.append(q)
    assert len(history) == 4
    assert [e.seq for e in history] == [0, 1, 2, 3]


def test_append_caches_consistent_result(pkdd_cube, pkdd_history):
    history = QueryHistory()
    result = evaluate(pkdd_history[0])
    history.append(pkdd_history[0], result=result)
    assert history.entries[0].result is result


def test_append_rejects_mismatched_result(pkdd_cube, pkdd_history):
    wrong = evaluate(pkdd_history[1])
    history = QueryHistory()
    with pytest.raises(HistoryConsistencyError):
        history.append(pkdd_history[0], result=wrong)


def test_append_rejects_tampered_measures(pkdd_history):
    result = evaluate(pkdd_history[0])
    tampered = CellSet(result.dims, result.levels, result.coords,
                       {k: v + 1.0 for k, v in result.measures.items()})
    history = QueryHistory()
    with pytest.raises(HistoryConsistencyError):
        history.append(pkdd_history[0], result=tampered)


def test_sessions_remain_separable(pkdd_history):
    history = QueryHistory()
    history.append(pkdd_history[0], session_id="s1")
    history.append(pkdd_history[1], session_id="s2")
    history.append(pkdd_history[2], session_id="s1")
    assert history.sessions() == ["s1", "s2"]
    assert [e.session_id for e in history] == ["s1", "s2", "s1"]


def test_known_cells_majority_belief_threshold(pkdd_cube):
    store = BeliefStore([
        _belief(pkdd_cube,
                "P(Amt IN [100..200) | District=Olomouc, Year=1996) = 0.30"),
        _belief(pkdd_cube,
                "P(Amt IN [80..100) | District=Olomouc, Year=1996) = 0.70"),
    ])
    known = known_cells(store, 0.5)
    assert len(known) == 1  # the 70% statement clears the bar
    assert known == {store.statements[0].anchor}


def test_known_cells_extremes(pkdd_cube):
    store = BeliefStore([
        _belief(pkdd_cube, "P(Amt IN {1} | District=Olomouc) = 0.2"),
        _belief(pkdd_cube, "P(Amt IN {2} | District=Brno) = 0.6"),
    ])
    assert len(known_cells(store, 0.0)) == 2
    assert len(known_cells(store, 1.0)) == 0


def test_known_cells_monotone_in_pi(pkdd_cube):
    store = BeliefStore([
        _belief(pkdd_cube, f"P(Amt IN {{{i}}} | District=Olomouc, "
                           f"Month=1996-{i:02d}) = 0.{i}")
        for i in range(1, 10)
    ])
    sizes = [len(known_cells(store, pi)) for pi in
             (0.0, 0.2, 0.4, 0.6, 0.8, 1.0)]
    assert sizes == sorted(sizes, reverse=True)


def test_known_cells_ignores_label_beliefs(pkdd_cube):
    store = BeliefStore([
        _belief(pkdd_cube, "P(label(Amt) = High | District=Olomouc) = 0.9"),
    ])
    assert known_cells(store, 0.5) == set()


def test_belief_store_grouping(pkdd_cube):
    b1 = _belief(pkdd_cube, "P(Amt IN {1} | District=Olomouc) = 0.2")
    b2 = _belief(pkdd_cube, "P(Amt IN {2} | District=Olomouc) = 0.3")
    b3 = _belief(pkdd_cube, "P(Amt IN {2} | District=Brno) = 0.3")
    store = BeliefStore([b1, b2, b3])
    assert len(store.at(b1.anchor)) == 2
    assert len(store.at(b3.anchor)) == 1
    # probabilities need not sum to 1 per anchor
    assert sum(s.probability for s in store.at(b1.anchor)) == pytest.approx(0.5)


def test_filter_history_same_measures(pkdd_cube, pkdd_history, pkdd_query):
    assert filter_history_same_measures(pkdd_history, pkdd_query) == \
        pkdd_history
    q_sum = qlang.parse_query(
        "SELECT sum(Amt) BY Account.District, Date.Month", pkdd_cube)
    assert filter_history_same_measures(pkdd_history, q_sum) == []
    mixed = pkdd_history + [q_sum]
    assert filter_history_same_measures(mixed, q_sum) == [q_sum]
    assert filter_history_same_measures(mixed, pkdd_query) == pkdd_history


def test_value_interval_containment():
    iv = ValueInterval(100.0, 200.0, True, False)
    assert iv.contains(100.0)
    assert iv.contains(199.999)
    assert not iv.contains(200.0)
    assert not iv.contains(99.0)


def test_load_expected_values(pkdd_cube):
    values = load_expected_values(PKDD / "expected_values.csv", pkdd_cube)
    assert len(values) == 13
    date = pkdd_cube.dim("Date")
    account = pkdd_cube.dim("Account")
    anchor = (
        ("District", account.member("District", "Olomouc").id),
        ("ALL", 0),
        ("Month", date.member("Month", "1996-09").id),
    )
    assert values.lookup(anchor) == {"Amt": 20048.0}


def test_load_expected_labels(pkdd_cube):
    labels = load_expected_labels(PKDD / "expected_labels.csv", pkdd_cube)
    assert len(labels) == 3
    account = pkdd_cube.dim("Account")
    date = pkdd_cube.dim("Date")
    anchor = (
        ("District", account.member("District", "Olomouc").id),
        ("ALL", 0),
        ("Month", date.member("Month", "1996-12").id),
    )
    assert labels.lookup(anchor) == {"Amt": "High"}


def test_session_context_loaders(pkdd_cube):
    ctx = SessionContext(pkdd_cube)
    ctx.load_session_file(PKDD / "session.txt")
    ctx.load_belief_file(PKDD / "beliefs.txt")
    ctx.load_goal_file(PKDD / "goal.txt")
    ctx.load_label_rules(PKDD / "label_rules.txt")
    assert len(ctx.history) == 4
    assert len(ctx.beliefs) == 4
    assert len(ctx.goals) == 1
    assert ctx.label_domain.labels == ("Low", "Mid", "High")
    assert "Amt" in ctx.labeling_schemes


def test_history_replay_round_trip(pkdd_cube, pkdd_history):
    """Serializing the history as text and re-parsing reproduces it."""
    printed = [qlang.print_query(q) for q in pkdd_history]
    reparsed = [qlang.parse_query(t, pkdd_cube) for t in printed]
    assert reparsed == pkdd_history
