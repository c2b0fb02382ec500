"""Acceptance gate: one test per release criterion, each printing a
pass/fail line (run with `pytest tests/test_acceptance.py -v -s`).

Covered: the reference-fixture score vector at its pinned tolerances,
brute-force-oracle equivalence and exact novelty/relevance complementarity
on randomized instances, pinned worked values, metric axioms (the
property-based module re-run wholesale), benchmark scaling bands, and the
parser round-trip corpus.
"""

import time
from contextlib import contextmanager

import pytest

import test_micro_oracle
import test_properties
from conftest import PKDD
from cubeinterest.context import (
    BeliefStore,
    SessionContext,
    known_cells,
    load_expected_values,
)
from cubeinterest.engine import detailed_proxy
from cubeinterest.errors import ParseError, PositionedError
from cubeinterest.harness import (
    BenchConfig,
    interestingness_vector,
    run_benchmark,
)
from cubeinterest.mdm import dimension_from_rows
from cubeinterest.surprise import probability_surprise
from cubeinterest import qlang


@contextmanager
def criterion(number, name):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"\nACCEPTANCE {number} {name}: FAIL")
        raise
    elapsed = time.perf_counter() - start
    print(f"\nACCEPTANCE {number} {name}: PASS ({elapsed:.1f}s)")


def test_criterion_1_reference_fixture_vector(pkdd_cube):
    with criterion(1, "reference-fixture vector"):
        start = time.perf_counter()
        ctx = SessionContext(pkdd_cube)
        ctx.load_session_file(PKDD / "session.txt")
        ctx.expected_values = load_expected_values(
            PKDD / "expected_values.csv", pkdd_cube)
        q = qlang.parse_query((PKDD / "query.txt").read_text().strip(),
                              pkdd_cube)
        report = interestingness_vector(q, ctx)
        elapsed = time.perf_counter() - start
        scores = report.scores
        assert scores["novelty"]["pden"] == pytest.approx(0.70, abs=0.005)
        assert scores["relevance"]["pder"] == pytest.approx(0.30, abs=0.005)
        assert scores["peculiarity"]["syntactic"] == \
            pytest.approx(0.46, abs=0.005)
        assert scores["peculiarity"]["jaccard"] == \
            pytest.approx(0.94, abs=0.005)
        assert scores["surprise"]["value_avg_norm"] == \
            pytest.approx(0.25, abs=0.005)
        # per-pair syntactic distances behind the 0.46 average
        from cubeinterest.peculiarity import query_distance
        history = ctx.history.queries()
        deltas = [query_distance(q, qi) for qi in history]
        assert deltas == pytest.approx([0.5, 0.5, 0.5, 0.33], abs=0.005)
        # Jaccard distance set behind the 2-NN value
        from cubeinterest.peculiarity import jaccard_detailed_distance
        jds = sorted(jaccard_detailed_distance(q, qi) for qi in history)
        assert jds == pytest.approx([0.90, 0.94, 0.98, 1.00], abs=0.005)
        assert elapsed < 5.0, f"reference vector took {elapsed:.1f}s"


def test_criterion_2_micro_oracle_equivalence():
    with criterion(2, "micro-oracle equivalence (100 instances, 1e-9)"):
        start = time.perf_counter()
        for seed in range(100):
            test_micro_oracle.test_metrics_match_oracles(seed)
        elapsed = time.perf_counter() - start
        assert elapsed < 60.0, f"oracle sweep took {elapsed:.1f}s"


def test_criterion_3_complementarity_suite():
    with criterion(3, "relevance + novelty = 1 (exact)"):
        for seed in range(100):
            test_micro_oracle.test_complementarity_exact(seed)


def test_criterion_4_worked_values(pkdd_cube):
    with criterion(4, "pinned worked values"):
        # hierarchy hop distance Athens..Canada = 5/6
        geo = dimension_from_rows("Geo", ["City", "Country", "Continent"], [
            ("Athens", "Greece", "Europe"),
            ("Paris", "France", "Europe"),
            ("Toronto", "Canada", "America"),
        ])
        d = geo.value_distance(geo.member("City", "Athens"),
                               geo.member("Country", "Canada"))
        assert d == pytest.approx(5 / 6, abs=1e-12)

        # strict probability surprise 0.2 + 0.7 = 0.9 for actual 70
        stmts = [
            qlang.parse_belief(
                f"P(Amt IN {{{v}}} | District=Olomouc) = {p}", pkdd_cube)
            for v, p in ((100, 0.2), (80, 0.7), (70, 0.1))
        ]
        assert probability_surprise(stmts, 70.0, "exact") == \
            pytest.approx(0.9, abs=1e-12)

        # a cell holding a 70% belief is known at threshold 0.5
        store = BeliefStore([
            qlang.parse_belief("P(Amt IN [100..200) | District=Olomouc, "
                               "Year=1996) = 0.30", pkdd_cube),
            qlang.parse_belief("P(Amt IN [80..100) | District=Olomouc, "
                               "Year=1996) = 0.70", pkdd_cube),
        ])
        assert len(known_cells(store, 0.5)) == 1

        # a Year filter expands to exactly that year's days at base level
        q = qlang.parse_query(
            "SELECT avg(Amt) BY Account.District WHERE "
            "Date.Year IN {1996}", pkdd_cube)
        atom = detailed_proxy(q).condition.atom_for("Date")
        date = pkdd_cube.dim("Date")
        labels = sorted(date.label_of("Day", v) for v in atom.values)
        assert len(labels) == 366
        assert labels[0] == "1996-01-01" and labels[-1] == "1996-12-31"


def test_criterion_5_metric_axioms():
    with criterion(5, "metric axioms, >=1000 generated cases"):
        cases = 0
        for name in dir(test_properties):
            if not name.startswith("test_"):
                continue
            fn = getattr(test_properties, name)
            fn()
            settings = getattr(fn, "_hypothesis_internal_use_settings", None)
            cases += settings.max_examples if settings else 1
        assert cases >= 1000, f"only {cases} generated cases"
        print(f"  ({cases} generated cases)", end="")


BENCH_METRICS = ("pden", "pder", "jaccard")


def test_criterion_6_scaling_reproduction():
    with criterion(6, "linear scaling bands (desk scale)"):
        start = time.perf_counter()
        report = run_benchmark(BenchConfig(
            base_sizes=(10_000, 100_000, 1_000_000),
            history_sizes=(1, 5, 10),
            seed=7,
            repetitions=7,
        ))
        elapsed = time.perf_counter() - start
        for metric in BENCH_METRICS:
            for kind in ("base_ratios", "history_ratios"):
                for entry in report["scaling"][metric][kind]:
                    lo = 0.5 * entry["size_ratio"]
                    hi = 2.0 * entry["size_ratio"]
                    assert lo <= entry["time_ratio"] <= hi, (
                        f"{metric} {kind} {entry['from']}->{entry['to']}: "
                        f"ratio {entry['time_ratio']:.2f} outside "
                        f"[{lo:.2f}, {hi:.2f}]")
        # more history queries mean more work: medians rise with history
        from cubeinterest.harness import median_time
        for metric in BENCH_METRICS:
            medians = [median_time(report, metric, 1_000_000, h)
                       for h in (1, 5, 10)]
            assert medians == sorted(medians), f"{metric} medians {medians}"
        # goal-based relevance is signature-only: data size must not matter
        gb = [median_time(report, "gbdsr", b, 10)
              for b in (10_000, 100_000, 1_000_000)]
        assert max(gb) / min(gb) < 2.0, f"gbdsr medians {gb}"
        assert elapsed < 600.0, f"bench matrix took {elapsed:.0f}s"
        print(f"  (bench wall time {elapsed:.0f}s)", end="")


ROUND_TRIP_CORPUS = [
    # queries: every aggregate function, multi-aggregate lists, grouping at
    # each level incl. ALL, single- and multi-atom filters at every level
    "SELECT avg(Amt) BY Account.District, Date.Month",
    "SELECT sum(Amt) BY Date.ALL",
    "SELECT count(Amt) BY Account.Account",
    "SELECT min(Amt) BY Account.Region, Date.Year",
    "SELECT max(Amt) BY Status.Status",
    "SELECT avg(Amt), sum(Amt) BY Account.District",
    "SELECT sum(Amt), count(Amt), min(Amt), max(Amt) BY Date.Year",
    "SELECT avg(Amt) BY Account.District, Status.Status, Date.Month",
    "SELECT avg(Amt) BY Account.District WHERE Date.Year IN {1996}",
    "SELECT avg(Amt) BY Account.District WHERE Date.Year IN {1995, 1996}",
    "SELECT avg(Amt) BY Date.Month WHERE Date.Month IN {1995-03, 1995-04}",
    "SELECT avg(Amt) BY Date.Month WHERE Date.Day IN {1996-02-29}",
    "SELECT avg(Amt) BY Account.District WHERE Account.Account IN {A1001}",
    "SELECT avg(Amt) BY Account.District WHERE Account.Region IN {Moravia}",
    "SELECT avg(Amt) BY Account.District WHERE Account.District IN "
    "{Prague, Brno, Olomouc}",
    "SELECT avg(Amt) BY Account.District WHERE Status.Status IN {A, B}",
    "SELECT avg(Amt) BY Account.District, Date.Month WHERE "
    "Account.District IN {Prague} AND Status.Status IN {A} AND "
    "Date.Year IN {1995, 1996}",
    "select avg(amt) by account.district where date.year in {1996}",
    "SELECT avg(Amt) BY Account.ALL, Date.ALL",
    "SELECT avg(Amt) BY Date.Day",
    # conditions: empty, one atom, all dimensions, quoted literal
    ("condition", ""),
    ("condition", "Account.Region IN {Moravia}"),
    ("condition", "Account.Region IN {Moravia, Bohemia}"),
    ("condition", "Date.Year IN {1994}"),
    ("condition", "Status.Status IN {C}"),
    ("condition", "Account.District IN {'Prague'}"),
    ("condition", "Account.District IN {Liberec} AND Status.Status IN {D} "
                  "AND Date.Month IN {1998-01}"),
    ("condition", "Date.Day IN {1996-07-14}"),
    ("condition", "Account.Account IN {A1001, A2001, A3001}"),
    ("condition", "Status.Status IN {A, B, C, D}"),
    # beliefs: closed/open interval ends, sets, percent, label form,
    # anchored and unanchored, qualified and bare level names
    ("belief", "P(Amt IN [100..200) | District=Olomouc, Year=1996) = 0.3"),
    ("belief", "P(Amt IN [100..200] | District=Olomouc) = 0.25"),
    ("belief", "P(Amt IN (50..60) | Month=1996-01) = 1"),
    ("belief", "P(Amt IN (0..100] | Account.District=Prague) = 0.8"),
    ("belief", "P(Amt IN {0}) = 1"),
    ("belief", "P(Amt IN {10, 20, 30} | Status=A) = 0.5"),
    ("belief", "P(Amt IN {99.5} | Region=Moravia) = 45%"),
    ("belief", "P(Amt IN [0..1000000) | Day=1996-02-29) = 0.01"),
    ("belief", "P(label(Amt) = High | District=Olomouc, Month=1996-07) = 0.2"),
    ("belief", "P(label(Amt) = Low) = 0.9"),
    ("belief", "P(Amt IN [25000..35000] | District=Olomouc, "
               "Month=1996-09) = 0.7"),
    ("belief", "P(Amt IN {42} | Account=A1001, Status=B, Year=1997) = 0.33"),
    # label rules: closed/open ends, multiple measures, order declaration
    ("labels", "Amt: [0..50000) -> Low"),
    ("labels", "Amt: [0..10) -> A\nAmt: [10..20) -> B\nAmt: [20..30] -> C"),
    ("labels", "Amt: (0..5] -> Tiny\nORDER Tiny"),
    ("labels", "Amt: [0..50000) -> Low\nAmt: [50000..150000) -> Mid\n"
               "Amt: [150000..1000000] -> High\nORDER Low < Mid < High"),
    ("labels", "Amt: [0.5..1.5] -> Unit"),
    ("labels", "Amt: (10..20) -> Open\nORDER Open"),
    ("query", "SELECT avg(Amt) BY Status.ALL, Date.Month WHERE "
              "Date.Month IN {1997-12}"),
    ("query", "SELECT count(Amt) BY Account.Region WHERE "
              "Account.Region IN {Central} AND Date.Year IN {1994, 1998}"),
    ("belief", "P(Amt IN [1..2) | Year=1995) = 0.5"),
    ("condition", "Account.Region IN {Central} AND Date.Year IN {1998}"),
]

MALFORMED_CORPUS = [
    "SELECT",
    "SELECT avg",
    "SELECT avg(",
    "SELECT avg(Amt",
    "SELECT avg(Amt)",
    "SELECT avg(Amt) BY",
    "SELECT avg(Amt) BY Account",
    "SELECT avg(Amt) BY Account.",
    "SELECT avg(Amt) BY Account.District WHERE",
    "SELECT avg(Amt) BY Account.District WHERE Date",
    "SELECT avg(Amt) BY Account.District WHERE Date.Year",
    "SELECT avg(Amt) BY Account.District WHERE Date.Year IN",
    "SELECT avg(Amt) BY Account.District WHERE Date.Year IN {",
    "SELECT avg(Amt) BY Account.District WHERE Date.Year IN {}",
    "SELECT avg(Amt) BY Account.District WHERE Date.Year IN {1996",
    "SELECT avg(Amt) BY Account.District WHERE Date.Year IN {1996} AND",
    "SELECT avg(Amt) BY Account.District extra",
    "BY Account.District",
    "SELECT avg(Amt) BY Account.District, Account.Region, Account.District",
    "SELECT @vg(Amt) BY Account.District",
]


def test_criterion_7_parser_round_trip(pkdd_cube):
    with criterion(7, "parser round-trip and positioned errors"):
        assert len(ROUND_TRIP_CORPUS) >= 50
        for entry in ROUND_TRIP_CORPUS:
            kind, text = entry if isinstance(entry, tuple) else ("query", entry)
            if kind == "query":
                ast = qlang.parse_query(text, pkdd_cube)
                printed = qlang.print_query(ast)
                assert qlang.parse_query(printed, pkdd_cube) == ast, text
                assert qlang.print_query(
                    qlang.parse_query(printed, pkdd_cube)) == printed
            elif kind == "condition":
                ast = qlang.parse_condition(text, pkdd_cube)
                printed = qlang.print_condition(ast, pkdd_cube)
                assert qlang.parse_condition(printed, pkdd_cube) == ast, text
            elif kind == "belief":
                ast = qlang.parse_belief(text, pkdd_cube)
                printed = qlang.print_belief(ast, pkdd_cube)
                assert qlang.parse_belief(printed, pkdd_cube) == ast, text
            else:
                schemes, domain = qlang.parse_label_rules(text)
                printed = qlang.print_label_rules(schemes, domain)
                schemes2, domain2 = qlang.parse_label_rules(printed)
                assert domain2 == domain, text
                assert {m: s.intervals for m, s in schemes2.items()} == \
                    {m: s.intervals for m, s in schemes.items()}, text
        for text in MALFORMED_CORPUS:
            with pytest.raises(PositionedError) as err:
                qlang.parse_query(text, pkdd_cube)
            assert isinstance(err.value, ParseError) or \
                isinstance(err.value, PositionedError)
            assert 0 <= err.value.position <= len(text), text


def test_criterion_8_user_study_out_of_scope():
    with criterion(8, "user-study analytics intentionally absent"):
        import cubeinterest

        assert not hasattr(cubeinterest, "user_study")
        assert not hasattr(cubeinterest, "borda")
