"""
Tests for the benchmark harness: timing, accuracy, indices and sweeps
"""

import json
import warnings
from dataclasses import replace
from fractions import Fraction

import pandas as pd
import pytest

from bench import (
    DegenerateIndexError,
    accuracy,
    accuracy_index,
    complexity_sweep,
    index_leader,
    minsup_sweep,
    report_summary,
    run_bench,
    run_pipeline,
    time_index,
    write_bench_report,
)
from dataset import generate_synthetic, load_text, split_train_test
from mining_system import MiningSystem
from models import Algorithm, MinsupTable
from rules import RuleSet

MINCONF = Fraction(3, 4)


@pytest.fixture
def system(mock_config):
    return MiningSystem(mock_config)


@pytest.fixture
def synthetic():
    return generate_synthetic(300, 12, 3, seed=5)


class TestRunPipeline:
    """Test timed pipeline runs"""

    def test_counts_on_five_corpus(self, system, five_corpus):
        result = run_pipeline(Algorithm.APRIORI, five_corpus, 3, MINCONF, 5, system)

        assert result.n_frequent == 6
        assert result.n_rules == 6
        assert result.n_transactions == 5
        assert result.minsup == "3"
        assert result.timing.itemset_time >= 0
        assert result.timing.time_per_rule == pytest.approx(
            result.timing.total_time / 6
        )

    def test_repeats_do_not_change_counts(self, system, five_corpus):
        once = run_pipeline(Algorithm.SAR, five_corpus, 3, MINCONF, 1, system)
        five = run_pipeline(Algorithm.SAR, five_corpus, 3, MINCONF, 5, system)
        assert (once.n_frequent, once.n_rules) == (five.n_frequent, five.n_rules)

    def test_uniform_sarmsmc_matches_sar(self, system, five_corpus):
        sar = run_pipeline(Algorithm.SAR, five_corpus, 3, MINCONF, 1, system)
        sarmsmc = run_pipeline(
            Algorithm.SARMSMC, five_corpus, MinsupTable.uniform(3), MINCONF, 1, system
        )
        assert sarmsmc.n_rules == sar.n_rules

    def test_interesting_rules_need_lift_above_one(self, system, five_corpus):
        # Every rule here has lift 15/16.
        result = run_pipeline(Algorithm.APRIORI, five_corpus, 3, MINCONF, 1, system)
        assert result.n_interesting == 0

    def test_interesting_rules_counted(self, system, grouped_corpus):
        result = run_pipeline(Algorithm.APRIORI, grouped_corpus, 3, MINCONF, 1, system)
        assert result.n_interesting == result.n_rules == 7

    def test_mismatch_is_an_error(self, system, five_corpus):
        with pytest.raises(ValueError):
            run_pipeline(Algorithm.SARMSMC, five_corpus, 3, MINCONF, 1, system)

    def test_phases_add_up_to_the_total(self, system, five_corpus):
        # Warm-up, then three runs whose per-phase medians come from different runs.
        phases = iter([(0.0, 0.0), (1.0, 1.0), (2.0, 9.0), (9.0, 2.0)])

        class ScriptedSystem:
            def run(self, *args):
                result = system.run(*args)
                itemset_time, rule_time = next(phases)
                stats = replace(result.stats, itemset_time=itemset_time)
                return replace(result, stats=stats, rule_time=rule_time)

        result = run_pipeline(
            Algorithm.APRIORI, five_corpus, 3, MINCONF, 3, ScriptedSystem()
        )

        assert result.itemset_time == 2.0
        assert result.rule_time == 9.0
        assert result.timing.total_time == 11.0
        assert result.itemset_time + result.rule_time == result.timing.total_time

    def test_repeats_must_be_positive(self, system, five_corpus):
        with pytest.raises(ValueError, match="repeats"):
            run_pipeline(Algorithm.SAR, five_corpus, 3, MINCONF, 0, system)


class TestAccuracy:
    """Test the train/test confidence-holding rate"""

    def rules_for(self, system, ts, minsup=3):
        return system.run(Algorithm.APRIORI, ts, minsup, MINCONF).rules

    def test_identical_partitions(self, system, grouped_corpus):
        rules = self.rules_for(system, grouped_corpus)
        assert accuracy(grouped_corpus, grouped_corpus, rules, MINCONF) == 1

    def test_absent_antecedents_fail(self, system, grouped_corpus):
        rules = self.rules_for(system, grouped_corpus)
        # Positions 4..6 are the BC transactions: no A, no D, no AB, AE or BE.
        test = grouped_corpus.subset([4, 5, 6])
        assert accuracy(grouped_corpus, test, rules, MINCONF) == 0

    def test_empty_rule_set_is_vacuous(self, grouped_corpus, caplog):
        empty = RuleSet((), MINCONF, Algorithm.SAR, grouped_corpus.n)
        with caplog.at_level("WARNING"):
            assert accuracy(grouped_corpus, grouped_corpus, empty, MINCONF) == 1
        assert "vacuous" in caplog.text

    def test_partitions_must_share_a_dictionary(self, system, grouped_corpus):
        rules = self.rules_for(system, grouped_corpus)
        other = load_text("A,B\n")
        with pytest.raises(ValueError, match="dictionary"):
            accuracy(grouped_corpus, other, rules, MINCONF)

    def test_matches_brute_force_recount(self, system, synthetic):
        train, test = split_train_test(synthetic, Fraction(1, 10), seed=3)
        rules = system.run(Algorithm.APRIORI, train, 20, Fraction(1, 2)).rules
        assert len(rules) > 0

        def count(itemset):
            return sum(1 for t in test.transactions if set(itemset) <= set(t.items))

        held = 0
        for rule in rules:
            base = count(rule.antecedent)
            if base and Fraction(count(rule.items), base) >= Fraction(1, 2):
                held += 1
        expected = Fraction(held, len(rules))
        assert accuracy(train, test, rules, Fraction(1, 2)) == expected


# Reference index rows, in canonical algorithm order
ACCURACY_ROW = ["97.89", "100", "98.25", "99.99"]
TIME_ROW = ["98.6", "100", "5.27", "5.18"]


class TestIndices:
    """Test accuracy and time index normalization"""

    def test_accuracy_index_direct(self):
        index = accuracy_index({"A": [Fraction(9, 10)], "B": [Fraction(1)]})
        assert index == {"A": 90, "B": 100}

    def test_time_index_direct(self):
        assert time_index({"A": [200], "B": [100]}) == {"A": 100, "B": 50}

    def test_equal_sums_all_lead(self):
        index = time_index({"A": [1, 2], "B": [2, 1]})
        assert set(index.values()) == {100}

    @pytest.mark.parametrize(
        "row, indexer", [(ACCURACY_ROW, accuracy_index), (TIME_ROW, time_index)]
    )
    def test_reproduces_reference_rows(self, row, indexer):
        # Spread each total over three points in the same ratio.
        values = {
            a: [Fraction(v) / 3, Fraction(v) / 6, Fraction(v) / 2]
            for a, v in zip(Algorithm.canonical(), row)
        }
        index = indexer({a.value: v for a, v in values.items()})

        for algorithm, expected in zip(Algorithm.canonical(), row):
            assert abs(float(index[algorithm.value]) - float(expected)) <= 0.05
        assert max(index.values()) == 100

    def test_scaled_inputs_give_the_same_index(self):
        base = {a.value: [Fraction(v)] for a, v in zip(Algorithm.canonical(), TIME_ROW)}
        scaled = {k: [v[0] * 37] for k, v in base.items()}
        assert time_index(base) == time_index(scaled)

    def test_degenerate(self):
        with pytest.raises(DegenerateIndexError, match="degenerate"):
            accuracy_index({"A": [0, 0], "B": [0, 0]})

    def test_point_counts_must_match(self):
        with pytest.raises(ValueError):
            time_index({"A": [1, 2], "B": [1]})

    def test_leader_prefers_canonical_order(self):
        index = {
            Algorithm.SARMSMC: Fraction(100),
            Algorithm.SAR: Fraction(100),
            Algorithm.APRIORI: Fraction(50),
        }
        assert index_leader(index) is Algorithm.SAR


class TestSweeps:
    """Test the minsup sweep and the data-size sweep"""

    def test_complexity_sweep_shape(self, system, synthetic):
        fractions = ["0.25", "0.5", "0.75", "1"]
        algorithms = [Algorithm.APRIORI, Algorithm.SARMSMC]
        rows = complexity_sweep(
            synthetic, fractions, algorithms, 30, MINCONF, seed=1, system=system
        )

        assert len(rows) == 8
        assert [r.fraction for r in rows[::2]] == ["0.25", "0.5", "0.75", "1.0"]
        assert [r.n_transactions for r in rows[::2]] == [75, 150, 225, 300]
        assert all(r.seconds >= 0 for r in rows)

    def test_apriori_time_grows_with_the_fraction(self, system):
        ts = generate_synthetic(4000, 40, 4, seed=2)
        rows = complexity_sweep(
            ts,
            ["0.25", "0.5", "0.75", "1"],
            [Algorithm.APRIORI],
            200,
            MINCONF,
            seed=1,
            system=system,
        )
        seconds = [r.seconds for r in rows]

        # Timing noise only warns; the fractions themselves must be ordered.
        assert [r.n_transactions for r in rows] == [1000, 2000, 3000, 4000]
        for smaller, larger in zip(seconds, seconds[1:]):
            if larger < smaller * 0.8:
                warnings.warn(f"Apriori time fell along the sweep: {seconds}")
                break

    def test_full_fraction_matches_full_run(self, system, synthetic):
        (row,) = complexity_sweep(
            synthetic, [1], [Algorithm.APRIORI], 30, MINCONF, seed=1, system=system
        )
        full = run_pipeline(Algorithm.APRIORI, synthetic, 30, MINCONF, 1, system)
        assert row.n_rules == full.n_rules

    def test_minsup_sweep_runs_every_algorithm_per_point(self, system, synthetic):
        points, runs = minsup_sweep(synthetic, [40, 30], MINCONF, system)

        assert points == ["40", "30"]
        assert [r.algorithm for r in runs[:4]] == Algorithm.canonical()
        assert [r.minsup for r in runs] == ["40"] * 4 + ["30"] * 4

    def test_equalized_runs_contain_single_support_rules(self, system, synthetic):
        _, runs = minsup_sweep(synthetic, [30], MINCONF, system)
        by_algorithm = {r.algorithm: r for r in runs}

        sar = by_algorithm[Algorithm.SAR]
        assert by_algorithm[Algorithm.SARMSMC].n_rules >= sar.n_rules
        apriori = by_algorithm[Algorithm.APRIORI]
        assert by_algorithm[Algorithm.MAX_CONSTRAINTS].n_rules >= apriori.n_rules


class TestRunBench:
    """Test the full comparison protocol and its report files"""

    def test_report_shape(self, system, synthetic):
        report = run_bench(synthetic, [40, 30], MINCONF, system)

        assert report.points == ["40", "30"]
        assert len(report.runs) == 8
        assert set(report.time_index) == {a.value for a in Algorithm}
        assert "100.00" in report.time_index.values()
        assert report.accuracy_index == {}
        assert report.metadata["threads"] == "1"

    def test_split_adds_accuracy(self, system, synthetic):
        report = run_bench(synthetic, [30], MINCONF, system, split="0.1", seed=7)

        assert set(report.accuracy) == {a.value for a in Algorithm}
        assert all(len(v) == 1 for v in report.accuracy.values())
        assert "100.00" in report.accuracy_index.values()
        assert report.metadata["test_transactions"] == "30"
        assert "accuracy_definition" in report.metadata

    def test_same_seed_same_counts(self, system, synthetic):
        first = run_bench(synthetic, [30], MINCONF, system, split="0.1", seed=7)
        second = run_bench(synthetic, [30], MINCONF, system, split="0.1", seed=7)

        assert report_summary(first) == report_summary(second)
        assert first.accuracy == second.accuracy

    def test_written_files(self, system, synthetic, tmp_path):
        report = run_bench(
            synthetic, [30], MINCONF, system, split="0.1", seed=7, sweep=["0.5", "1"]
        )
        written = write_bench_report(report, tmp_path / "out")

        names = sorted(p.name for p in written)
        assert names == [
            "fraction_plot.csv",
            "indices.csv",
            "minsup_plot.csv",
            "report.json",
            "runs.csv",
            "sweep.csv",
        ]
        plot = pd.read_csv(tmp_path / "out" / "minsup_plot.csv")
        assert list(plot.columns) == ["minsup", "algorithm", "seconds"]
        fractions = pd.read_csv(tmp_path / "out" / "fraction_plot.csv")
        assert list(fractions.columns) == ["fraction", "algorithm", "seconds"]
        assert len(fractions) == 8
        indices = pd.read_csv(tmp_path / "out" / "indices.csv")
        assert list(indices.columns) == ["algorithm", "time_index", "accuracy_index"]
        loaded = json.loads((tmp_path / "out" / "report.json").read_text())
        assert len(loaded["runs"]) == 4

    def test_all_zero_accuracy_keeps_the_report(
        self, system, synthetic, tmp_path, caplog
    ):
        # Seed 0 holds out transactions where every training rule drops below 3/4.
        with caplog.at_level("WARNING"):
            report = run_bench(synthetic, [30], MINCONF, system, split="0.1", seed=0)

        assert all(v == ["0.000000"] for v in report.accuracy.values())
        assert report.accuracy_index == {}
        assert report.accuracy_leader is None
        assert report.metadata["accuracy_index"] == "degenerate"
        assert "degenerate" in caplog.text
        assert len(report.runs) == 4

        write_bench_report(report, tmp_path / "out")
        indices = pd.read_csv(tmp_path / "out" / "indices.csv")
        assert len(indices) == 4
        assert indices["accuracy_index"].isna().all()
        assert "accuracy_index" not in json.loads(report_summary(report))

    def test_summary_reports_interesting_share(self, system, grouped_corpus):
        report = run_bench(grouped_corpus, [3], MINCONF, system)
        summary = json.loads(report_summary(report))

        apriori = summary["runs"][0]
        assert apriori["algorithm"] == "apriori"
        assert apriori["interesting_pct"] == "100.00"

    def test_needs_points(self, system, synthetic):
        with pytest.raises(ValueError):
            run_bench(synthetic, [], MINCONF, system)


@pytest.mark.slow
def test_multi_support_itemset_phase_is_faster_on_many_items(mock_config):
    """Equalized SARMSMC mining should beat Apriori on a wide, skewed corpus"""
    ts = generate_synthetic(20000, 300, 4, seed=11)
    system = MiningSystem(mock_config)
    minsup = Fraction(1, 200)
    report, _ = system.equalize(ts, minsup, MINCONF)

    apriori = run_pipeline(Algorithm.APRIORI, ts, minsup, MINCONF, 1, system)
    sarmsmc = run_pipeline(Algorithm.SARMSMC, ts, report.table, MINCONF, 1, system)

    ratio = apriori.itemset_time / max(sarmsmc.itemset_time, 1e-9)
    if ratio < 5:
        warnings.warn(f"SARMSMC itemset phase only {ratio:.1f}x faster than Apriori")
