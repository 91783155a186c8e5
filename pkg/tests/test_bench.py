import json

import pytest

from sipmutual.bench import (
    MODES,
    ComparisonReport,
    MetricsReport,
    _split,
    attack_rates,
    format_table,
    handshake_seed,
    run_bench,
    run_mode,
)


def test_mutual_hash_calls_large_batch():
    report = run_mode("mutual", 10_000, 1, workers=4)
    assert report.handshakes_run == 10_000
    assert report.hash_calls_client == 30_000
    assert report.hash_calls_server == 30_000


@pytest.mark.parametrize("mode", MODES)
def test_counters(mode):
    r = run_mode(mode, 20, 3)
    assert r.legs_per_handshake == 5
    assert r.hash_calls_client == r.hash_calls_server == 60
    assert r.elapsed_ns > 0 and r.handshakes_per_second > 0


def test_selective_smaller_than_mutual():
    rows = {m: run_mode(m, 50, 9) for m in MODES}
    assert rows["selective"].bytes_per_handshake < rows["mutual"].bytes_per_handshake
    assert rows["legacy"].bytes_per_handshake < rows["selective"].bytes_per_handshake


@pytest.mark.parametrize("mode", MODES)
def test_worker_count_irrelevant(mode):
    one = run_mode(mode, 37, 5, workers=1)
    many = run_mode(mode, 37, 5, workers=3)
    assert one.counters() == many.counters()


def test_split():
    assert _split(10, 3) == [(0, 4), (4, 7), (7, 10)]
    assert _split(2, 5) == [(0, 1), (1, 2)]
    for count in range(1, 30):
        for workers in range(1, 8):
            parts = _split(count, workers)
            assert parts[0][0] == 0 and parts[-1][1] == count
            assert all(a[1] == b[0] for a, b in zip(parts, parts[1:]))


def test_handshake_seed_distinct():
    assert len({handshake_seed(1, m, i) for m in MODES for i in range(10)}) == 30


def test_bad_inputs():
    with pytest.raises(ValueError):
        run_mode("mutual", 0, 1)
    with pytest.raises(ValueError):
        run_mode("digest", 1, 1)


def test_attack_rates():
    rates = attack_rates(2, 5)
    assert rates == {
        "Replay": 0.0,
        "ForgeOk": 0.0,
        "ForgeOkRelay": 1.0,
        "TamperAuthorization": 0.0,
        "OfflineDictionary": 1.0,
    }


def test_report_round_trip():
    report = run_bench(5, 1, attack_runs=2)
    data = json.loads(json.dumps(report.to_dict()))
    again = ComparisonReport.from_dict(data)
    assert again == report
    assert [r.mode for r in again.rows] == list(MODES)


def test_report_needs_three_modes():
    row = MetricsReport("mutual", 1, 5, 1, 3, 3, 1, 1.0)
    with pytest.raises(ValueError):
        ComparisonReport([row], {})


def test_table():
    text = format_table(run_bench(3, 1, attack_runs=1))
    for word in MODES + ("hash_calls_client", "Replay", "note:"):
        assert word in text
