"""Balance reports: matchup matrix, scores, comparisons."""

import numpy as np
import pytest

from conftest import toy_config_a

from rpglite.balance import (
    BalanceReport,
    balance_report,
    compare_configs,
    comparison_verdict,
    matchup_matrix,
    matrix_score,
    usage_score,
)
from rpglite.config import CharacterId as C, uniform_config
from rpglite.context import WorkContext
from rpglite.csg import N_PAIRS


@pytest.fixture(scope="module")
def ctx():
    return WorkContext()


@pytest.fixture(scope="module")
def toy():
    return toy_config_a()


@pytest.fixture(scope="module")
def toy_matrix(toy, ctx):
    return matchup_matrix(toy, context=ctx)


def test_matrix_shape_and_range(toy_matrix):
    assert toy_matrix.shape == (N_PAIRS, N_PAIRS)
    assert np.all(toy_matrix >= 0.0) and np.all(toy_matrix <= 1.0)


def test_matrix_mirrors_never_favor_a_player(toy_matrix):
    # a mirror matchup can fall below a coin flip when optimal play
    # stalls (toy rage one-shots make attacking dominated), but no
    # mirror can ever exceed it
    assert np.all(np.diag(toy_matrix) <= 0.5 + 1e-7)


def test_matrix_mirrors_exactly_fair_when_play_terminates(ctx):
    # every attack kills, so games cannot stall and mirrors are fair
    lethal = uniform_config(health=2, accuracy=1.0, damage=2)
    m = matchup_matrix(lethal, context=ctx)
    assert np.all(np.abs(np.diag(m) - 0.5) < 1e-9)


def test_matrix_antisymmetry_bound(toy_matrix):
    total = toy_matrix + toy_matrix.T
    assert np.all(total <= 1.0 + 4e-6)


def test_matrix_score_examples():
    assert matrix_score(np.full((4, 4), 0.5)) == pytest.approx(1.0)
    lopsided = np.array([[1.0, 1.0], [0.0, 0.0]])
    assert matrix_score(lopsided) == pytest.approx(0.0)
    assert 0.0 <= matrix_score(np.random.default_rng(0).random((6, 6))) <= 1.0


def test_usage_score_examples():
    assert usage_score(np.full(8, 1.0 / 8)) == pytest.approx(1.0)
    one_hot = np.zeros(8)
    one_hot[3] = 1.0
    assert usage_score(one_hot) == pytest.approx(0.0)
    half = np.zeros(8)
    half[0] = half[1] = 0.5
    assert usage_score(half) == pytest.approx(np.log(2) / np.log(8))


@pytest.fixture(scope="module")
def toy_report(toy, ctx):
    return balance_report(toy, csg_iterations=1, context=ctx)


def test_balance_report_contents(toy, toy_report):
    assert toy_report.config_hash == toy.config_hash()
    assert toy_report.season_id == toy.season_id
    assert 0.0 <= toy_report.matrix_score <= 1.0
    assert 0.0 <= toy_report.usage_score <= 1.0
    assert toy_report.usage.sum() == pytest.approx(1.0, abs=1e-9)
    assert len(toy_report.csg_values) == 1
    doc = toy_report.to_json_dict()
    assert doc["kind"] == "balance-report"
    assert len(doc["matrix"]) == N_PAIRS
    assert len(doc["usage_frequencies"]) == 8


def test_crippled_character_never_used(ctx):
    # a character nerfed to the floor is strictly dominated, so no
    # argmax pair ever includes it and its usage frequency is zero
    base = uniform_config(health=2, accuracy=0.8, damage=1)
    stats = dict(base.to_json_dict())
    stats["knight_health"] = 1
    stats["knight_accuracy"] = 0.05
    from rpglite.config import validate_config

    crippled = validate_config(stats)
    report = balance_report(crippled, csg_iterations=2, context=ctx)
    knight = list(C).index(C.KNIGHT)
    assert report.usage[knight] == 0.0


def test_comparison_verdict_rules():
    assert comparison_verdict(0.1, 0.2) == "b"
    assert comparison_verdict(-0.1, -0.2) == "a"
    assert comparison_verdict(0.1, -0.2) is None
    assert comparison_verdict(0.0, 0.3) is None
    assert comparison_verdict(0.0, 0.0) is None


def test_compare_same_config_is_neutral(toy, ctx):
    cmp = compare_configs(toy, toy, csg_iterations=1, context=ctx)
    assert cmp.matrix_delta == 0.0
    assert cmp.usage_delta == 0.0
    assert cmp.more_balanced is None
    doc = cmp.to_json_dict()
    assert doc["deltas"] == {"matrix": 0.0, "usage": 0.0}
    assert doc["more_balanced"] is None
