import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from panobench.reference_tables import EXPERT_EVAL
from panobench.scoring import (
    MixRatio,
    RewardVector,
    ScoreCard,
    composite_reward,
    display_round,
    expert_table,
    expert_total,
    grade,
    grade_distribution,
    group_std_report,
    mix_schedule,
    read_long_scores,
    reward_channel_std,
    write_table,
)


def two_pass_std(xs, ddof=1):
    n = len(xs)
    mean = sum(xs) / n
    return math.sqrt(sum((x - mean) ** 2 for x in xs) / (n - ddof))


# --- expert scores --------------------------------------------------------------

def test_expert_total_simple():
    assert expert_total(ScoreCard(5, 5, 5)) == pytest.approx(5.0)
    assert expert_total(ScoreCard(1, 0, 0)) == pytest.approx(0.4)
    assert expert_total(ScoreCard(0, 1, 1)) == pytest.approx(0.6)


@pytest.mark.parametrize("name", list(EXPERT_EVAL))
def test_expert_rows(name):
    (spatial, aesthetic, plaus), printed, tier = EXPERT_EVAL[name]
    total = expert_total(ScoreCard(aesthetic, spatial, plaus))
    assert abs(display_round(total) - printed) <= 0.005
    assert grade(total) == tier


def test_display_round_half_up():
    assert display_round(3.675) == 3.68
    assert display_round(1.545) == 1.55
    assert display_round(3.2) == 3.2
    assert display_round(-0.125) == -0.13


def test_scorecard_range():
    with pytest.raises(ValueError):
        ScoreCard(5.1, 1, 1)
    with pytest.raises(ValueError):
        ScoreCard(float("nan"), 1, 1)


@pytest.mark.parametrize("total,g", [
    (5.0, "S"), (4.0, "S"), (3.9999, "A"), (3.5, "A"), (3.4999, "B"), (2.5, "B"),
    (2.4999, "C"), (1.0001, "C"), (1.0, "D"), (0.0, "D"),
])
def test_grade_boundaries(total, g):
    assert grade(total) == g


def test_grade_sweep_total_and_monotone():
    order = {g: i for i, g in enumerate("DCBAS")}
    prev = -1
    for i in range(5001):
        g = grade(i / 1000)
        assert g in order
        assert order[g] >= prev
        prev = order[g]


def test_grade_distribution():
    d = grade_distribution([4.2, 3.6, 3.7, 1.0])
    assert d == {"S": 25.0, "A": 50.0, "B": 0.0, "C": 0.0, "D": 25.0}


def test_expert_table_uses_means():
    rows = expert_table({"m": [ScoreCard(4, 4, 4), ScoreCard(2, 2, 2)], "empty": []})
    assert len(rows) == 1
    assert rows[0]["Total"] == pytest.approx(3.0)
    assert rows[0]["S"] == 50.0 and rows[0]["C"] == 50.0


# --- composite reward -----------------------------------------------------------

def test_composite_reward_example():
    # hpsv3 of 5.0 normalizes to 0.5 on its [0, 10] range
    v = RewardVector(0.7, 0.2, 0.8, 5.0)
    assert composite_reward(v) == pytest.approx((0.7 + 0.2 + 0.8 + 0.5) / 4)


def test_composite_all_zero_weights():
    with pytest.raises(ValueError):
        composite_reward(RewardVector(0.5, 0.5, 0.5, 5.0), dict.fromkeys(
            ("structural_iou", "omniaid", "longclip", "hpsv3"), 0.0))


def test_composite_negative_weight():
    with pytest.raises(ValueError):
        composite_reward(RewardVector(0.5, 0.5, 0.5, 5.0), {"structural_iou": -1.0})


def test_composite_single_channel():
    v = RewardVector(0.3, 0.9, 0.9, 9.0)
    assert composite_reward(v, {"structural_iou": 2.0}) == pytest.approx(0.3)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 10),
       st.floats(0.01, 100))
def test_composite_weight_scale_invariant(a, b, c, d, s):
    v = RewardVector(a, b, c, d)
    w = {"structural_iou": 1.0, "omniaid": 2.0, "longclip": 0.5, "hpsv3": 3.0}
    ws = {k: x * s for k, x in w.items()}
    r = composite_reward(v, w)
    assert r == pytest.approx(composite_reward(v, ws), abs=1e-12)
    assert 0.0 <= r <= 1.0


def test_reward_vector_rejects_iou_out_of_range():
    with pytest.raises(ValueError):
        RewardVector(1.2, 0, 0, 0)


# --- group spread ---------------------------------------------------------------

def test_std_of_constant_group_is_zero():
    rep = group_std_report([("g", [0.4, 0.4])])
    assert rep.groups[0].std == 0.0


def test_std_of_pair():
    rep = group_std_report([("g", [0.0, 2.0])])
    assert rep.groups[0].std == pytest.approx(math.sqrt(2), abs=1e-15)


def test_std_needs_two_samples():
    with pytest.raises(ValueError):
        group_std_report([("g", [1.0])])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=20), min_size=1, max_size=10))
def test_std_matches_two_pass_oracle(groups):
    rep = group_std_report([(str(i), g) for i, g in enumerate(groups)])
    for g, xs in zip(rep.groups, groups):
        assert g.std == pytest.approx(two_pass_std(xs), rel=1e-9, abs=1e-9)
        assert g.n == len(xs)


def test_pairs_wider_than_groups_flagged():
    rng = np.random.default_rng(0)
    groups, labels = [], {}
    for i in range(20):
        groups.append((f"p{i}", [0.0, float(rng.uniform(1, 2))]))
        labels[f"p{i}"] = "dpo"
        groups.append((f"g{i}", list(rng.uniform(0, 0.5, 8))))
        labels[f"g{i}"] = "nft"
    rep = group_std_report(groups, labels)
    assert rep.ratio > 1 and rep.flagged
    assert set(rep.mean_std) == {"dpo", "nft"}


def test_ratio_absent_without_both_populations():
    rep = group_std_report([("a", [0, 1])], {"a": "dpo"})
    assert rep.ratio is None and not rep.flagged


def test_reward_channel_std():
    g = [RewardVector(0.0, 0.5, 0.5, 1.0), RewardVector(1.0, 0.5, 0.5, 3.0)]
    out = reward_channel_std([g])
    assert out["structural_iou"] == pytest.approx(math.sqrt(0.5))
    assert out["omniaid"] == 0.0
    assert out["hpsv3"] == pytest.approx(math.sqrt(2))


# --- mix schedule -----------------------------------------------------------------

def test_schedule_endpoints_exact():
    assert mix_schedule(0, 1000) == MixRatio(1.0, 0.0)
    assert mix_schedule(1000, 1000) == MixRatio(0.2, 0.8)
    assert mix_schedule(10**6, 1000) == MixRatio(0.2, 0.8)


def test_schedule_midpoint():
    r = mix_schedule(500, 1000)
    assert r.p_single == pytest.approx(0.6) and r.p_multi == pytest.approx(0.4)


def test_schedule_monotone():
    prev = math.inf
    for s in range(0, 1200):
        r = mix_schedule(s, 1000)
        assert r.p_single <= prev
        assert r.p_single + r.p_multi == pytest.approx(1.0, abs=1e-15)
        prev = r.p_single


def test_schedule_invalid():
    with pytest.raises(ValueError):
        mix_schedule(-1, 10)
    with pytest.raises(ValueError):
        mix_schedule(0, 0)


# --- io ---------------------------------------------------------------------------

def test_long_scores_and_table(tmp_path):
    p = tmp_path / "s.csv"
    p.write_text("sample_id,metric,value,model\n1,hpsv3,7.5,a\n1,clip,0.3,a\n2,hpsv3,6.0,b\n")
    scores = read_long_scores(p)
    assert scores[("a", "1")] == {"hpsv3": 7.5, "clip": 0.3}
    out = tmp_path / "t.csv"
    write_table(out, ("model", "x"), [{"model": "a", "x": 0.12345}, {"model": "b", "x": None}])
    assert out.read_text() == "model,x\na,0.1235\nb,\n"


@given(st.floats(0, 1), st.lists(st.floats(0, 10), min_size=4, max_size=4).filter(lambda w: sum(w) > 0))
def test_composite_equal_channels_give_that_value(s, w):
    v = RewardVector(s, s, s, 10 * s)
    r = composite_reward(v, dict(zip(("structural_iou", "omniaid", "longclip", "hpsv3"), w)))
    assert r == pytest.approx(s, abs=1e-12)
