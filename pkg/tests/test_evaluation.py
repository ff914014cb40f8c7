"""Evaluation harness: synthetic populations, logistic fit, DiD, AUC."""

import math
import random

import numpy as np
import pytest
from hypothesis import given, assume, strategies as st

from arms.domain import SIGNAL_IDS
from arms.errors import DegenerateLabels, DimensionMismatch, DomainError, EmptyCell
from arms.evaluation import (
    DiDPanel,
    FitOptions,
    Group,
    LogisticModel,
    PanelRow,
    Period,
    auc,
    default_archetypes,
    did_estimate,
    fit_logistic,
    fitted_weight_overlay,
    generate_population,
    gradient_check,
    model_loss_fn,
    population_digest,
    predict_logistic,
    run_effectiveness_study,
    study_to_dict,
)
from arms.jsonio import canonical_dumps
from arms.reputation import score_population

from oracles import did_by_hand, exhaustive_auc, grid_logistic_loss

# content hash of the default 100/100/100 population at seed 42, frozen
# after the first generator run
STUDY_POPULATION_DIGEST = (
    "d93908fdcefa3882260ac6357b1a8673ae189d74bdf3717bca0bd5d1413ef351")

STUDY_PINS = {
    "incident_rate": 0.30666666666666664,
    "iterations": 886,
    "final_loss": 0.4194159672173854,
    "max_gradient_deviation": 0.0001631786348241904,
    "auc_model_train": 0.8691974331194267,
    "auc_model_holdout": 0.8211233211233211,
    "auc_composite_holdout": 0.7838827838827839,
    "auc_composite_full": 0.8085806856187291,
}

PINNED_COEFFICIENTS = {
    "intercept": 2.3824088153224148,
    "S1": -0.7267332834203527,
    "S2": -0.5623328294756902,
    "S3": -0.8850879567810885,
    "S4": -0.8890760671983765,
    "S5": -0.7171490432892181,
    "S6": -0.9868104906558879,
    "S7": -0.8227816446788541,
}

PINNED_OVERLAY = {
    "S1": 0.9100463485093805,
    "S2": 0.7041771029156197,
    "S3": 1.1083448103371953,
    "S4": 1.1133388919425178,
    "S5": 0.8980445550955358,
    "S6": 1.2357260967400885,
    "S7": 1.0303221944596626,
}


@pytest.fixture(scope="module")
def study_population():
    return generate_population(
        default_archetypes(),
        {"genuine": 100, "inexperienced": 100, "spoofer": 100},
        seed=42,
    )


@pytest.fixture(scope="module")
def study(study_population, cfg):
    return run_effectiveness_study(study_population, cfg)


# ---------------------------------------------------------------------------
# population generator
# ---------------------------------------------------------------------------

def test_generator_digest_pinned(study_population):
    assert population_digest(study_population) == STUDY_POPULATION_DIGEST


def test_generator_is_deterministic():
    a = generate_population(default_archetypes(), {"spoofer": 4}, seed=9)
    b = generate_population(default_archetypes(), {"spoofer": 4}, seed=9)
    assert population_digest(a) == population_digest(b)
    c = generate_population(default_archetypes(), {"spoofer": 4}, seed=10)
    assert population_digest(a) != population_digest(c)


def test_generator_zero_counts_gives_empty_population():
    population = generate_population(default_archetypes(), {"genuine": 0}, seed=1)
    assert population.snapshots == ()
    assert dict(population.labels) == {}
    assert dict(population.incidents) == {}


def test_generator_unknown_archetype_rejected():
    with pytest.raises(DomainError):
        generate_population(default_archetypes(), {"cryptid": 3}, seed=1)


def test_generator_labels_and_ordering(study_population):
    ids = [s.profile.actor_id for s in study_population.snapshots]
    assert ids == sorted(ids)
    assert study_population.labels["genuine-000"] == "genuine"
    assert study_population.labels["spoofer-099"] == "spoofer"
    assert set(study_population.incidents) == set(ids)


def test_archetype_separation(cfg):
    population = generate_population(
        default_archetypes(), {"genuine": 10, "spoofer": 10}, seed=11)
    _, reports = score_population(list(population.snapshots), cfg)
    by_arch = {"genuine": [], "spoofer": []}
    for report in reports:
        by_arch[population.labels[report.actor_id]].append(report.final_reputation)
    mean = lambda xs: sum(xs) / len(xs)
    assert mean(by_arch["genuine"]) > mean(by_arch["spoofer"])


# ---------------------------------------------------------------------------
# logistic regression
# ---------------------------------------------------------------------------

def test_zero_coefficients_predict_half():
    model = fit_logistic([[0.0], [1.0]], [0, 1],
                         opts=FitOptions(max_iterations=0))
    assert all(c == 0.0 for c in model.coefficients)
    for x in (-3.0, 0.0, 7.5):
        assert predict_logistic(model, [x]) == 0.5


def test_unit_slope_at_origin_predicts_half():
    model = LogisticModel(
        coefficients=(0.0, 1.0), feature_names=("intercept", "f0"),
        base_feature_count=1, with_interactions=False, l2_penalty=0.0,
        converged=True, iterations=0, final_loss=0.0)
    assert predict_logistic(model, [0.0]) == 0.5


def test_separable_data_gets_positive_slope():
    x = [[-1.0]] * 4 + [[1.0]] * 4
    y = [0] * 4 + [1] * 4
    model = fit_logistic(x, y, l2=0.01)
    assert model.coefficients[1] > 0
    assert model.converged


def test_intercept_saturation():
    model = LogisticModel(
        coefficients=(50.0, 0.0), feature_names=("intercept", "f0"),
        base_feature_count=1, with_interactions=False, l2_penalty=0.0,
        converged=True, iterations=0, final_loss=0.0)
    p = predict_logistic(model, [0.0])
    assert abs(p - 1.0) < 1e-9


def test_degenerate_labels_rejected():
    with pytest.raises(DegenerateLabels):
        fit_logistic([[0.0], [1.0]], [1, 1])


def test_dimension_mismatches_rejected():
    with pytest.raises(DimensionMismatch):
        fit_logistic([[0.0], [1.0]], [0, 1, 1])
    with pytest.raises(DimensionMismatch):
        fit_logistic([0.0, 1.0], [0, 1])
    with pytest.raises(DimensionMismatch):
        fit_logistic([[0.0], [1.0]], [0, 1], feature_names=["a", "b"])
    model = fit_logistic([[0.0], [1.0]], [0, 1], opts=FitOptions(max_iterations=1))
    with pytest.raises(DimensionMismatch):
        predict_logistic(model, [0.0, 1.0])


def test_bad_inputs_rejected():
    with pytest.raises(DomainError):
        fit_logistic([[float("nan")], [1.0]], [0, 1])
    with pytest.raises(DomainError):
        fit_logistic([[0.0], [1.0]], [0, 2])
    with pytest.raises(DomainError):
        fit_logistic([[0.0], [1.0]], [0, 1], l2=-0.5)


def test_loss_trace_is_monotone_on_worked_data():
    x = [[-1.5], [-0.5], [0.5], [1.5]]
    y = [0, 0, 1, 1]
    model = fit_logistic(x, y, l2=0.1, opts=FitOptions(record_trace=True))
    trace = model.loss_trace
    assert len(trace) >= 2
    for before, after in zip(trace, trace[1:]):
        assert after <= before + 1e-12


@given(st.data())
def test_loss_trace_is_monotone(data):
    rng = random.Random(data.draw(st.integers(0, 10_000)))
    n = data.draw(st.integers(4, 12))
    x = [[rng.uniform(-2, 2), rng.uniform(-2, 2)] for _ in range(n)]
    y = [rng.random() < 0.5 for _ in range(n)]
    assume(any(y) and not all(y))
    model = fit_logistic(
        x, [1 if v else 0 for v in y], l2=0.05,
        opts=FitOptions(max_iterations=80, record_trace=True))
    for before, after in zip(model.loss_trace, model.loss_trace[1:]):
        assert after <= before + 1e-12


def test_fitted_loss_matches_grid_search():
    """Four points, one feature: gradient descent against a dense grid."""
    xs = [-1.5, -0.5, 0.5, 1.5]
    ys = [0, 0, 1, 1]
    model = fit_logistic([[x] for x in xs], ys, l2=0.1)
    assert model.converged
    oracle = grid_logistic_loss(xs, ys, 0.1)
    assert abs(model.final_loss - oracle) <= 1e-3


def test_interaction_feature_names():
    rng = random.Random(3)
    x = [[rng.random() for _ in range(7)] for _ in range(30)]
    y = [rng.random() < 0.5 for _ in range(30)]
    y[0], y[1] = 0, 1
    model = fit_logistic(x, [1 if v else 0 for v in y], l2=0.1,
                         with_interactions=True,
                         feature_names=SIGNAL_IDS,
                         opts=FitOptions(max_iterations=5))
    names = model.feature_names
    assert len(names) == 1 + 7 + 21
    crossed = [n for n in names if "*" in n]
    assert len(crossed) == 21
    assert crossed[0] == "S1*S2" and crossed[-1] == "S6*S7"
    assert len(model.coefficients) == len(names)
    p = predict_logistic(model, x[0])
    assert 0.0 < p < 1.0


# ---------------------------------------------------------------------------
# gradient checking
# ---------------------------------------------------------------------------

def test_gradient_check_quadratic():
    fn = lambda w: (0.5 * float(w @ w), w.copy())
    assert gradient_check(fn, np.ones(4)) < 1e-6


def test_gradient_check_logistic_at_random_points():
    rng = random.Random(5)
    x = [[rng.uniform(-2, 2) for _ in range(3)] for _ in range(40)]
    y = [1 if row[0] + 0.5 * row[1] - row[2] + rng.gauss(0, 0.5) > 0 else 0
         for row in x]
    y[0], y[1] = 0, 1
    model = fit_logistic(x, y, l2=0.01, opts=FitOptions(max_iterations=50))
    loss_fn = model_loss_fn(model, x, y)
    points = np.random.default_rng(123).normal(size=(10, 4))
    worst = max(gradient_check(loss_fn, p, epsilon=1e-5) for p in points)
    assert worst < 1e-4


def test_gradient_check_zero_gradient_uses_absolute_rule():
    fn = lambda w: (float(np.sum(w ** 3)), 3.0 * w ** 2)
    assert gradient_check(fn, np.zeros(3)) < 1e-8


def test_gradient_check_rejects_bad_epsilon():
    fn = lambda w: (0.0, np.zeros_like(w))
    with pytest.raises(DomainError):
        gradient_check(fn, np.zeros(2), epsilon=0.0)


# ---------------------------------------------------------------------------
# AUC
# ---------------------------------------------------------------------------

def test_auc_perfect_separation():
    assert auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0


def test_auc_all_ties():
    assert auc([0.5, 0.5, 0.5, 0.5], [0, 1, 0, 1]) == 0.5


def test_auc_worked_examples():
    # every positive outranks every negative
    assert auc([0.1, 0.4, 0.35, 0.8], [0, 1, 0, 1]) == 1.0
    # one inverted pair out of four
    assert auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75
    # one tied pair counts half
    assert auc([0.2, 0.5, 0.5, 0.9], [0, 0, 1, 1]) == 0.875


def test_auc_degenerate_labels():
    with pytest.raises(DegenerateLabels):
        auc([0.1, 0.2], [1, 1])


def test_auc_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        auc([0.1, 0.2], [0, 1, 1])


@given(st.lists(
    st.tuples(
        st.one_of(st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0]),
                  st.floats(0, 1, allow_nan=False)),
        st.booleans()),
    min_size=2, max_size=50))
def test_auc_matches_exhaustive_pair_count(pairs):
    labels = [1 if flag else 0 for _, flag in pairs]
    assume(0 < sum(labels) < len(labels))
    scores = [score for score, _ in pairs]
    assert auc(scores, labels) == pytest.approx(
        exhaustive_auc(scores, labels), abs=1e-12)


# ---------------------------------------------------------------------------
# difference in differences
# ---------------------------------------------------------------------------

def _panel(treated_pre, treated_post, control_pre, control_post):
    rows = []
    for i, v in enumerate(treated_pre):
        rows.append(PanelRow(f"t{i}", Group.TREATED, Period.PRE, v))
    for i, v in enumerate(treated_post):
        rows.append(PanelRow(f"t{i}", Group.TREATED, Period.POST, v))
    for i, v in enumerate(control_pre):
        rows.append(PanelRow(f"c{i}", Group.CONTROL, Period.PRE, v))
    for i, v in enumerate(control_post):
        rows.append(PanelRow(f"c{i}", Group.CONTROL, Period.POST, v))
    return DiDPanel.from_rows(rows)


def test_did_hand_example():
    """treated 0.4 -> 0.7 against control 0.5 -> 0.55 gives 0.25."""
    effect, means = did_estimate(_panel([0.4], [0.7], [0.5], [0.55]))
    # bit-identical to the hand formula on the same floats
    assert effect == (0.7 - 0.4) - (0.55 - 0.5)
    assert effect == pytest.approx(0.25, abs=1e-12)
    assert means[(Group.TREATED, Period.PRE)] == 0.4
    assert means[(Group.CONTROL, Period.POST)] == 0.55


def test_did_hand_example_dyadic_is_bit_exact():
    effect, _ = did_estimate(_panel([0.25], [0.75], [0.5], [0.75]))
    assert effect == 0.25


def test_did_parallel_trends_is_zero():
    effect, _ = did_estimate(_panel([0.2, 0.4], [0.5, 0.7], [0.1, 0.3], [0.4, 0.6]))
    assert effect == pytest.approx(0.0, abs=1e-12)


def test_did_cell_means_average_multiple_units():
    effect, means = did_estimate(_panel([0.0, 1.0], [2.0, 2.0], [0.0], [0.0]))
    assert means[(Group.TREATED, Period.PRE)] == 0.5
    assert effect == 1.5


def test_did_empty_cell_rejected():
    rows = [
        PanelRow("t0", Group.TREATED, Period.PRE, 0.1),
        PanelRow("t0", Group.TREATED, Period.POST, 0.2),
        PanelRow("c0", Group.CONTROL, Period.PRE, 0.3),
    ]
    with pytest.raises(EmptyCell):
        did_estimate(DiDPanel.from_rows(rows))


def test_did_duplicate_unit_period_rejected():
    rows = [
        PanelRow("t0", Group.TREATED, Period.PRE, 0.1),
        PanelRow("t0", Group.TREATED, Period.PRE, 0.2),
    ]
    with pytest.raises(DomainError):
        DiDPanel.from_rows(rows)


_cell = st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=3)


@given(_cell, _cell, _cell, _cell, st.floats(-5, 5, allow_nan=False))
def test_did_constant_shift_invariance(tp, tq, cp, cq, shift):
    base, _ = did_estimate(_panel(tp, tq, cp, cq))
    shifted, _ = did_estimate(_panel(
        [v + shift for v in tp], [v + shift for v in tq],
        [v + shift for v in cp], [v + shift for v in cq]))
    assert shifted == pytest.approx(base, abs=1e-9)


@given(_cell, _cell, _cell, _cell)
def test_did_group_swap_antisymmetry(tp, tq, cp, cq):
    forward, _ = did_estimate(_panel(tp, tq, cp, cq))
    backward, _ = did_estimate(_panel(cp, cq, tp, tq))
    assert backward == -forward


@given(_cell, _cell, _cell, _cell)
def test_did_matches_hand_oracle(tp, tq, cp, cq):
    effect, _ = did_estimate(_panel(tp, tq, cp, cq))
    rows = ([("treated", "pre", v) for v in tp]
            + [("treated", "post", v) for v in tq]
            + [("control", "pre", v) for v in cp]
            + [("control", "post", v) for v in cq])
    assert effect == pytest.approx(did_by_hand(rows), abs=1e-12)


# ---------------------------------------------------------------------------
# fitted-weight overlay
# ---------------------------------------------------------------------------

def test_overlay_weights_floor_scale_and_order():
    model = LogisticModel(
        coefficients=(0.3, -2.0, -1.0, -0.5, -0.05, 0.2, -0.8, -1.2),
        feature_names=("intercept",) + tuple(SIGNAL_IDS),
        base_feature_count=7, with_interactions=False, l2_penalty=0.0,
        converged=True, iterations=0, final_loss=0.0)
    weights = fitted_weight_overlay(model)
    assert set(weights) == set(SIGNAL_IDS)
    mean = sum(weights.values()) / len(weights)
    assert mean == pytest.approx(1.0, abs=1e-12)
    assert all(w > 0 for w in weights.values())
    # S4 barely protective and S5 actively harmful both land on the floor
    assert weights["S4"] == weights["S5"] == min(weights.values())
    # more protective coefficients earn more weight
    assert weights["S1"] > weights["S2"] > weights["S3"] > weights["S4"]


# ---------------------------------------------------------------------------
# the seeded effectiveness study
# ---------------------------------------------------------------------------

def test_study_shape_and_counts(study):
    assert study.seed == 42
    assert dict(study.counts) == {
        "genuine": 100, "inexperienced": 100, "spoofer": 100}
    assert study.with_interactions is False
    assert study.l2_penalty == 0.01
    assert study.n_train == 240
    assert study.n_holdout == 60


def test_study_pins(study):
    for name, pinned in STUDY_PINS.items():
        value = getattr(study, name)
        if name == "iterations":
            assert value == pinned, name
        else:
            assert value == pytest.approx(pinned, rel=1e-9), name
    assert study.converged is True


def test_study_coefficients_all_protective(study):
    for signal_id in SIGNAL_IDS:
        assert study.coefficients[signal_id] < 0, signal_id
        assert study.coefficients[signal_id] == pytest.approx(
            PINNED_COEFFICIENTS[signal_id], rel=1e-9)
    assert study.coefficients["intercept"] == pytest.approx(
        PINNED_COEFFICIENTS["intercept"], rel=1e-9)


def test_study_holdout_composite_auc_beats_chance(study):
    assert study.auc_composite_holdout > 0.7
    assert study.auc_model_holdout > 0.5


def test_study_overlay_pinned(study):
    assert set(study.fitted_signal_weights) == set(SIGNAL_IDS)
    for signal_id, pinned in PINNED_OVERLAY.items():
        assert study.fitted_signal_weights[signal_id] == pytest.approx(
            pinned, rel=1e-9)
    mean = sum(study.fitted_signal_weights.values()) / 7
    assert mean == pytest.approx(1.0, abs=1e-12)


def test_study_gradient_deviation_small(study):
    assert study.max_gradient_deviation < 1e-3


def test_study_document_serializes(study):
    doc = study_to_dict(study)
    text = canonical_dumps(doc)
    assert '"auc_model_holdout"' in text
    assert doc["seed"] == 42


def test_study_rejects_single_class_population(cfg):
    population = generate_population(
        default_archetypes(), {"genuine": 12}, seed=3)
    # genuine actors rarely have incidents; force a single class
    incidents = {actor_id: False for actor_id in population.incidents}
    forced = type(population)(
        population.snapshots, population.labels, incidents, population.seed)
    with pytest.raises(DegenerateLabels):
        run_effectiveness_study(forced, cfg)
