from __future__ import annotations

import json
import logging
from collections.abc import Callable

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chfis import (
    GeneralizedDataset,
    Hook,
    IfsModel,
    IfsParameters,
    StabilityReport,
    bound_dependent,
    bound_hidden,
    bound_hidden_surface,
    bound_independent,
    build_model,
    build_rescale,
    check_ratio_invariance,
    direct_sup_diff,
    empirical_sup_diff,
    generate_perturbation,
    load_sample,
    perturbation_metric,
    run_campaign,
    stability_bounds,
    validate_dataset,
    validate_parameters,
    verify_stability,
)
from chfis.errors import (
    AxesDiffer,
    DomainMismatch,
    MagnitudeTooLarge,
    NonUniformParameters,
    RatioConditionViolated,
    ShapeMismatch,
    ValuesDiffer,
)
from chfis.engine import DomainMaps
from chfis.spec import CampaignSpec, SolverSpec, StabilityConfig
from chfis.stability import RescaleMap, Violation, perturbation_sizes

type Bound = Callable[[GeneralizedDataset, GeneralizedDataset, IfsParameters], float]


def sample(name: str) -> GeneralizedDataset:
    return load_sample(name).dataset


def independent(cfg: StabilityConfig) -> Bound:
    return lambda base, pert, params: bound_independent(base, pert, params, cfg)


@pytest.mark.parametrize(
    ("name", "bound", "expected"),
    [
        ("case_ia", "independent", 0.0217),
        ("case_ib", "independent", 2.1667),
        ("case_iia", "dependent", 0.0227),
        ("case_iib", "dependent", 2.2667),
        ("case_iiia", "hidden", 0.0213),
        ("case_iiib", "hidden", 2.1333),
        ("case_iiia", "hidden_surface", 0.012),
        ("case_iiib", "hidden_surface", 1.2),
    ],
)
def test_error_table(
    table1: GeneralizedDataset,
    table1_params: IfsParameters,
    calibration: StabilityConfig,
    name: str,
    bound: str,
    expected: float,
) -> None:
    bounds: dict[str, Bound] = {
        "independent": independent(calibration),
        "dependent": bound_dependent,
        "hidden": bound_hidden,
        "hidden_surface": bound_hidden_surface,
    }

    assert bounds[bound](table1, sample(name), table1_params) == pytest.approx(expected, abs=5e-5)


@pytest.mark.parametrize(("name", "expected"), [("combined_a", 0.0657), ("combined_b", 6.5667)])
def test_metric_totals(
    table1: GeneralizedDataset,
    table1_params: IfsParameters,
    calibration: StabilityConfig,
    name: str,
    expected: float,
) -> None:
    assert perturbation_metric(table1, sample(name), table1_params, calibration) == pytest.approx(expected, abs=5e-5)


def test_bounds_ignore_preconditions(
    table1: GeneralizedDataset, table1_params: IfsParameters, calibration: StabilityConfig
) -> None:
    bounds = stability_bounds(table1, sample("combined_b"), table1_params, calibration)

    assert bounds.bound_xy == pytest.approx(2.1667, abs=5e-5)
    assert bounds.bound_z == pytest.approx(2.2667, abs=5e-5)
    assert bounds.bound_t == pytest.approx(2.1333, abs=5e-5)
    assert bounds.bound_t_hidden_surface == pytest.approx(1.2, abs=5e-5)
    assert bounds.metric_d == pytest.approx(6.5667, abs=5e-5)


def test_perturbation_sizes(table1: GeneralizedDataset) -> None:
    sizes = perturbation_sizes(table1, sample("combined_b"))

    assert sizes.max_xy_manhattan == pytest.approx(0.2)
    assert sizes.max_dz == pytest.approx(0.1)
    assert sizes.max_dt == pytest.approx(0.1)


def test_bound_preconditions(
    table1: GeneralizedDataset, table1_params: IfsParameters, calibration: StabilityConfig
) -> None:
    with pytest.raises(AxesDiffer):
        bound_dependent(table1, sample("case_ia"), table1_params)

    with pytest.raises(ValuesDiffer):
        bound_dependent(table1, sample("case_iiia"), table1_params)

    with pytest.raises(ValuesDiffer):
        bound_hidden(table1, sample("case_iia"), table1_params)

    with pytest.raises(ValuesDiffer):
        bound_independent(table1, sample("case_iia"), table1_params, calibration)


def test_bounds_need_uniform_parameters(table1: GeneralizedDataset) -> None:
    params = validate_parameters([[0.7, 0.6], [0.7, 0.7]], np.full((2, 2), 0.4), np.full((2, 2), 0.5), 2, 2)

    with pytest.raises(NonUniformParameters):
        bound_hidden(table1, sample("case_iiia"), params)


def test_bounds_use_magnitudes(table1: GeneralizedDataset) -> None:
    negative = validate_parameters(-0.7, -0.4, -0.5, 2, 2)
    positive = validate_parameters(0.7, 0.4, 0.5, 2, 2)

    assert bound_hidden(table1, sample("case_iiib"), negative) == bound_hidden(table1, sample("case_iiib"), positive)


def test_ratio_invariance(table1: GeneralizedDataset) -> None:
    assert check_ratio_invariance(table1, sample("case_ia")).holds

    skewed = table1.replace(x=[0.0, 1.5, 2.0])
    check = check_ratio_invariance(table1, skewed)

    assert not check.holds
    assert check.x_residuals.max() == pytest.approx(1.0)
    assert check.y_residuals.max() == 0


def test_ratio_condition_is_enforced(
    table1: GeneralizedDataset, table1_params: IfsParameters, calibration: StabilityConfig
) -> None:
    skewed = table1.replace(x=[0.0, 1.5, 2.0])

    with pytest.raises(RatioConditionViolated):
        bound_independent(table1, skewed, table1_params, calibration)

    with pytest.raises(RatioConditionViolated):
        build_rescale(table1, skewed)


def test_grids_must_have_the_same_size(table1: GeneralizedDataset) -> None:
    small = validate_dataset([0, 2], [0, 2], [[0.3, 0.6], [0.8, 0.6]], [[0.3, 0.5], [0.6, 0.9]])

    with pytest.raises(ShapeMismatch):
        check_ratio_invariance(table1, small)


def test_rescale_maps_nodes_to_nodes(table1: GeneralizedDataset) -> None:
    pert = sample("case_ib")
    rescale = build_rescale(table1, pert)

    x, y = rescale.apply(table1.x, table1.y)
    assert np.array_equal(x, pert.x)
    assert np.array_equal(y, pert.y)

    back = rescale.inverse(*rescale.apply(0.3, 1.7))
    assert tuple(map(float, back)) == pytest.approx((0.3, 1.7))

    (a, b), (c, d) = rescale.cell_maps(1, 2)
    assert a * 1.0 + b == pytest.approx(1.0)
    assert c * 2.0 + d == pytest.approx(1.9)


def test_identity_rescale(table1: GeneralizedDataset) -> None:
    assert RescaleMap.identity(table1).is_identity
    assert not build_rescale(table1, sample("case_ia")).is_identity


def test_rescale_warns_when_not_contained(table1: GeneralizedDataset, caplog: pytest.LogCaptureFixture) -> None:
    wider = table1.replace(x=[-0.1, 1.0, 2.1])

    with caplog.at_level(logging.WARNING, logger="chfis.stability"):
        build_rescale(table1, wider)

    assert "not inside" in caplog.text


def test_sup_diff_of_a_surface_with_itself(table1: GeneralizedDataset, table1_params: IfsParameters) -> None:
    model = build_model(table1, table1_params)

    assert empirical_sup_diff(model, model, None, 4, spec=SolverSpec()) == (0.0, 0.0)


def test_sup_diff_off_grid(table1: GeneralizedDataset, table1_params: IfsParameters) -> None:
    model_f = build_model(table1, table1_params)
    model_g = build_model(table1.replace(x=[0.0, 0.8, 2.0]), table1_params)

    diff = empirical_sup_diff(model_f, model_g, None, 3, spec=SolverSpec())

    assert 0 < diff.f1 < 2
    assert np.isfinite(diff.f2)


def test_sup_diff_domain_mismatch(table1: GeneralizedDataset, table1_params: IfsParameters) -> None:
    model_f = build_model(table1, table1_params)
    model_g = build_model(table1.replace(x=[0.0, 1.0, 1.5]), table1_params)

    with pytest.raises(DomainMismatch):
        empirical_sup_diff(model_f, model_g, None, 3, spec=SolverSpec())


def test_affine_reparametrization_preserves_the_surface(
    table1: GeneralizedDataset, table1_params: IfsParameters
) -> None:
    model_f = build_model(table1, table1_params)

    for seed in range(50):
        pert = generate_perturbation(table1, "x" if seed % 2 else "y", 0.1 * (1 + seed % 3), seed)
        model_g = build_model(pert, table1_params)

        diff = empirical_sup_diff(model_f, model_g, build_rescale(table1, pert), 6, spec=SolverSpec())

        assert diff.f1 <= 1e-9
        assert diff.f2 <= 1e-9


@pytest.mark.parametrize(
    "name", ["case_ia", "case_ib", "case_iia", "case_iib", "case_iiia", "case_iiib", "combined_a", "combined_b"]
)
def test_samples_have_no_hard_violations(
    table1: GeneralizedDataset, table1_params: IfsParameters, calibration: StabilityConfig, name: str
) -> None:
    report = verify_stability(table1, sample(name), table1_params, calibration, 6, spec=SolverSpec())

    assert not report.hard_violations
    assert report.rescaled_sup_f1 <= report.metric_d + 1e-9


@pytest.mark.parametrize("name", ["case_iia", "case_iib", "case_iiia", "case_iiib"])
def test_fixed_grid_samples_stay_within_the_metric(
    table1: GeneralizedDataset, table1_params: IfsParameters, calibration: StabilityConfig, name: str
) -> None:
    report = verify_stability(table1, sample(name), table1_params, calibration, 6, spec=SolverSpec())

    assert not report.violations
    assert report.empirical_sup_f1 == report.rescaled_sup_f1
    assert report.empirical_sup_f2 == report.rescaled_sup_f2


def test_moved_grid_is_measured_without_rescaling(
    table1: GeneralizedDataset,
    table1_params: IfsParameters,
    calibration: StabilityConfig,
    caplog: pytest.LogCaptureFixture,
) -> None:
    with caplog.at_level(logging.WARNING, logger="chfis.stability"):
        report = verify_stability(table1, sample("case_ia"), table1_params, calibration, 6, spec=SolverSpec())

    assert report.rescaled_sup_f1 <= 1e-9
    assert report.empirical_sup_f1 > report.bound_xy
    assert {v.bound for v in report.violations} == {"bound_xy", "metric_d"}
    assert not report.hard_violations
    assert "bound_xy" in caplog.text


def test_large_grid_move_stays_within_its_bound(
    table1: GeneralizedDataset, table1_params: IfsParameters, calibration: StabilityConfig
) -> None:
    report = verify_stability(table1, sample("case_ib"), table1_params, calibration, 6, spec=SolverSpec())

    assert report.rescaled_sup_f1 <= 1e-9
    assert 0.01 < report.empirical_sup_f1 <= report.bound_xy
    assert not report.violated


def test_direct_diff_of_a_surface_with_itself(table1_model: IfsModel) -> None:
    assert direct_sup_diff(table1_model, table1_model, 4, spec=SolverSpec()) == (0.0, 0.0)


def test_direct_diff_matches_rescaled_diff_on_a_fixed_grid(
    table1_model: IfsModel, table1_params: IfsParameters
) -> None:
    model_g = build_model(sample("combined_a").replace(x=[0, 1, 2], y=[0, 1, 2]), table1_params)

    direct = direct_sup_diff(table1_model, model_g, 5, spec=SolverSpec())

    assert direct == empirical_sup_diff(table1_model, model_g, None, 5, spec=SolverSpec())
    assert direct.f1 > 0


def test_direct_diff_skips_points_outside_the_base_domain(
    table1: GeneralizedDataset, table1_model: IfsModel, table1_params: IfsParameters
) -> None:
    wider = build_model(table1.replace(x=[-0.1, 1.0, 2.1]), table1_params)

    diff = direct_sup_diff(table1_model, wider, 4, spec=SolverSpec())

    assert 0 < diff.f1 < 2
    assert np.isfinite(diff.f2)


def test_direct_diff_domain_mismatch(table1: GeneralizedDataset, table1_model: IfsModel, table1_params: IfsParameters) -> None:
    elsewhere = build_model(table1.replace(x=[3.0, 4.0, 5.0]), table1_params)

    with pytest.raises(DomainMismatch):
        direct_sup_diff(table1_model, elsewhere, 3, spec=SolverSpec())


def test_report_fields(table1: GeneralizedDataset, table1_params: IfsParameters, calibration: StabilityConfig) -> None:
    report = verify_stability(table1, sample("case_iiib"), table1_params, calibration, 5, spec=SolverSpec())

    assert report.bound_t == pytest.approx(2.1333, abs=5e-5)
    assert report.bound_z == 0
    assert report.max_dt == pytest.approx(0.1)
    assert 0 < report.empirical_sup_f2 <= report.bound_t_hidden_surface

    data = json.loads(json.dumps(report.to_dict()))
    assert data["violated"] is False
    assert data["violations"] == []


def test_violations_split_into_hard_and_soft() -> None:
    report = StabilityReport(
        0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.1, 0.7, 0.1, 0.0, 0.1, 0.1,
        violations=(Violation("bound_z", 0.7, 0.2, True), Violation("metric_d", 0.7, 0.6, False)),
    )

    assert report.violated
    assert [v.bound for v in report.hard_violations] == ["bound_z"]
    assert report.to_dict()["violations"][1]["hard"] is False


def test_perturbation_is_seeded(table1: GeneralizedDataset) -> None:
    a = generate_perturbation(table1, "all", 0.01, 42)
    b = generate_perturbation(table1, "all", 0.01, 42)
    c = generate_perturbation(table1, "all", 0.01, 43)

    assert a == b
    assert a != c


@pytest.mark.parametrize("kind", ["x", "y", "z", "t"])
def test_perturbation_touches_only_its_kind(table1: GeneralizedDataset, kind: str) -> None:
    pert = generate_perturbation(table1, kind, 0.05, 3)  # pyright: ignore[reportArgumentType]

    for name in ("x", "y", "z", "t"):
        changed = not np.array_equal(getattr(pert, name), getattr(table1, name))
        assert changed == (name == kind)

    assert np.max(np.abs(pert.z - table1.z)) <= 0.05
    assert np.max(np.abs(pert.x - table1.x)) <= 0.05


def test_contained_perturbation_stays_inside(table1: GeneralizedDataset) -> None:
    for seed in range(20):
        pert = generate_perturbation(table1, "all", 0.1, seed)

        assert table1.x[0] <= pert.x[0] and pert.x[-1] <= table1.x[-1]
        assert table1.y[0] <= pert.y[0] and pert.y[-1] <= table1.y[-1]
        assert check_ratio_invariance(table1, pert).holds


def test_perturbation_errors(table1: GeneralizedDataset) -> None:
    with pytest.raises(MagnitudeTooLarge):
        generate_perturbation(table1, "x", 1.0, 0)

    with pytest.raises(ValueError):
        generate_perturbation(table1, "z", 0.0, 0)

    with pytest.raises(ValueError):
        generate_perturbation(table1, "w", 0.1, 0)  # pyright: ignore[reportArgumentType]


@pytest.mark.parametrize("kind", ["z", "t"])
def test_campaign_has_no_hard_violations(
    table1: GeneralizedDataset, table1_params: IfsParameters, calibration: StabilityConfig, kind: str
) -> None:
    reports = run_campaign(table1, table1_params, calibration, CampaignSpec(kind, seeds=range(100)))  # pyright: ignore[reportArgumentType]

    assert len(reports) == 100
    assert not any(r.hard_violations for r in reports)


def test_campaign_is_ordered_and_worker_independent(
    table1: GeneralizedDataset, table1_params: IfsParameters, calibration: StabilityConfig
) -> None:
    seen: list[int] = []
    on_report = Hook[[int, StabilityReport], None]()
    on_report += lambda seed, report: seen.append(seed)

    one = run_campaign(table1, table1_params, calibration, CampaignSpec("all", seeds=range(6), depth=4))
    many = run_campaign(
        table1, table1_params, calibration, CampaignSpec("all", seeds=range(6), depth=4, workers=3), on_report=on_report
    )

    assert one == many
    assert seen == list(range(6))


def test_every_bound_vanishes_without_a_perturbation(
    table1: GeneralizedDataset, table1_params: IfsParameters, calibration: StabilityConfig
) -> None:
    assert bound_independent(table1, table1, table1_params, calibration) == 0
    assert bound_dependent(table1, table1, table1_params) == 0
    assert bound_hidden(table1, table1, table1_params) == 0
    assert bound_hidden_surface(table1, table1, table1_params) == 0
    assert perturbation_metric(table1, table1, table1_params, StabilityConfig(m_bar=1.3, delta=0.5)) == 0

    report = verify_stability(table1, table1, table1_params, calibration, 4, spec=SolverSpec())

    assert report.empirical_sup_f1 == report.empirical_sup_f2 == 0
    assert not report.violated


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1.0, 0.5]))
def test_metric_is_symmetric_and_satisfies_the_triangle_inequality(seed: int, delta: float) -> None:
    base = sample("table1")
    params = validate_parameters(0.7, 0.4, 0.5, 2, 2)
    cfg = StabilityConfig(m_bar=1.3, delta=delta)

    middle = generate_perturbation(base, "all", 0.05, seed)
    far = generate_perturbation(middle, "all", 0.05, (seed + 1) % 2**32)

    def d(a: GeneralizedDataset, b: GeneralizedDataset) -> float:
        return perturbation_metric(a, b, params, cfg)

    assert d(base, middle) == pytest.approx(d(middle, base), rel=1e-12)
    assert d(base, far) <= d(base, middle) + d(middle, far) + 1e-12


@pytest.mark.parametrize("kind", ["x", "y"])
@pytest.mark.parametrize("contained", [True, False])
def test_axis_perturbations_keep_the_ratio(table1: GeneralizedDataset, kind: str, contained: bool) -> None:
    for seed in range(100):
        pert = generate_perturbation(table1, kind, 0.2, seed, contained=contained)  # pyright: ignore[reportArgumentType]
        check = check_ratio_invariance(table1, pert)

        assert check.holds
        assert check.x_residuals.max() <= 1e-12
        assert check.y_residuals.max() <= 1e-12


def test_perturbed_maps_are_the_base_maps_carried_through_the_rescale(table1: GeneralizedDataset) -> None:
    maps = DomainMaps.from_dataset(table1)

    for seed in range(20):
        pert = generate_perturbation(table1, "all", 0.1, seed, contained=seed % 2 == 0)
        maps_star = DomainMaps.from_dataset(pert)
        rescale = build_rescale(table1, pert)

        rng = np.random.default_rng(seed)
        xs = rng.uniform(pert.x[0], pert.x[-1], 50)
        ys = rng.uniform(pert.y[0], pert.y[-1], 50)
        kx, ky = rescale.inverse(xs, ys)

        for n in (1, 2):
            for m in (1, 2):
                (a, b), (c, d) = rescale.cell_maps(n, m)

                np.testing.assert_allclose(maps_star.phi(n, xs), a * maps.phi(n, kx) + b, rtol=0, atol=1e-12)
                np.testing.assert_allclose(maps_star.psi(m, ys), c * maps.psi(m, ky) + d, rtol=0, atol=1e-12)
