"""Problem construction, observation bookkeeping and stream seeding."""

import numpy as np
import pytest

from paretomax.core import (
    BlackBoxId,
    BoxKind,
    HyperSampling,
    Method,
    ObservationSet,
    PURPOSE_HYPERS,
    PURPOSE_RFF,
    RunConfig,
    constraint,
    make_problem,
    objective,
    stream,
    stream_seed,
)


class TestMakeProblem:
    def test_valid(self):
        p = make_problem(2, [0, 0], [1, 1], num_objectives=2, num_constraints=1)
        assert p.dim == 2
        assert p.num_boxes == 3
        assert [b.label for b in p.boxes()] == ["f0", "f1", "c0"]

    def test_scalar_noise_broadcast(self):
        p = make_problem(1, [0], [1], 2, 1, noise_variance=0.1)
        assert p.noise_variance.shape == (3,)
        assert p.noise_for(constraint(0)) == 0.1

    def test_per_box_noise(self):
        p = make_problem(1, [0], [1], 1, 1, noise_variance=[0.1, 0.0])
        assert p.noise_for(objective(0)) == 0.1
        assert p.noise_for(constraint(0)) == 0.0

    def test_rejects_bad_bounds(self):
        with pytest.raises(ValueError):
            make_problem(2, [0, 1], [1, 1], 1)

    def test_rejects_no_objectives(self):
        with pytest.raises(ValueError):
            make_problem(1, [0], [1], 0)

    def test_rejects_negative_noise(self):
        with pytest.raises(ValueError):
            make_problem(1, [0], [1], 1, noise_variance=-0.5)

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            make_problem(3, [0, 0], [1, 1, 1], 1)


class TestBlackBoxId:
    def test_labels_round_trip(self):
        for box in (objective(0), objective(3), constraint(0), constraint(12)):
            assert BlackBoxId.from_label(box.label) == box

    def test_sort_objectives_first_then_index(self):
        boxes = [constraint(1), objective(1), constraint(0), objective(0)]
        ordered = sorted(boxes, key=lambda b: b.sort_key())
        assert [b.label for b in ordered] == ["f0", "f1", "c0", "c1"]

    def test_hashable(self):
        assert len({objective(0), objective(0), constraint(0)}) == 2


class TestObservationSet:
    def test_record_and_counts(self):
        p = make_problem(2, [0, 0], [1, 1], 1, 1)
        obs = ObservationSet(p)
        obs.record(objective(0), [0.5, 0.5], 1.0).record(objective(0), [0.1, 0.9], 2.0)
        obs.record(constraint(0), [0.5, 0.5], -1.0)
        assert obs.count(objective(0)) == 2
        assert obs.count(constraint(0)) == 1
        assert obs.total() == 3
        np.testing.assert_array_equal(obs.values(objective(0)), [1.0, 2.0])

    def test_duplicates_allowed(self):
        p = make_problem(1, [0], [1], 1)
        obs = ObservationSet(p)
        obs.record(objective(0), [0.5], 1.0)
        obs.record(objective(0), [0.5], 1.0)
        assert obs.count(objective(0)) == 2

    def test_out_of_bounds_rejected(self):
        p = make_problem(1, [0], [1], 1)
        obs = ObservationSet(p)
        with pytest.raises(ValueError):
            obs.record(objective(0), [1.5], 0.0)

    def test_unknown_box_rejected(self):
        p = make_problem(1, [0], [1], 1)
        obs = ObservationSet(p)
        with pytest.raises(ValueError):
            obs.record(constraint(0), [0.5], 0.0)

    def test_record_all_coupled(self):
        p = make_problem(1, [0], [1], 2, 1)
        obs = ObservationSet(p)
        obs.record_all([0.25], [1.0, 2.0, 3.0])
        assert obs.counts() == {objective(0): 1, objective(1): 1, constraint(0): 1}

    def test_all_inputs_deduplicates(self):
        p = make_problem(1, [0], [1], 1, 1)
        obs = ObservationSet(p)
        obs.record_all([0.25], [1.0, 0.5])
        obs.record(objective(0), [0.75], 2.0)
        assert obs.all_inputs().shape == (2, 1)

    def test_empty_inputs_shape(self):
        p = make_problem(3, [0, 0, 0], [1, 1, 1], 1)
        obs = ObservationSet(p)
        assert obs.inputs(objective(0)).shape == (0, 3)


class TestRunConfig:
    def test_defaults(self):
        cfg = RunConfig(method=Method.MESMOC_PLUS, iterations=10, seed=0)
        assert cfg.num_front_samples == 10
        assert cfg.front_size == 50
        assert cfg.rff_features == 500
        assert cfg.acq_grid_size == 1000
        assert cfg.hyper_sampling.count == 10
        assert cfg.resolved_initial_design(2) == 6
        assert cfg.resolved_initial_design(4) == 10

    def test_explicit_initial_design(self):
        cfg = RunConfig(Method.RANDOM, 5, 0, initial_design_size=3)
        assert cfg.resolved_initial_design(7) == 3

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            RunConfig(Method.RANDOM, 0, 0)
        with pytest.raises(ValueError):
            RunConfig(Method.RANDOM, 5, 0, front_size=0)

    def test_method_coupling(self):
        assert Method.MESMOC_PLUS_DEC.decoupled
        assert Method.MESMOC_DEC.decoupled
        assert not Method.MESMOC_PLUS.decoupled
        assert not Method.RANDOM.decoupled

    def test_method_values_round_trip(self):
        for m in Method:
            assert Method(m.value) is m

    def test_hyper_sampling_validation(self):
        with pytest.raises(ValueError):
            HyperSampling(kind="mcmc")
        with pytest.raises(ValueError):
            HyperSampling(kind="fixed")  # params required


class TestStreams:
    def test_deterministic(self):
        a = stream(42, PURPOSE_RFF, 3, 1, 0).standard_normal(5)
        b = stream(42, PURPOSE_RFF, 3, 1, 0).standard_normal(5)
        np.testing.assert_array_equal(a, b)

    def test_distinct_purposes(self):
        a = stream(42, PURPOSE_RFF, 0).standard_normal(5)
        b = stream(42, PURPOSE_HYPERS, 0).standard_normal(5)
        assert not np.allclose(a, b)

    def test_distinct_paths(self):
        a = stream(42, PURPOSE_RFF, 0, 0, 0).standard_normal(5)
        b = stream(42, PURPOSE_RFF, 0, 0, 1).standard_normal(5)
        assert not np.allclose(a, b)

    def test_distinct_masters(self):
        a = stream(1, PURPOSE_RFF, 0).standard_normal(5)
        b = stream(2, PURPOSE_RFF, 0).standard_normal(5)
        assert not np.allclose(a, b)

    def test_stream_seed_stable(self):
        assert stream_seed(7, PURPOSE_HYPERS, 2) == stream_seed(7, PURPOSE_HYPERS, 2)
