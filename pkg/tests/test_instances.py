import json

import numpy as np
import pytest

import chansense as cs


def base_doc():
    return {
        "label": "t",
        "n_channels": 2,
        "n_states": 2,
        "threshold_L": 2,
        "discount": 0.9,
        "transition": [[0.7, 0.3], [0.3, 0.7]],
        "rewards": [0.0, 1.0],
        "initial_pmfs": [[0.6, 0.4], [0.4, 0.6]],
    }


class TestSchema:
    def test_valid_document(self):
        spec = cs.spec_from_dict(base_doc())
        assert spec.n == 2 and spec.k == 2 and spec.label == "t"

    @pytest.mark.parametrize("key", ["n_channels", "n_states", "threshold_L",
                                     "discount", "transition", "rewards",
                                     "initial_pmfs"])
    def test_missing_field_names_path(self, key):
        doc = base_doc()
        del doc[key]
        with pytest.raises(cs.InstanceParseError) as info:
            cs.spec_from_dict(doc)
        assert key in str(info.value)

    def test_bad_row_sum_names_path(self):
        doc = base_doc()
        doc["transition"][1] = [0.8, 0.8]
        with pytest.raises(cs.InstanceParseError) as info:
            cs.spec_from_dict(doc)
        assert "transition[1]" in str(info.value)

    def test_bad_initial_names_path(self):
        doc = base_doc()
        doc["initial_pmfs"][0] = [0.6, "x"]
        with pytest.raises(cs.InstanceParseError) as info:
            cs.spec_from_dict(doc)
        assert "initial_pmfs[0]" in str(info.value)

    def test_nonmonotone_rewards_rejected(self):
        doc = base_doc()
        doc["rewards"] = [1.0, 0.0]
        with pytest.raises(cs.InstanceParseError) as info:
            cs.spec_from_dict(doc)
        assert "rewards" in str(info.value)

    def test_threshold_out_of_range(self):
        doc = base_doc()
        doc["threshold_L"] = 3
        with pytest.raises(cs.InstanceParseError) as info:
            cs.spec_from_dict(doc)
        assert "threshold_L" in str(info.value)

    def test_discount_out_of_range(self):
        doc = base_doc()
        doc["discount"] = 0.0
        with pytest.raises(cs.InstanceParseError):
            cs.spec_from_dict(doc)

    def test_rounded_rows_normalized_exactly(self):
        doc = base_doc()
        doc["transition"][0] = [0.7001, 0.2998]  # off by 1e-4, like published tables
        spec = cs.spec_from_dict(doc)
        assert spec.transition.matrix[0].sum() == pytest.approx(1.0, abs=1e-15)

    def test_row_sum_gate(self):
        doc = base_doc()
        doc["transition"][0] = [0.7, 0.28]  # off by 2e-2: beyond the loader gate
        with pytest.raises(cs.InstanceParseError):
            cs.spec_from_dict(doc)


class TestRoundTrip:
    def test_save_load_identity(self, tmp_path, golden_spec):
        path = tmp_path / "golden.json"
        cs.save_instance(golden_spec, path)
        again = cs.load_instance(path)
        assert np.array_equal(again.transition.matrix, golden_spec.transition.matrix)
        assert np.array_equal(again.rewards.values, golden_spec.rewards.values)
        for a, b in zip(again.initial_pmfs, golden_spec.initial_pmfs):
            assert np.array_equal(a.probs, b.probs)
        assert again.threshold == golden_spec.threshold
        assert again.discount == golden_spec.discount

    def test_random_spec_round_trips(self, tmp_path):
        spec = cs.random_spec(4, 3, 3, 0.9, 17, constraint="try_A1toA4")
        path = tmp_path / "random.json"
        cs.save_instance(spec, path)
        again = cs.load_instance(path)
        assert np.array_equal(again.transition.matrix, spec.transition.matrix)


class TestBuiltins:
    def test_names(self):
        assert set(cs.builtin_names()) == {"golden_k5", "two_state"}

    def test_golden_shape(self, golden_spec):
        assert golden_spec.n == 6 and golden_spec.k == 5
        assert golden_spec.threshold == 5 and golden_spec.discount == 1.0
        # initial beliefs are the transition rows 1, 1, 2, 3, 4, 5
        rows = [1, 1, 2, 3, 4, 5]
        for pmf, i in zip(golden_spec.initial_pmfs, rows):
            assert np.array_equal(pmf.probs, golden_spec.transition.row(i).probs)

    def test_two_state_is_positively_correlated(self, two_state_spec):
        assert cs.two_state_reduce(two_state_spec).ok

    def test_unknown_builtin(self):
        with pytest.raises(cs.InstanceParseError):
            cs.load_builtin("nope")

    def test_builtin_path_readable(self):
        path = cs.builtin_path("golden_k5")
        with open(path, "r", encoding="utf-8") as fh:
            json.load(fh)
