"""Label scaler behavior: round trips, pins, persistence."""

import pytest

from cnn_trainer.errors import SchemaViolation
from cnn_trainer.scalers import (LABEL_FIELDS, MinMaxScaler,
                                 denormalize_labels, normalize_labels,
                                 scalers_from_dict, scalers_from_ranges,
                                 scalers_to_dict)

RANGES = {"g0": [1.5e-10, 2.5e-10, "linear"],
          "v0_volt": [0.15, 0.40, "linear"],
          "nu0": [1e-3, 20.0, "log"],
          "beta": [0.0, 2.1, "linear"],
          "gamma0": [0.0, 24.0, "linear"],
          "t_ox": [5e-9, 20e-9, "linear"]}


class TestMinMaxScaler:
    def test_linear_round_trip(self):
        s = MinMaxScaler("beta", 0.0, 2.1)
        for x in (0.0, 0.7, 1.3333, 2.1):
            assert s.denormalize(s.normalize(x)) == pytest.approx(
                x, rel=1e-12, abs=1e-15)

    def test_log_round_trip(self):
        s = MinMaxScaler("nu0", 1e-3, 20.0, transform="log")
        for x in (1e-3, 0.02, 1.0, 19.99):
            assert s.denormalize(s.normalize(x)) == pytest.approx(
                x, rel=1e-12)

    def test_endpoints_map_to_unit_interval(self):
        s = MinMaxScaler("gamma0", 0.0, 24.0)
        assert s.normalize(0.0) == 0.0
        assert s.normalize(24.0) == 1.0

    def test_denormalize_clips_to_range(self):
        s = MinMaxScaler("gamma0", 0.0, 24.0)
        assert s.denormalize(1.7) == 24.0
        assert s.denormalize(-0.2) == 0.0

    def test_degenerate_range_pins(self):
        s = MinMaxScaler("beta", 1.2, 1.2)
        assert s.normalize(1.2) == 0.0
        assert s.denormalize(0.9) == 1.2
        assert s.denormalize(s.normalize(1.2)) == 1.2

    def test_validation(self):
        with pytest.raises(SchemaViolation):
            MinMaxScaler("x", 2.0, 1.0)
        with pytest.raises(SchemaViolation):
            MinMaxScaler("x", 0.0, 1.0, transform="log")
        with pytest.raises(SchemaViolation):
            MinMaxScaler("x", 0.0, 1.0, transform="sqrt")

    def test_dict_round_trip(self):
        s = MinMaxScaler("nu0", 1e-3, 20.0, transform="log")
        assert MinMaxScaler.from_dict(s.to_dict()) == s


class TestScalerSets:
    def test_from_ranges_converts_t_ox_to_nm(self):
        scalers = scalers_from_ranges(RANGES)
        assert scalers["t_ox"].lo == pytest.approx(5.0)
        assert scalers["t_ox"].hi == pytest.approx(20.0)

    def test_missing_parameter_rejected(self):
        bad = dict(RANGES)
        del bad["nu0"]
        with pytest.raises(SchemaViolation, match="nu0"):
            scalers_from_ranges(bad)

    def test_persistence_round_trip(self):
        scalers = scalers_from_ranges(RANGES)
        again = scalers_from_dict(scalers_to_dict(scalers))
        assert again == scalers

    def test_label_order_enforced(self):
        payload = scalers_to_dict(scalers_from_ranges(RANGES))
        payload["labels"] = payload["labels"][::-1]
        with pytest.raises(SchemaViolation, match="order"):
            scalers_from_dict(payload)

    def test_label_vector_round_trip(self):
        scalers = scalers_from_ranges(RANGES)
        params = {"g0": 2.18e-10, "v0_volt": 0.2, "nu0": 10.5,
                  "beta": 2.1, "gamma0": 20.8}
        values = normalize_labels(params, scalers)
        assert all(0.0 <= u <= 1.0 for u in values)
        back = denormalize_labels(values, scalers)
        for name in LABEL_FIELDS:
            assert back[name] == pytest.approx(params[name], rel=1e-12)

    def test_wrong_label_count_rejected(self):
        scalers = scalers_from_ranges(RANGES)
        with pytest.raises(SchemaViolation):
            denormalize_labels([0.5, 0.5], scalers)
