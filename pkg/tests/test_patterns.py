"""Tests for sim/patterns.py."""

import pytest

from nonmarkov_rb.sim.patterns import IdentityPattern, PatternKind


class TestFixedIds:
    def test_none(self) -> None:
        pattern = IdentityPattern.none()
        assert pattern.is_empty
        assert pattern.fixed_ids(10) == frozenset()
        assert pattern.label == "none"

    def test_prefix(self) -> None:
        pattern = IdentityPattern.prefix(3)
        assert pattern.fixed_ids(10) == {1, 2, 3}
        assert pattern.fixed_ids(2) == {1, 2}
        assert pattern.sequence_length(10) == 10
        assert pattern.label == "prefix_3"

    def test_prefix_zero_is_empty(self) -> None:
        assert IdentityPattern.prefix(0).is_empty
        assert IdentityPattern.prefix(0).label == "none"

    def test_interleave(self) -> None:
        pattern = IdentityPattern.interleave(2)
        assert pattern.sequence_length(3) == 9
        assert pattern.fixed_ids(3) == {2, 3, 5, 6, 8, 9}
        assert pattern.label == "interleave_2"

    def test_periodic(self) -> None:
        assert IdentityPattern.periodic(2, (2,)).fixed_ids(6) == {1, 3, 5}
        assert IdentityPattern.periodic(7, (7,)).fixed_ids(14) == set(range(1, 7)) | set(range(8, 14))

    def test_explicit_truncates(self) -> None:
        pattern = IdentityPattern.explicit([5, 2, 9])
        assert pattern.fixed_ids(6) == {2, 5}
        assert pattern.label == "explicit_2-5-9"
        assert pattern.recorded_ids(10) == (2, 5, 9)


class TestValidation:
    def test_negative_k(self) -> None:
        with pytest.raises(ValueError, match="k >= 0"):
            IdentityPattern.prefix(-1)

    def test_periodic_offsets(self) -> None:
        with pytest.raises(ValueError, match="random offsets"):
            IdentityPattern.periodic(3, (4,))
        with pytest.raises(ValueError, match="at least one random offset"):
            IdentityPattern.periodic(3, ())

    def test_explicit_indices_start_at_one(self) -> None:
        with pytest.raises(ValueError, match="start at 1"):
            IdentityPattern.explicit([0, 2])


class TestSerialization:
    def test_dict_round_trip(self) -> None:
        pattern = IdentityPattern.periodic(4, (2, 4))
        restored = IdentityPattern.from_dict(pattern.to_dict())
        assert restored == pattern
        assert restored.kind is PatternKind.PERIODIC
