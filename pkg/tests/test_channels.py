"""Tests for channel families, matrices and the constant-matrix text format."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from qres.channels import (
    ChannelFamily,
    FamilyKind,
    continuity_constant,
    entries_at,
    load_constant_matrix,
    matrix_at,
    parse_family,
    parse_family_kind,
    save_constant_matrix,
)
from qres.errors import ContinuityError, InvalidParameterError


class TestMatrices:
    """Transition matrices of the parametric families."""

    def test_bsc_flips_with_probability_nu_q(self):
        m = matrix_at(ChannelFamily(kind="bsc", parameter=0.4), 0.5)
        assert_allclose(m.entries, [[0.8, 0.2], [0.2, 0.8]])

    def test_bec_erases_with_probability_tau_q(self):
        m = matrix_at(ChannelFamily(kind="bec", parameter=0.5), 0.4)
        assert_allclose(m.entries, [[0.8, 0.0, 0.2], [0.0, 0.8, 0.2]])
        assert m.output_alphabet == ("0", "1", "e")

    def test_z_channel_only_corrupts_ones(self):
        m = matrix_at(ChannelFamily(kind="z", parameter=0.3), 0.5)
        assert_allclose(m.entries, [[1.0, 0.0], [0.15, 0.85]])

    def test_rows_are_stochastic(self):
        rng = np.random.default_rng(7)
        for kind in ("bsc", "bec", "z"):
            family = ChannelFamily(kind=kind, parameter=float(rng.random()))
            for q in rng.random(20):
                assert_allclose(matrix_at(family, float(q)).entries.sum(axis=1), 1.0, atol=1e-12)

    def test_query_size_outside_unit_interval_is_rejected(self):
        family = ChannelFamily(kind="bsc", parameter=0.2)
        with pytest.raises(InvalidParameterError):
            matrix_at(family, 1.2)
        with pytest.raises(InvalidParameterError):
            matrix_at(family, float("nan"))

    def test_parameter_outside_unit_interval_is_rejected(self):
        with pytest.raises(InvalidParameterError):
            ChannelFamily(kind="bsc", parameter=1.5)

    def test_constant_channel_ignores_query_size(self):
        family = ChannelFamily.constant([[0.9, 0.1], [0.3, 0.7]])
        assert_allclose(matrix_at(family, 0.1).entries, matrix_at(family, 0.9).entries)

    def test_constant_channel_rows_must_sum_to_one(self):
        with pytest.raises(InvalidParameterError):
            ChannelFamily.constant([[0.9, 0.2], [0.3, 0.7]])

    def test_with_parameter_keeps_kind(self):
        family = ChannelFamily(kind="bec", parameter=0.2).with_parameter(0.7)
        assert family.kind is FamilyKind.BEC
        assert family.parameter == 0.7
        assert family.label == "bec:0.7"

    def test_constant_channel_has_no_parameter(self):
        with pytest.raises(InvalidParameterError):
            ChannelFamily.constant([[1.0, 0.0], [0.0, 1.0]]).with_parameter(0.1)


class TestContinuity:
    """Local Lipschitz constant of log P^q(y|x)."""

    def test_bsc_constant_at_window_edge(self):
        # |B| = 0.4 everywhere; the smallest entry on [0.4, 0.6] is 0.4 * 0.4
        family = ChannelFamily(kind="bsc", parameter=0.4)
        assert continuity_constant(family, 0.5, 0.1) == pytest.approx(2.5)

    def test_constant_channel_has_zero_constant(self):
        family = ChannelFamily.constant([[0.9, 0.1], [0.3, 0.7]])
        assert continuity_constant(family, 0.5, 0.1) == 0.0

    def test_window_must_fit_inside_unit_interval(self):
        family = ChannelFamily(kind="bsc", parameter=0.4)
        with pytest.raises(InvalidParameterError):
            continuity_constant(family, 0.2, 0.3)

    def test_constant_bounds_log_entries_on_random_windows(self):
        rng = np.random.default_rng(31)
        checked = 0
        for _ in range(300):
            kind = ("bsc", "bec", "z")[int(rng.integers(3))]
            family = ChannelFamily(kind=kind, parameter=float(rng.random()))
            q = float(rng.uniform(0.05, 0.95))
            xi0 = float(rng.uniform(0.01, 0.99)) * min(q, 1.0 - q)
            window = np.linspace(q - xi0, q + xi0, 41)
            entries = entries_at(family, window)
            support = entries_at(family, q) > 0.0
            try:
                c = continuity_constant(family, q, xi0)
            except ContinuityError:
                assert np.any(entries[:, support] <= 0.0)
                continue
            checked += 1
            logs = np.log(entries[:, support])
            drift = np.abs(logs - np.log(entries_at(family, q)[support]))
            assert np.all(drift <= c * np.abs(window - q)[:, None] + 1e-12)
        assert checked > 100

    def test_random_constant_matrices_have_zero_constant(self):
        rng = np.random.default_rng(32)
        for _ in range(20):
            family = ChannelFamily.constant(rng.dirichlet(np.ones(3), size=2).tolist())
            q = float(rng.uniform(0.1, 0.9))
            assert continuity_constant(family, q, 0.5 * min(q, 1.0 - q)) == 0.0


class TestParsing:
    """Family strings and constant-matrix files."""

    def test_parse_family(self):
        family = parse_family("bsc:0.4")
        assert family.kind is FamilyKind.BSC
        assert family.parameter == 0.4

    def test_parse_family_needs_parameter(self):
        with pytest.raises(InvalidParameterError):
            parse_family("bsc")

    def test_unknown_family(self):
        with pytest.raises(InvalidParameterError):
            parse_family("awgn:1")

    def test_parse_family_kind_ignores_parameter(self):
        assert parse_family_kind("z:0.3") is FamilyKind.Z
        assert parse_family_kind("bec") is FamilyKind.BEC

    def test_constant_matrix_file(self, tmp_path):
        family = ChannelFamily.constant([[0.7, 0.2, 0.1], [0.1, 0.3, 0.6]])
        path = tmp_path / "channel.txt"
        save_constant_matrix(family, path)
        loaded = parse_family(f"constant:{path}")
        assert loaded.kind is FamilyKind.CONSTANT
        assert_allclose(loaded.matrix, family.matrix)

    def test_constant_matrix_bad_header(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("3 2\n0.5 0.5\n0.5 0.5\n0.5 0.5\n")
        with pytest.raises(InvalidParameterError):
            load_constant_matrix(path)

    def test_constant_matrix_wrong_row_length(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 2\n0.5 0.5\n1.0\n")
        with pytest.raises(InvalidParameterError):
            load_constant_matrix(path)
