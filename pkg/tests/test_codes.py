"""Tests for the integer code tables and the exception hierarchy."""

import pytest

from blowup_solver.core.codes import (
    EstimateMethod,
    ExitCode,
    GKind,
    TerminationReason,
    TransformKind,
    choices_for,
    code_from_name,
    translate_code,
)
from blowup_solver.core.errors import (
    ConfigurationError,
    EstimationError,
    OutputError,
    ParseError,
    ProblemNotApplicableError,
    SingularTransformError,
    TooFewSamplesError,
)


class TestTranslation:
    """Test code <-> name translation."""

    def test_translate_known_code(self):
        """Names are lowercase and dash separated."""
        assert translate_code(TerminationReason.DERIVATIVE_DECAY) == "derivative-decay"
        assert translate_code(12) == "derivative-decay"
        assert translate_code(GKind.F_OVER_Y) == "f-over-y"

    def test_translate_unknown_code(self):
        """Unknown codes are reported, not raised."""
        assert translate_code(999) == "unknown-999"

    def test_code_from_name_accepts_spellings(self):
        """Dashes, underscores and case are all accepted."""
        for text in ("f-over-y", "f_over_y", "F_OVER_Y", " F-Over-Y "):
            assert code_from_name(GKind, text) is GKind.F_OVER_Y

    def test_code_from_name_lists_choices(self):
        """A bad name reports the valid choices."""
        with pytest.raises(KeyError, match="differential, nonlocal"):
            code_from_name(TransformKind, "implicit")

    def test_choices_for(self):
        """CLI choices follow table order."""
        assert choices_for(TransformKind) == ["differential", "nonlocal"]


class TestCodeImmutability:
    """Codes appear in summaries and exit statuses and must keep their values."""

    def test_exit_codes_unchanged(self):
        """Documented exit codes."""
        assert [int(c) for c in ExitCode] == [0, 1, 2, 3, 4, 5]

    def test_ranges_do_not_overlap(self):
        """Every table stays inside its documented range."""
        assert all(10 <= c < 20 for c in TerminationReason)
        assert all(20 <= c < 30 for c in TransformKind)
        assert all(30 <= c < 40 for c in EstimateMethod)
        assert all(50 <= c < 60 for c in GKind)


class TestErrors:
    """Each error carries the exit code the CLI reports."""

    def test_exit_codes(self):
        """Exit code by family."""
        assert ConfigurationError("x").exit_code == ExitCode.CONFIG
        assert ProblemNotApplicableError("x").exit_code == ExitCode.CONFIG
        assert ParseError(1, "x", "y").exit_code == ExitCode.PARSE
        assert SingularTransformError("x", 1.0, (0.0, 1.0)).exit_code == ExitCode.SINGULAR_TRANSFORM
        assert TooFewSamplesError("x").exit_code == ExitCode.ESTIMATION
        assert OutputError("x").exit_code == ExitCode.IO

    def test_configuration_error_is_value_error(self):
        """Callers catching ValueError still see configuration problems."""
        assert issubclass(ConfigurationError, ValueError)
        assert issubclass(TooFewSamplesError, EstimationError)

    def test_singular_transform_message_names_point(self):
        """The message names the parameter and the state."""
        err = SingularTransformError("vanishing denominator f", 2.5, (0.25, 3.0), ("x", "y"), "t")
        assert "t=2.5" in str(err)
        assert "x=0.25" in str(err)
        assert "y=3" in str(err)

    def test_parse_error_caret(self):
        """The caret sits under the offending column."""
        err = ParseError(3, "a number", "y^^2")
        assert err.caret() == "y^^2\n  ^"
