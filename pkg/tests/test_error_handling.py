"""
Tests for the error types, the CLI error boundary, and logging/tracing setup.
"""
import io
import json
import logging

import pytest

from error_handling import (
    EXIT_INTERNAL,
    EXIT_OK,
    EXIT_VALIDATION,
    AlreadyExistsError,
    ErrorCode,
    ErrorHandlingConfig,
    InvalidStateError,
    InvariantViolation,
    NotFoundError,
    TEKError,
    ValidationError,
    log_error,
    run_cli,
    setup_logging,
    setup_tracing,
    trace_span,
)


@pytest.mark.unit
class TestErrorTypes:
    @pytest.mark.parametrize("error,code,exit_code", [
        (ValidationError("bad"), ErrorCode.VALIDATION_ERROR, EXIT_VALIDATION),
        (NotFoundError("thread", 4), ErrorCode.NOT_FOUND, EXIT_VALIDATION),
        (AlreadyExistsError("thread", 4, "thread exists"), ErrorCode.ALREADY_EXISTS, EXIT_VALIDATION),
        (InvalidStateError("criticality immutable"), ErrorCode.INVALID_STATE, EXIT_VALIDATION),
        (InvariantViolation("accounting", "ticks lost"), ErrorCode.INVARIANT_VIOLATION, EXIT_INTERNAL),
    ])
    def test_codes(self, error, code, exit_code):
        assert isinstance(error, TEKError)
        assert error.code is code
        assert error.exit_code == exit_code
        assert error.to_dict()["code"] == code.value

    def test_not_found_default_message(self):
        error = NotFoundError("thread", 9)
        assert error.message == "no such thread"
        assert error.details == {"resource": "thread", "id": 9}

    def test_invariant_details(self):
        error = InvariantViolation("fast_exclusive", "lazy ran", details={"tick": 3})
        assert error.details == {"invariant": "fast_exclusive", "tick": 3}

    def test_field_errors(self):
        error = ValidationError("x", details={"errors": [{"field": "thread.count", "line": 3, "message": "m"}]})
        assert error.field_errors[0]["line"] == 3

    def test_from_exception(self):
        wrapped = TEKError.from_exception(RuntimeError("boom"))
        assert wrapped.code is ErrorCode.UNKNOWN_ERROR
        assert wrapped.exit_code == EXIT_INTERNAL
        assert wrapped.details == {"exception_type": "RuntimeError"}
        original = ValidationError("keep")
        assert TEKError.from_exception(original) is original


@pytest.mark.unit
class TestRunCli:
    def test_success(self):
        assert run_cli(lambda argv: EXIT_OK, ["run"]) == EXIT_OK

    def test_validation_error_exits_one(self):
        def fail(argv):
            raise ValidationError("scenario.scn:4: thread.count: must be >= 0")

        stderr = io.StringIO()
        assert run_cli(fail, ["run"], stderr=stderr) == EXIT_VALIDATION
        report = json.loads(stderr.getvalue())
        assert report["error"]["code"] == "validation_error"
        assert report["error"]["exit_code"] == 1

    def test_invariant_exits_two(self):
        def fail(argv):
            raise InvariantViolation("accounting", "ticks lost")

        assert run_cli(fail, [], stderr=io.StringIO()) == EXIT_INTERNAL

    def test_unexpected_exception_exits_two(self):
        def fail(argv):
            raise KeyError("oops")

        stderr = io.StringIO()
        assert run_cli(fail, [], stderr=stderr) == EXIT_INTERNAL
        assert json.loads(stderr.getvalue())["error"]["details"]["exception_type"] == "KeyError"

    def test_errors_are_logged(self, mocker):
        log = mocker.patch("error_handling.middleware.logger")

        def fail(argv):
            raise ValidationError("bad")

        run_cli(fail, ["run", "x.scn"], stderr=io.StringIO())
        level, message = log.log.call_args.args[:2]
        assert level == logging.WARNING and message == "bad"
        assert log.log.call_args.kwargs["extra"]["argv"] == "run x.scn"


@pytest.mark.unit
class TestLogging:
    def test_json_output(self):
        stream = io.StringIO()
        logger = setup_logging(ErrorHandlingConfig(log_level="info", enable_tracing=False), stream=stream)
        logging.getLogger("tek.kernel").info("run finished", extra={"mode": "tek", "ticks": 10})

        line = json.loads(stream.getvalue().strip().splitlines()[-1])
        assert line["message"] == "run finished"
        assert line["name"] == "tek.kernel"
        assert line["mode"] == "tek" and line["ticks"] == 10
        assert logger.name == "tek" and logger.propagate is False

    def test_level_from_environment(self, monkeypatch):
        monkeypatch.setenv("TEK_LOG_LEVEL", "debug")
        assert ErrorHandlingConfig().log_level == "DEBUG"

    def test_setup_replaces_handlers(self):
        config = ErrorHandlingConfig(enable_tracing=False)
        setup_logging(config, stream=io.StringIO())
        logger = setup_logging(config, stream=io.StringIO())
        assert len(logger.handlers) == 1

    def test_log_error_context(self, mocker):
        logger = mocker.Mock()
        log_error(AlreadyExistsError("thread", 7, "thread exists"), logger, level=logging.WARNING)
        extra = logger.log.call_args.kwargs["extra"]
        assert extra["error_code"] == "already_exists"
        assert extra["detail_id"] == 7


@pytest.mark.unit
class TestTracing:
    def test_disabled_under_pytest(self):
        assert setup_tracing(otlp_endpoint="http://localhost:4317") is None

    def test_trace_span_passes_through(self):
        @trace_span("tek.test")
        def add(a, b):
            return a + b

        assert add(2, 3) == 5

    def test_trace_span_reraises(self):
        @trace_span("tek.test")
        def fail():
            raise ValidationError("nope")

        with pytest.raises(ValidationError):
            fail()

    def test_trace_span_rejects_coroutines(self):
        with pytest.raises(TypeError):
            @trace_span("tek.async")
            async def coro():
                return None
