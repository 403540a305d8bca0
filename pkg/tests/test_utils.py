import logging

import pytest

from lfqtok.utils import logging as lfq_logging
from lfqtok.utils.helpers import flatten_keys, largest_divisor_at_most, unflatten_keys

# ──────────────────────────────────────────────────────────────────────────────
# LOGGING
# ──────────────────────────────────────────────────────────────────────────────


@pytest.mark.parametrize(
    "helper,level",
    [(lfq_logging.log_info, logging.INFO),
     (lfq_logging.log_warning, logging.WARNING),
     (lfq_logging.log_error, logging.ERROR)],
    ids=["info", "warning", "error"],
)
def test_log_helpers_use_the_package_logger(helper, level, caplog):
    with caplog.at_level(logging.DEBUG, logger="lfqtok"):
        helper("checkpoint written")
    assert [(r.name, r.levelno, r.getMessage()) for r in caplog.records] == [("lfqtok", level, "checkpoint written")]


def test_env_files_without_dotenv_warn_once(monkeypatch, capsys):
    monkeypatch.setattr(lfq_logging, "load_dotenv", None)
    assert lfq_logging.load_env_files() is False
    assert capsys.readouterr().err.count("python-dotenv is not installed") == 1


def test_env_files_load_package_then_working_directory(monkeypatch):
    calls = []
    monkeypatch.setattr(lfq_logging, "load_dotenv", lambda **kwargs: calls.append(kwargs.get("dotenv_path")))
    assert lfq_logging.load_env_files() is True
    assert calls == [lfq_logging.package_dir / ".env", None]


def test_set_level_accepts_names():
    before = lfq_logging.logger.level
    try:
        lfq_logging.set_level("debug")
        assert lfq_logging.logger.level == logging.DEBUG
        lfq_logging.set_level("nonsense")
        assert lfq_logging.logger.level == logging.INFO
    finally:
        lfq_logging.logger.setLevel(before)


# ──────────────────────────────────────────────────────────────────────────────
# HELPERS
# ──────────────────────────────────────────────────────────────────────────────

def test_flatten_inverts_unflatten():
    flat = {"steps": 3, "tokenizer.base_channels": 4, "tokenizer.lfq.codebook_size": 16}
    assert unflatten_keys(flat) == {"steps": 3, "tokenizer": {"base_channels": 4, "lfq": {"codebook_size": 16}}}
    assert flatten_keys(unflatten_keys(flat)) == flat


@pytest.mark.parametrize("flat", [{"a": 1, "a.b": 2}, {"a.b": 2, "a": 1}], ids=["scalar-first", "nested-first"])
def test_unflatten_rejects_conflicts(flat):
    with pytest.raises(ValueError):
        unflatten_keys(flat)


def test_largest_divisor_at_most():
    assert largest_divisor_at_most(48, 32) == 24
    assert largest_divisor_at_most(7, 4) == 1
    assert largest_divisor_at_most(4, 8) == 4
