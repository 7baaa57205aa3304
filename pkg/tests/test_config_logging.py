import logging
import sys

import pytest

from cdc_shuffle.core.config_loader import (DEFAULT_MAX_RETRIES, DEFAULT_SEED, DEFAULT_SWEEP_SAMPLES,
                                            ConfigManager, ShuffleSettings, load_log_level)
from cdc_shuffle.core.logger_setup import setup_logger


@pytest.fixture
def env_file(tmp_path, clean_env):
    path = tmp_path / ".env"
    path.write_text("CDC_FIELD_BITS=8\nCDC_SEED=77\nLOG_LEVEL=DEBUG\nCDC_SWEEP_SAMPLES=5\n"
                    f"CDC_LOG_DIR={tmp_path / 'logs'}\n")
    return str(path)


@pytest.fixture
def config_manager(tmp_path, env_file) -> ConfigManager:
    return ConfigManager(config_file_path=str(tmp_path / "cdc_config.json"), env_file_path=env_file)


def test_settings_come_from_the_env_file(config_manager, tmp_path):
    settings = config_manager.load_shuffle_settings()
    assert settings == ShuffleSettings(field_bits=8, seed=77, max_retries=DEFAULT_MAX_RETRIES, verify=True)
    assert config_manager.load_sweep_samples() == 5
    assert config_manager.load_log_directory() == str(tmp_path / "logs")
    assert config_manager.load_log_level_from_env() == logging.DEBUG


def test_overrides_win_unless_none(config_manager):
    settings = config_manager.load_shuffle_settings(seed=5, field_bits=None, verify=False)
    assert (settings.seed, settings.field_bits, settings.verify) == (5, 8, False)


def test_bad_values_fall_back_to_defaults(tmp_path, clean_env):
    path = tmp_path / ".env"
    path.write_text("CDC_SEED=not-a-number\nCDC_MAX_RETRIES=0\n")
    cm = ConfigManager(config_file_path=str(tmp_path / "c.json"), env_file_path=str(path))
    settings = cm.load_shuffle_settings()
    assert settings.seed == DEFAULT_SEED
    assert settings.max_retries == DEFAULT_MAX_RETRIES
    assert cm.load_sweep_samples() == DEFAULT_SWEEP_SAMPLES


def test_missing_env_file_is_created(tmp_path, clean_env):
    path = tmp_path / "fresh.env"
    ConfigManager(config_file_path=str(tmp_path / "c.json"), env_file_path=str(path))
    assert path.exists()


def test_save_setting_to_env(config_manager, env_file):
    assert config_manager.save_setting_to_env("CDC_SEED", "99")
    assert config_manager.load_shuffle_settings().seed == 99
    with open(env_file, encoding='utf-8') as f:
        assert "CDC_SEED='99'" in f.read()


def test_app_config_round_trip(config_manager, tmp_path):
    assert config_manager.load_app_config() is None
    assert config_manager.save_app_config({"K": 4, "samples": 5})
    assert config_manager.load_app_config() == {"K": 4, "samples": 5}
    (tmp_path / "cdc_config.json").write_text("{broken")
    assert config_manager.load_app_config() is None


def test_early_log_level(env_file):
    assert load_log_level(env_file) == logging.DEBUG


def test_setup_logger_writes_to_stderr_and_file(tmp_path):
    log_dir = tmp_path / "logs"
    logger = setup_logger(name='cdc_shuffle.test_setup', log_file='t.log', level=logging.INFO,
                          log_directory=str(log_dir))
    stream_handlers = [h for h in logger.handlers if type(h) is logging.StreamHandler]
    assert len(stream_handlers) == 1 and stream_handlers[0].stream is sys.stderr
    logger.info("hello")
    for h in logger.handlers:
        h.flush()
    assert "hello" in (log_dir / "t.log").read_text(encoding='utf-8')

    first = list(logger.handlers)
    again = setup_logger(name='cdc_shuffle.test_setup', log_file='t.log', level=logging.INFO, log_directory=None)
    assert len(again.handlers) == 1
    for h in first:
        h.close()


def test_setup_logger_reads_level_from_env(monkeypatch):
    monkeypatch.setenv('LOG_LEVEL', 'warning')
    logger = setup_logger(name='cdc_shuffle.test_env_level', log_directory=None)
    assert logger.level == logging.WARNING
