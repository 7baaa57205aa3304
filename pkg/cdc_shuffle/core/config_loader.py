import os
import logging
import json
from dataclasses import dataclass, asdict
from dotenv import load_dotenv, set_key, find_dotenv
from typing import Optional, Dict, Any

DEFAULT_FIELD_BITS = 16
DEFAULT_SEED = 2024
DEFAULT_MAX_RETRIES = 16
DEFAULT_SWEEP_SAMPLES = 50


@dataclass(frozen=True)
class ShuffleSettings:
    field_bits: int = DEFAULT_FIELD_BITS
    seed: int = DEFAULT_SEED
    max_retries: int = DEFAULT_MAX_RETRIES
    verify: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _env_int(name: str, default: int, logger: Optional[logging.Logger] = None) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == '':
        return default
    try:
        return int(raw)
    except ValueError:
        if logger:
            logger.warning(f"Environment value {name}={raw!r} is not an integer. Using default {default}.")
        return default


class ConfigManager:
    def __init__(self,
                 config_file_path: str = 'cdc_config.json',
                 env_file_path: Optional[str] = None):
        self.logger = logging.getLogger('cdc_shuffle.ConfigManager')

        if env_file_path:
            self.env_file_path = env_file_path
        else:
            self.env_file_path = find_dotenv(usecwd=True, raise_error_if_not_found=False)
            if not self.env_file_path or not os.path.exists(self.env_file_path):
                project_root_guess = os.path.abspath(os.path.join(os.path.dirname(__file__), '../../'))
                self.env_file_path = os.path.join(project_root_guess, '.env')

        if not os.path.exists(self.env_file_path):
            try:
                with open(self.env_file_path, 'w'):
                    pass
                self.logger.info(f"Created empty .env file at: {self.env_file_path}")
            except IOError as e:
                self.logger.error(f"Could not create .env file at {self.env_file_path}: {e}")

        self.config_file_path = config_file_path
        self.logger.debug(f"ConfigManager initialized. JSON config: '{self.config_file_path}', ENV config: '{self.env_file_path}'")
        self._load_env()

    def _load_env(self):
        """Loads environment variables from the .env file, overriding the process environment."""
        if self.env_file_path and os.path.exists(self.env_file_path):
            load_dotenv(dotenv_path=self.env_file_path, override=True)
            self.logger.debug(f"Environment variables loaded from: {self.env_file_path}")
        else:
            self.logger.debug(f".env file not found at {self.env_file_path}. Using system environment variables or defaults.")

    def load_shuffle_settings(self, **overrides: Any) -> ShuffleSettings:
        """Builds ShuffleSettings from CDC_* keys; keyword overrides (CLI flags) win when not None."""
        self._load_env()
        values = {
            'field_bits': _env_int('CDC_FIELD_BITS', DEFAULT_FIELD_BITS, self.logger),
            'seed': _env_int('CDC_SEED', DEFAULT_SEED, self.logger),
            'max_retries': _env_int('CDC_MAX_RETRIES', DEFAULT_MAX_RETRIES, self.logger),
            'verify': True,
        }
        values.update({k: v for k, v in overrides.items() if v is not None and k in values})
        if values['max_retries'] < 1:
            self.logger.warning(f"CDC_MAX_RETRIES={values['max_retries']} is below 1. Using {DEFAULT_MAX_RETRIES}.")
            values['max_retries'] = DEFAULT_MAX_RETRIES
        return ShuffleSettings(**values)

    def load_sweep_samples(self) -> int:
        self._load_env()
        return _env_int('CDC_SWEEP_SAMPLES', DEFAULT_SWEEP_SAMPLES, self.logger)

    def load_log_directory(self) -> str:
        self._load_env()
        return os.getenv('CDC_LOG_DIR', 'logs')

    def save_setting_to_env(self, key_name: str, key_value: str) -> bool:
        """Saves a single setting to the .env file."""
        try:
            if not os.path.exists(self.env_file_path):
                with open(self.env_file_path, 'w'):
                    pass

            success, _, _ = set_key(self.env_file_path, key_name, key_value, quote_mode="always")
            if success:
                self.logger.info(f"Saved {key_name} to {self.env_file_path}")
                self._load_env()
            else:
                self.logger.error(f"Failed to save {key_name} to {self.env_file_path} using set_key.")
            return bool(success)
        except Exception as e:
            self.logger.error(f"Exception saving {key_name} to .env: {e}", exc_info=True)
            return False

    def load_log_level_from_env(self) -> int:
        self._load_env()
        level_str = os.getenv('LOG_LEVEL', 'INFO').upper()
        return getattr(logging, level_str, logging.INFO)

    def save_app_config(self, config_data: Dict[str, Any]) -> bool:
        try:
            with open(self.config_file_path, 'w', encoding='utf-8') as f:
                json.dump(config_data, f, indent=4)
            self.logger.info(f"Application config saved to {self.config_file_path}")
            return True
        except (IOError, TypeError) as e:
            self.logger.error(f"Error saving app config to {self.config_file_path}: {e}", exc_info=True)
            return False

    def load_app_config(self) -> Optional[Dict[str, Any]]:
        if not os.path.exists(self.config_file_path):
            self.logger.info(f"App config file {self.config_file_path} not found. Returning None.")
            return None
        try:
            with open(self.config_file_path, 'r', encoding='utf-8') as f:
                config_data = json.load(f)
            self.logger.info(f"Application config loaded from {self.config_file_path}")
            return config_data
        except (IOError, json.JSONDecodeError) as e:
            self.logger.error(f"Error loading app config from {self.config_file_path}: {e}", exc_info=True)
            return None


# Standalone helper for logger setup before a ConfigManager exists
def load_log_level(env_file_path: Optional[str] = None) -> int:
    """Loads the log level from .env, for early logger setup."""
    load_dotenv(dotenv_path=env_file_path if env_file_path and os.path.exists(env_file_path) else find_dotenv(usecwd=True, raise_error_if_not_found=False))
    level_str = os.getenv('LOG_LEVEL', 'INFO').upper()
    return getattr(logging, level_str, logging.INFO)


if __name__ == '__main__':
    logging.basicConfig(level=logging.DEBUG)
    logger = logging.getLogger('test_config_manager')

    test_env_path = ".env.test_config_loader"
    test_json_path = "cdc_config.test_config_loader.json"
    with open(test_env_path, "w") as f:
        f.write("CDC_FIELD_BITS=8\n")
        f.write("LOG_LEVEL=DEBUG\n")

    cm = ConfigManager(config_file_path=test_json_path, env_file_path=test_env_path)
    settings = cm.load_shuffle_settings()
    logger.info(f"Settings: {settings}")
    assert settings.field_bits == 8
    assert cm.load_log_level_from_env() == logging.DEBUG

    cm.save_app_config({"K": 4, "samples": 5})
    assert cm.load_app_config() == {"K": 4, "samples": 5}

    cm.save_setting_to_env("CDC_SEED", "99")
    assert cm.load_shuffle_settings().seed == 99

    for path in (test_env_path, test_json_path):
        if os.path.exists(path):
            os.remove(path)
    logger.info("--- ConfigManager smoke test finished ---")
