import logging
from typing import Any, Dict, Optional, Type

try:
    from cdc_shuffle.core.config_loader import ShuffleSettings
    from cdc_shuffle.schemes.base_scheme import BaseScheme
    from cdc_shuffle.schemes.fsct import FsctScheme
    from cdc_shuffle.schemes.osct import OsctScheme
except ImportError:
    import sys, os  # type: ignore
    sys.path.append(os.path.join(os.path.dirname(__file__), '../..'))  # type: ignore
    from cdc_shuffle.core.config_loader import ShuffleSettings  # type: ignore
    from cdc_shuffle.schemes.base_scheme import BaseScheme  # type: ignore
    from cdc_shuffle.schemes.fsct import FsctScheme  # type: ignore
    from cdc_shuffle.schemes.osct import OsctScheme  # type: ignore


class SchemeEngine:
    def __init__(self, settings: Optional[ShuffleSettings] = None, logger_name: str = 'cdc_shuffle.SchemeEngine'):
        self.settings = settings if settings is not None else ShuffleSettings()
        self.logger = logging.getLogger(logger_name)
        self.schemes: Dict[str, BaseScheme] = {}
        self.logger.debug("SchemeEngine initialized.")

    def get_available_scheme_types(self) -> Dict[str, Type[BaseScheme]]:
        return {
            OsctScheme.scheme_type_name: OsctScheme,
            FsctScheme.scheme_type_name: FsctScheme,
        }

    def load_scheme(self, scheme_type_name: str, params: Optional[Dict[str, Any]] = None) -> Optional[BaseScheme]:
        scheme_class = self.get_available_scheme_types().get(scheme_type_name)
        if scheme_class is None:
            self.logger.error(f"Unknown scheme type '{scheme_type_name}'. "
                              f"Available: {sorted(self.get_available_scheme_types())}")
            return None
        try:
            scheme = scheme_class(settings=self.settings, params=params)
            self.schemes[scheme_type_name] = scheme
            self.logger.debug(f"Scheme '{scheme_type_name}' loaded.")
            return scheme
        except Exception as e:
            self.logger.error(f"Failed to load scheme '{scheme_type_name}': {e}", exc_info=True)
            return None

    def get_scheme(self, scheme_type_name: str) -> Optional[BaseScheme]:
        return self.schemes.get(scheme_type_name) or self.load_scheme(scheme_type_name)

