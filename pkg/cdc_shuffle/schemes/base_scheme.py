from abc import ABC, abstractmethod
import logging
from fractions import Fraction
from typing import Any, Dict, Optional

import numpy as np

try:
    from cdc_shuffle.core.analysis import ShuffleAnalysis
    from cdc_shuffle.core.config_loader import ShuffleSettings
    from cdc_shuffle.core.instance import SystemInstance
    from cdc_shuffle.core.payloads import PayloadStore
    from cdc_shuffle.core.transcript import ShuffleTranscript
except ImportError:
    ShuffleAnalysis = Any  # type: ignore
    ShuffleSettings = Any  # type: ignore
    SystemInstance = Any  # type: ignore
    PayloadStore = Any  # type: ignore
    ShuffleTranscript = Any  # type: ignore


class BaseScheme(ABC):
    scheme_type_name: str = "BaseScheme"  # class variable identifying the scheme

    def __init__(self,
                 settings: Optional[ShuffleSettings] = None,
                 params: Optional[Dict[str, Any]] = None,
                 logger: Optional[logging.Logger] = None):
        self.settings = settings if settings is not None else ShuffleSettings()
        params_to_store = {name: spec["default"] for name, spec in self.get_default_params().items()}
        params_to_store.update(params or {})
        params_to_store['scheme_type_name'] = self.__class__.scheme_type_name
        self.params = params_to_store
        self.logger = logger if logger else logging.getLogger(f"cdc_shuffle.{self.__class__.__name__}")
        self.logger.debug(f"Scheme [{self.scheme_type_name}] initialized with params: {self.params}")

    @staticmethod
    @abstractmethod
    def get_default_params() -> dict:
        """
        Default parameters of the scheme. Keys are param names, values are dicts
        with 'type', 'default', 'desc' and optionally 'min', 'max'.
        """
        return {}

    @abstractmethod
    def analytic_load(self, inst: SystemInstance, analysis: Optional[ShuffleAnalysis] = None) -> Fraction:
        """Exact normalized load from the scheme's accounting, without encoding anything."""

    @abstractmethod
    def run(self, inst: SystemInstance, payloads: PayloadStore, rng: np.random.Generator,
            analysis: Optional[ShuffleAnalysis] = None) -> ShuffleTranscript:
        """Encodes and decodes every round; raises on any decode mismatch."""

    @abstractmethod
    def optimality(self, inst: SystemInstance, analysis: Optional[ShuffleAnalysis] = None) -> Dict[str, Any]:
        """{'optimal': bool, ...} from the scheme's sufficient optimality condition."""

    def get_param(self, param_name: str, default: Any = None) -> Any:
        return self.params.get(param_name, default)

    @staticmethod
    def _analysis(inst: SystemInstance, analysis: Optional[ShuffleAnalysis]) -> ShuffleAnalysis:
        return analysis if analysis is not None else ShuffleAnalysis(inst)
