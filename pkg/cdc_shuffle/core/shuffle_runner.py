import dataclasses
import logging
from fractions import Fraction
from typing import Any, Dict, Optional

import numpy as np

try:
    from cdc_shuffle.core.algebra import format_rational, get_field
    from cdc_shuffle.core.analysis import ShuffleAnalysis
    from cdc_shuffle.core.config_loader import ShuffleSettings
    from cdc_shuffle.core.exceptions import CDCError, InstanceValidationError
    from cdc_shuffle.core.instance import SystemInstance, validate
    from cdc_shuffle.core.payloads import PayloadStore
    from cdc_shuffle.core.transcript import ShuffleTranscript
    from cdc_shuffle.schemes.scheme_engine import SchemeEngine
except ImportError:
    import sys, os  # type: ignore
    sys.path.append(os.path.join(os.path.dirname(__file__), '../..'))  # type: ignore
    from cdc_shuffle.core.algebra import format_rational, get_field  # type: ignore
    from cdc_shuffle.core.analysis import ShuffleAnalysis  # type: ignore
    from cdc_shuffle.core.config_loader import ShuffleSettings  # type: ignore
    from cdc_shuffle.core.exceptions import CDCError, InstanceValidationError  # type: ignore
    from cdc_shuffle.core.instance import SystemInstance, validate  # type: ignore
    from cdc_shuffle.core.payloads import PayloadStore  # type: ignore
    from cdc_shuffle.core.transcript import ShuffleTranscript  # type: ignore
    from cdc_shuffle.schemes.scheme_engine import SchemeEngine  # type: ignore


class ShuffleSimulator:
    """
    Runs one registered scheme end to end on one instance: analytic load,
    encoding, decoding at every requester against the payload store, and the
    transcript-measured load.
    """

    def __init__(self,
                 instance: SystemInstance,
                 scheme_name: str,
                 settings: Optional[ShuffleSettings] = None,
                 analysis: Optional[ShuffleAnalysis] = None,
                 engine: Optional[SchemeEngine] = None):
        self.instance = instance
        self.scheme_name = scheme_name
        self.settings = settings if settings is not None else ShuffleSettings()
        self.analysis = analysis
        self.engine = engine if engine is not None else SchemeEngine(self.settings)
        self.logger = logging.getLogger('cdc_shuffle.ShuffleSimulator')

        self.transcript: Optional[ShuffleTranscript] = None
        self.error: Optional[CDCError] = None
        self.metrics: Dict[str, Any] = {}

    def run(self, verify: Optional[bool] = None) -> Optional[Dict[str, Any]]:
        self.error = None
        settings = self.settings if verify is None else dataclasses.replace(self.settings, verify=verify)
        self.logger.info(f"Running {self.scheme_name} on K={self.instance.K}, N={self.instance.N}, Q={self.instance.Q} "
                         f"(verify={settings.verify}, field=GF(2^{settings.field_bits}), seed={settings.seed})")

        report = validate(self.instance)
        if not report.ok:
            self.error = InstanceValidationError(report.violations)
            self.logger.error(f"Instance rejected: {self.error}")
            return None

        self.engine.settings = settings
        scheme = self.engine.load_scheme(self.scheme_name)
        if scheme is None:
            self.error = CDCError(f"Unknown scheme '{self.scheme_name}'")
            return None

        try:
            if self.analysis is None:
                self.analysis = ShuffleAnalysis(self.instance)
            load = scheme.analytic_load(self.instance, self.analysis)
            payloads = PayloadStore(get_field(settings.field_bits), seed=settings.seed)
            rng = np.random.default_rng(settings.seed)
            self.transcript = scheme.run(self.instance, payloads, rng, self.analysis)
        except CDCError as e:
            self.error = e
            self.logger.error(f"{self.scheme_name} failed: {e}", exc_info=True)
            return None

        measured = self.transcript.measured_load(self.instance.Q, self.instance.N)
        if measured != load:
            self.error = CDCError(f"{self.scheme_name} transcript load {measured} differs from analytic load {load}")
            self.logger.error(str(self.error))
            return None

        self.metrics = self._calculate_and_log_metrics(load, measured, settings.verify)
        return self.metrics

    def _calculate_and_log_metrics(self, load: Fraction, measured: Fraction, verified: bool) -> Dict[str, Any]:
        metrics = {
            "load": load,
            "measured_load": measured,
            "lower_bound": self.analysis.lower_bound(),
            "uncoded": self.analysis.uncoded_load(),
            "rounds": len(self.analysis.active_rounds),
            "blocks": len(self.transcript),
            "retries": self.transcript.retries,
            "decode_verified": verified,
        }
        self.logger.info(f"--- {self.scheme_name.upper()} Shuffle Metrics ---")
        for key, value in metrics.items():
            shown = f"{format_rational(value)} ({float(value):.6f})" if isinstance(value, Fraction) else value
            self.logger.info(f"{key.replace('_', ' ').title()}: {shown}")
        return metrics
