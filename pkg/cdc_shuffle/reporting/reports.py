import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence

try:
    from cdc_shuffle.core.algebra import format_rational
    from cdc_shuffle.core.analysis import ShuffleAnalysis
    from cdc_shuffle.core.config_loader import ShuffleSettings
    from cdc_shuffle.core.exceptions import CDCError, InstanceValidationError
    from cdc_shuffle.core.instance import SystemInstance, validate
    from cdc_shuffle.core.shuffle_runner import ShuffleSimulator
    from cdc_shuffle.core.transcript import ShuffleTranscript
    from cdc_shuffle.schemes.scheme_engine import SchemeEngine
except ImportError:
    import sys, os  # type: ignore
    sys.path.append(os.path.join(os.path.dirname(__file__), '../..'))  # type: ignore
    from cdc_shuffle.core.algebra import format_rational  # type: ignore
    from cdc_shuffle.core.analysis import ShuffleAnalysis  # type: ignore
    from cdc_shuffle.core.config_loader import ShuffleSettings  # type: ignore
    from cdc_shuffle.core.exceptions import CDCError, InstanceValidationError  # type: ignore
    from cdc_shuffle.core.instance import SystemInstance, validate  # type: ignore
    from cdc_shuffle.core.shuffle_runner import ShuffleSimulator  # type: ignore
    from cdc_shuffle.core.transcript import ShuffleTranscript  # type: ignore
    from cdc_shuffle.schemes.scheme_engine import SchemeEngine  # type: ignore

logger = logging.getLogger('cdc_shuffle.reports')

KNOWN_SCHEMES = ('uncoded', 'osct', 'fsct')
OPTIMALITY_FLAGS = {'osct': 'theorem2_optimal', 'fsct': 'theorem4_optimal'}


def render_load(value: Fraction, QN: int) -> Dict[str, Any]:
    """Reduced rational, the same value over QN when that is a whole count, and a display decimal."""
    out: Dict[str, Any] = {"rational": format_rational(value), "decimal": round(float(value), 6)}
    units = value * QN
    if units.denominator == 1:
        out["over_QN"] = f"{units.numerator}/{QN}"
    return out


@dataclass
class LoadReport:
    K: int
    N: int
    Q: int
    loads: Dict[str, Fraction] = field(default_factory=dict)
    optimality: Dict[str, bool] = field(default_factory=dict)
    decode_verified: Optional[bool] = None
    retries: Dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        QN = self.Q * self.N
        out: Dict[str, Any] = {
            "instance": {"K": self.K, "N": self.N, "Q": self.Q},
            "loads": {name: render_load(value, QN) for name, value in self.loads.items()},
        }
        out.update(self.optimality)
        out["decode_verified"] = self.decode_verified
        if self.retries:
            out["retries"] = dict(self.retries)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)


def parse_schemes(text: Optional[str]) -> List[str]:
    if not text:
        return list(KNOWN_SCHEMES)
    names = [s.strip().lower() for s in text.split(',') if s.strip()]
    unknown = [s for s in names if s not in KNOWN_SCHEMES]
    if unknown:
        raise ValueError(f"Unknown schemes {unknown}; choose from {list(KNOWN_SCHEMES)}")
    return names


def write_transcripts(transcripts: Iterable[ShuffleTranscript], path: str) -> bool:
    """One JSONL file, transcripts in order."""
    written = [t.to_jsonl(path, append=i > 0) for i, t in enumerate(transcripts)]
    if not written:
        logger.warning(f"No transcripts to write to {path}")
    return bool(written) and all(written)


def build_load_report(inst: SystemInstance,
                      schemes: Sequence[str] = KNOWN_SCHEMES,
                      settings: Optional[ShuffleSettings] = None,
                      verify: bool = True,
                      transcript_path: Optional[str] = None) -> LoadReport:
    """
    Loads of the requested schemes plus the lower bound. With verify, every
    scheme is run end to end and a decode failure raises the scheme's CDCError.
    """
    settings = settings if settings is not None else ShuffleSettings()
    report = validate(inst)
    if not report.ok:
        raise InstanceValidationError(report.violations)

    analysis = ShuffleAnalysis(inst)
    result = LoadReport(inst.K, inst.N, inst.Q)
    result.loads["lower_bound"] = analysis.lower_bound()
    if 'uncoded' in schemes:
        result.loads["uncoded"] = analysis.uncoded_load()

    engine = SchemeEngine(settings)
    transcripts: List[ShuffleTranscript] = []
    for name in (s for s in KNOWN_SCHEMES if s in schemes and s != 'uncoded'):
        if verify or transcript_path:
            simulator = ShuffleSimulator(inst, name, settings, analysis=analysis, engine=engine)
            metrics = simulator.run(verify=verify)
            if metrics is None:
                raise simulator.error if simulator.error else CDCError(f"{name} simulation failed")
            result.loads[name] = metrics["load"]
            result.retries[name] = metrics["retries"]
            transcripts.append(simulator.transcript)
        scheme = engine.get_scheme(name)
        if name not in result.loads:
            result.loads[name] = scheme.analytic_load(inst, analysis)
        result.optimality[OPTIMALITY_FLAGS[name]] = bool(scheme.optimality(inst, analysis)["optimal"])

    if any(s != 'uncoded' for s in schemes):
        result.decode_verified = verify
    if transcript_path:
        write_transcripts(transcripts, transcript_path)
    return result
