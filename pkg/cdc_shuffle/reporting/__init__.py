# Makes 'reporting' a package
from .reports import LoadReport, build_load_report
from .sweep import SweepConfig, run_sweep
from .goldens import run_goldens
