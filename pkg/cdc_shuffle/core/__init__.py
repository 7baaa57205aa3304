# Makes 'core' a package
from .config_loader import ConfigManager, ShuffleSettings, load_log_level
from .logger_setup import setup_logger
from .instance import InstanceDescriptor, IVKey, SystemInstance, generate, validate
from .analysis import ShuffleAnalysis
from .payloads import PayloadStore
from .transcript import ShuffleTranscript
# shuffle_runner imports the scheme registry; import it from cdc_shuffle.core.shuffle_runner
