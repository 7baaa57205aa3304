# Makes 'schemes' a package
from .base_scheme import BaseScheme
from .scheme_engine import SchemeEngine

# Specific scheme implementations
from .osct import OsctScheme
from .fsct import FsctScheme
