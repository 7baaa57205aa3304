# Makes 'oracles' a package
from .closed_forms import ThreeNodePartition, g_function, homogeneous_load, semi_homogeneous_load, three_node_load
from .brute_force import brute_force_min_load_tiny
