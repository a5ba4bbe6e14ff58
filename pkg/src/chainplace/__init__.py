"""chainplace: column-generation placement and routing of VNF service chains."""

__version__ = "0.1.0"
