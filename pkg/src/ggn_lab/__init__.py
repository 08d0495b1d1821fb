"""GI/GI/n queue simulation lab and queue-length bound engine."""
__version__ = "0.1.0"
