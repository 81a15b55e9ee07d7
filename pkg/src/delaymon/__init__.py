"""Runtime verification of timed properties over delayed event streams."""

__version__ = "0.1.0"
