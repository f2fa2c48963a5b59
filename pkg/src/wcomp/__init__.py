"""Classification of weighted composition operators on discrete weighted sup spaces."""

__version__ = "0.1.0"
