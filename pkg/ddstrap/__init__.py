"""ddstrap: doubly-dressed-state near-surface traps for rubidium-87."""

__version__ = "0.1.0"
