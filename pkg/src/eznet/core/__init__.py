"""Community structure tests built from edge, vee and triangle frequencies."""

__version__ = "1.0.0"
