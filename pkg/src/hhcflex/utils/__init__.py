"""Input-validation helpers."""
from .validation import check_instance, check_mode, check_seed, check_solution

__all__ = ["check_instance", "check_mode", "check_seed", "check_solution"]
