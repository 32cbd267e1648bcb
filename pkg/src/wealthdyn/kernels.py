"""Kernel dispatch: compiled extension if available, numpy fallback otherwise."""

try:
    from wealthdyn._em import COMPILED, em_step
except ImportError:  # extension not built
    from wealthdyn._em_np import COMPILED, em_step

__all__ = ["em_step", "COMPILED"]
