from .run_presets import OPTIMIZE_PRESETS, PRESETS, SCAN_PRESETS

__all__ = ["OPTIMIZE_PRESETS", "PRESETS", "SCAN_PRESETS"]
