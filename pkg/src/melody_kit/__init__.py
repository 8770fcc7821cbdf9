"""Singing melody extraction toolkit.

z-CFP features (``cfp``), the burst-penalizing voicing loss
(``stability_loss``), decoding and median smoothing (``decode``), melody
metrics (``evaluate``) and the ``melody-kit`` command line (``cli``).
"""
__version__ = "0.1.0"
