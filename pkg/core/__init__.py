"""
Estimation core: backbone factory, control-function pipeline, functionals,
baselines, copulas, benchmark orchestration and run storage.
"""
