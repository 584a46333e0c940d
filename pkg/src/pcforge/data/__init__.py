"""Bundled example model, dataset, and pipeline config.

Regenerate with ``python3 -m pcforge.modelgen``; see
:func:`pcforge.modelgen.make_demo_assets`.
"""
