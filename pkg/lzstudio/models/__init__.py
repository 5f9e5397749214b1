"""
Data models for LZS Studio
Device parameters, driven models, Floquet/master-equation results, sweeps and run configuration.
"""
