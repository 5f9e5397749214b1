"""
Services package for LZS Studio
Flux-qubit models, Floquet and master-equation solvers, the rotating-wave oracle and sweep orchestration.
"""
