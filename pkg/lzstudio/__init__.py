"""
LZS Studio - Floquet-Born-Markov simulation of LZS interferometry in a driven flux qubit
"""

__version__ = "1.0.0"
