"""
Utilities package for LZS Studio
"""
