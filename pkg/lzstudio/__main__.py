"""
Entry point for running LZS Studio as a module.
python -m lzstudio
"""

from .main import main

if __name__ == "__main__":
    main()
