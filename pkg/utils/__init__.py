"""
Utilities module for SourceChecker.

Contains the run logger, file helpers and the process pool.
"""
