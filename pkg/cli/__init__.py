"""
Command line workflows for SourceChecker.

One module per command: simulate, decompose, verify and convergence.
"""
