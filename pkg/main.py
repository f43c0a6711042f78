#!/usr/bin/env python3
"""
SourceChecker - Phase Equation Lab

Simulates phi_t + c tanh(cx/2) phi_x = phi_xx + phi_x^2, compares the runs
with the closed-form Cole-Hopf solution, splits them into a plateau family
plus a decaying remainder and checks the pointwise decay estimates.

Version: 1.0.0
"""

import multiprocessing
import sys

from cli.runner import main


if __name__ == "__main__":
    multiprocessing.freeze_support()
    sys.exit(main())
