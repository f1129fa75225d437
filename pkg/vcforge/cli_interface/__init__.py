"""
This package contains modules for the console interface.
"""
