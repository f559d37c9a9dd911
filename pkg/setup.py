"""
adadkrr: adaptive distributed kernel ridge regression over simulated data silos.
:license: MIT
"""
from setuptools import setup

setup()
