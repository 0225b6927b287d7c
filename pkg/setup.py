#!/usr/bin/python
# -*- coding: utf-8 -*-
"""Install sfrac module using setuptools."""

from setuptools import setup

import io
import os


with open(os.path.join("sfrac", "VERSION")) as version_file:
    __version__ = version_file.read().strip()

with io.open('README.rst', encoding="utf8") as file:
    long_description = file.read()

setup(
    name='sfrac',
    version=__version__,
    packages=['sfrac'],
    package_data={'sfrac': ['VERSION']},
    include_package_data=True,
    description='S-resolvent operators and fractional powers of quaternionic '
                'differential operators with variable coefficients',
    long_description=long_description,
    license="gpl v3",
    python_requires='>=3.8',
    install_requires=["numpy>=1.20", "scipy>=1.12"],
    entry_points={"console_scripts": ["sfrac = sfrac.cli:main"]},
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Education",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: GNU General Public License v3 (GPLv3)",
        "Natural Language :: English",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Topic :: Software Development :: Libraries :: Python Modules",
    ],
)
