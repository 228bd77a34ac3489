#!/usr/bin/env python
#
# Copyright (c) 2023 Gearscope Developers. All rights reserved.
#

import os

import setuptools


def read(fname):
    with open(os.path.join(os.path.dirname(__file__), fname), "r", encoding="utf-8") as fh:
        return fh.read()


setuptools.setup(
    name="gearscope",
    version=read("gearscope/__version__").strip(),
    description="Vibration condition monitoring for gearbox test rigs",
    license="MIT",
    long_description=read("README.md"),
    long_description_content_type="text/markdown",
    author="Gearscope Developers",
    keywords="vibration condition-monitoring gearbox wavelet scalogram arima",
    packages=setuptools.find_packages(exclude=("tests", "tests.*")),
    install_requires=read("requirements.txt"),
    include_package_data=True,
    package_data={"gearscope": ["__version__"]},
    python_requires=">=3.9",
    entry_points={
        'console_scripts': ['gearscope=gearscope.cli:main'],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Environment :: Console",
        "Intended Audience :: Science/Research",
        "Intended Audience :: Developers",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering",
        "Topic :: Scientific/Engineering :: Information Analysis",
    ]
)
