#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""The setup script."""

from setuptools import find_packages, setup

with open("README.rst") as readme_file:
    readme = readme_file.read()

with open("HISTORY.rst") as history_file:
    history = history_file.read()

#: Common requirements
requirements = [
    "Click>=7.0,<8.2",
    "click-log",
    "numpy>=1.20",
    "scipy>=1.6",
    "pandas>=1.5",
    "PyYAML>=5.1",
]

tests_requirements = ["pytest", "hypothesis"]

setup(
    name="gyrocal",
    # bumpversion v0.5.3 doesn't handle version string in double quotes
    # correctly so prevent Black to format it:
    # fmt: off
    version='0.1.0',
    # fmt: on
    description=(
        "Gyroscope error simulation, Allan variance noise identification, "
        "least-squares calibration and learned bias estimation."
    ),
    long_description=readme + "\n\n" + history,
    author="gyrocal developers",
    packages=find_packages(include=["gyrocal"]),
    entry_points={"console_scripts": ["gyrocal=gyrocal.cli:main"]},
    include_package_data=True,
    install_requires=requirements,
    tests_require=tests_requirements,
    extras_require={
        "tests": tests_requirements,
    },  # noqa: E231
    python_requires=">=3.8",
    license="MIT license",
    zip_safe=False,
    keywords="gyroscope,imu,calibration,allan-variance,bias",
    classifiers=[
        "Development Status :: 2 - Pre-Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Natural Language :: English",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering",
    ],
    test_suite="tests",
)
