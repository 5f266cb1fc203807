#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""The setup script."""
import io

from setuptools import setup, find_packages

with open("README.rst") as readme_file:
    readme = readme_file.read()

with open("HISTORY.rst") as history_file:
    history = history_file.read()

# About dict to store version and package info
about = dict()
with io.open("norminflate/__version__.py", "r", encoding="utf-8") as f:
    exec(f.read(), about)

requirements = [
    "charset_normalizer",
    "matplotlib>=3.3",
    "networkx>=2.0",
    "numpy>=1.20",
    "pandas>=1.5",
    "scipy>=1.6",
]

setup_requirements = ["pytest-runner"]

test_requirements = ["black", "flake8", "hypothesis", "pytest"]

setup(
    name="norminflate",
    version=about["__version__"],
    description="Norminflate is a python library for numerical norm-inflation "
    "experiments on the 3D Boussinesq system.",
    long_description=readme + "\n\n" + history,
    long_description_content_type="text/x-rst",
    packages=find_packages(include=["norminflate"]),
    include_package_data=True,
    install_requires=requirements,
    license="MIT license",
    zip_safe=False,
    keywords="norminflate",
    classifiers=[
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Natural Language :: English",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    python_requires=">=3.8, <4",
    test_suite="tests",
    tests_require=test_requirements,
    setup_requires=setup_requirements,
    entry_points={"console_scripts": ["norminflate=norminflate.cli:main"]},
)
