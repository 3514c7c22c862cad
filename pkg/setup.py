#!/usr/bin/env python3

from setuptools import setup, find_packages
import pathlib
here = pathlib.Path(__file__).parent.resolve()

setup(
    name="dualmink",
    version="0.1.0",
    description="Generalized dual Minkowski problem: polytope solver and verification lab",
    long_description=(here / "README.md").read_text(encoding="utf-8"),
    long_description_content_type="text/markdown",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Programming Language :: Python :: 3 :: Only",
    ],
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    python_requires=">=3.10, <4",
    install_requires=["numpy", "scipy", "rich"],
    extras_require={'test': ['pytest', 'hypothesis']},
    entry_points={'console_scripts': ['dualmink = dualmink.cli.Cli:main']},
)
