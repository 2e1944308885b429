# -*- coding: utf-8 -*-

import setuptools

from copula_multiplier.version import MULTIPLIER_BOOTSTRAP_VERSION

with open('README.md', encoding='utf-8') as f:
    long_description = f.read()


setuptools.setup(
    name="copula-multiplier-bootstrap",

    version=MULTIPLIER_BOOTSTRAP_VERSION,

    description="Dependent multiplier bootstrap for the sequential empirical copula process",

    long_description=long_description,

    long_description_content_type='text/markdown',

    keywords="copula empirical process multiplier bootstrap change-point time series",

    license="MIT",

    packages=setuptools.find_packages(exclude=["tests", "tests.*"]),

    install_requires=[
        "numpy>=1.22",
        "scipy>=1.9",
        "pandas>=1.4",
        "statsmodels>=0.13",
    ],

    extras_require={
        "test": [
            "pytest>=7",
        ],
    },

    include_package_data=True,

    python_requires=">=3.9",

    entry_points={
        "console_scripts": [
            "copula-multiplier = copula_multiplier.cli:main"
        ]
    },
)
