"""
Setup script for Ricci Ovals.
"""

from setuptools import find_packages, setup

setup(
    name="ricci_ovals",
    version="0.1.0",
    description="Numerical laboratory for rotationally symmetric Ricci flow and ancient ovals on S3",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.9",
        "pandas>=2.1.0",
        "python-dotenv",
    ],
    extras_require={
        "dev": [
            "pytest>=6.0.0",
            "black>=20.8b1",
            "pylint>=2.6.0",
            "isort>=5.6.4",
        ],
    },
    entry_points={
        "console_scripts": [
            "ricci-ovals=ricci_ovals.cli:main",
        ],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
