from setuptools import setup, find_packages

setup(
    name="fixtrack",
    version="0.1.0",
    description="Fixed-time tracking of barrier-relaxed, CLF-constrained optimal controls",
    packages=find_packages(exclude=["examples", "examples.*"]),
    package_data={"fixtrack.core.built_ins": ["configs/*.yaml"]},
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.8",
        "pandas>=1.5.0",
        "openpyxl>=3.0.0",
        "PyYAML>=6.0",
        "tqdm>=4.60.0",
    ],
    extras_require={
        "monitoring": ["psutil>=5.9.0"],
        "test": ["pytest>=7.0", "pytest-mock>=3.0"],
    },
    entry_points={
        "console_scripts": [
            "fixtrack=fixtrack.ui.cli:main",
        ],
    },
)
