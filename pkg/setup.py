from setuptools import setup, find_packages

setup(
    name="tsepi",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    install_requires=[
        "numpy>=1.20",
        "scipy",
        "torch>=1.13",
        "soundfile",
        "tqdm",
        "pillow",
        "pyroomacoustics>=0.7",
    ],
    extras_require={
        "test": ["pytest"],
    },
    python_requires=">=3.9",
    entry_points={
        "console_scripts": [
            "tsepi=tsepi.cli:main",
        ],
    },
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Topic :: Multimedia :: Sound/Audio :: Analysis",
    ],
    description="Pitch-informed target sound extraction with a learnable Gammatone encoder",
    keywords="audio, source separation, pitch, gammatone, film",
    include_package_data=True,
    package_data={
        "tsepi": ["README.md", "*/README.md"]
    },
)
