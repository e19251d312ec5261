import setuptools

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setuptools.setup(
    name="scikit-gpool",
    version="1.0.0",
    description="A Scikit Learn compatible graph classifier with geometric, sort and mixed global pooling",
    long_description=long_description,
    long_description_content_type="text/markdown",
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    install_requires=[
        "numpy>=1.22",
        "pandas>=1.5",
        "scikit-learn",
        "joblib",
        "setuptools",
        "scipy",
        "pytest",
        "tqdm",
    ],
    entry_points={
        "console_scripts": ["skgpool=skgpool.cli:main"],
    },
    package_dir={"": "src"},
    packages=setuptools.find_packages(where="src", exclude=["tests"]),
    python_requires=">=3.8"
)
