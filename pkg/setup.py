import setuptools

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

# Optional dependencies
extras = {
    "dotenv": ["python-dotenv>=1.1.1"],
    "png": ["Pillow>=10.0"],
    "test": ["pytest>=8.0"],
}

# "all" combines everything
extras["all"] = sorted({req for reqs in extras.values() for req in reqs})

setuptools.setup(
    name="lfqtok",
    version="0.1.0",
    description="lfqtok – Lookup-free quantization video tokenizer: causal 3D encoder/decoder, "
                "entropy-regularized binary codes and a fixed-width token bitstream.",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=["tests", "tests.*"]),
    include_package_data=True,
    license="MIT",
    classifiers=[
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3 :: Only",
        "Programming Language :: Python :: 3.11",
    ],
    python_requires=">=3.10",
    install_requires=[
        "numpy>=1.26",
        "einops>=0.7",
        "pydantic>=2.5",
        "PyYAML>=6.0",
    ],
    extras_require=extras,
    entry_points={"console_scripts": ["lfqtok=lfqtok.cli:main"]},
)
