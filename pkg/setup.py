from setuptools import setup


def read_requirements(path="requirements.txt"):
    """Runtime requirements, then the ones listed under the "# Test-only" header"""
    runtime, test = [], []
    target = runtime
    with open(path) as f:
        for line in f:
            if line.strip().lower().startswith("# test-only"):
                target = test
                continue
            requirement = line.split("#")[0].strip()
            if requirement:
                target.append(requirement)
    return runtime, test


def main():
    requirements, test_requirements = read_requirements()
    setup(
        name="dominance-pruning",
        version="0.1.0",
        description="Lossless token pruning for late-interaction retrieval indexes via LP dominance tests",
        py_modules=[
            "corpus_io",
            "dominance",
            "lossless_verifier",
            "lp_feasibility",
            "main",
            "prune_analyzer",
            "pruning_errors",
            "regularization_losses",
            "scoring",
            "svd_reduction",
            "token_matrix",
            "token_pruner",
        ],
        install_requires=requirements,
        extras_require={"test": test_requirements},
        classifiers=[
            "Programming Language :: Python :: 3",
            "License :: OSI Approved :: MIT License",
            "Operating System :: OS Independent",
        ],
        python_requires=">=3.8",
        entry_points={
            "console_scripts": [
                "dpprune=main:main",
            ],
        },
    )


if __name__ == "__main__":
    main()
