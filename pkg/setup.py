import setuptools

# Build command
# rm -r dist ; python setup.py sdist

manifest: dict = {
    "name": "U2VChannel",
    "license": "MIT",
    "version": "1.0.0"
}

if __name__ == '__main__':
    with open("README.md", "r", encoding="utf-8") as fh:
        long_description = fh.read()

    setuptools.setup(
        name=manifest["name"],
        packages=setuptools.find_packages(exclude=["tests", "tests.*", "scripts"]),
        package_data={"U2VChannel": ["resources/scenarios/*.json", "resources/models/*.json"]},
        version=manifest["version"],
        license=manifest["license"],
        description="Machine-learning UAV-to-vehicle mmWave channel simulator",
        long_description=long_description,
        long_description_content_type="text/markdown",
        keywords=["uav", "mmwave", "channel model", "ray tracing", "gan", "simulation"],
        python_requires=">=3.8",
        entry_points={
            "console_scripts": [
                "u2vchannel=U2VChannel.client.cli:main"
            ]
        },
        extras_require={
            "dev": [
                "pytest>=7.0",
            ]
        },
        install_requires=[
            "numpy>=1.22",
            "scipy>=1.8",
            "pandas>=1.5",  # CSV tables (lineterminator keyword)
            "pyee>=9.0.4",  # Event emission
            "mashumaro>=3.5",  # Scenario, model and manifest documents
        ],
        classifiers=[
            "Development Status :: 4 - Beta",
            "Intended Audience :: Science/Research",
            "Topic :: Scientific/Engineering",
            "License :: OSI Approved :: MIT License",
            "Natural Language :: English",
            "Programming Language :: Python :: 3.8",
            "Programming Language :: Python :: 3.9",
            "Programming Language :: Python :: 3.10",
            "Programming Language :: Python :: 3.11",
        ]
    )
