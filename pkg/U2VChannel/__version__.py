PACKAGE_VERSION: str = "1.0.0"
