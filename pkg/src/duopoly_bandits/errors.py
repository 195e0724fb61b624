class InvalidConfig(ValueError):
    """Raised for configurations the simulator cannot run."""
