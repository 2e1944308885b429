MULTIPLIER_BOOTSTRAP_VERSION = "0.3.0"
