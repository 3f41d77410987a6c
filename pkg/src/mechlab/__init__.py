"""Revenue of simple and optimal mechanisms for independent discrete items."""
