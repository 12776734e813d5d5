"""CLI, configuration and reporting layer."""
