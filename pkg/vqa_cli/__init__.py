"""Command-line surface: run configuration, settings, logging, locks and subcommands."""
