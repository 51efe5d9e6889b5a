"""Command line: `garden` subcommands and their handlers."""
