from cli.dispatch import cli_dispatch

__all__ = ["cli_dispatch"]
