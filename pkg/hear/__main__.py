from hear.cli import cli

cli()
