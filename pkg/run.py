from hear.cli import cli

# Console entry point: `python run.py <command> ...`
if __name__ == '__main__':
    cli()
