from .cli import cli


def main():
    """Entry point for the chewspec command"""
    cli()


if __name__ == "__main__":
    main()
