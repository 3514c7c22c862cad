from .cli.Cli import main

main()
