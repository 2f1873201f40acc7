from lightcone_dirac.cli import main


if __name__ == "__main__":
    try:
        exit(main())
    except KeyboardInterrupt:
        print('\nExited without writing a manifest')
        exit(1)
