import sys
import subprocess


def main():
    args = [sys.executable, '-m', 'pytest', 'tests']
    if '--slow' in sys.argv[1:]:
        args.append('--runslow')
    result = subprocess.run(args, capture_output=False)
    sys.exit(result.returncode)


if __name__ == "__main__":
    main()
