"""Run only the acceptance criteria and show their summary lines."""
import sys

import pytest

if __name__ == "__main__":
    sys.exit(pytest.main(["-q", "-rN", "tests/test_acceptance.py", *sys.argv[1:]]))
