import pytest


@pytest.fixture
def report(capsys):
    """Print a verdict line straight to the terminal, bypassing capture."""

    def emit(line: str) -> None:
        with capsys.disabled():
            print(f"\n{line}")

    return emit
