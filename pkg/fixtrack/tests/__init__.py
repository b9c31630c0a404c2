# fixtrack/tests/__init__.py

"""
Test suite for fixtrack.

Running Tests:
    # Run all tests
    pytest

    # Skip full-horizon integrations
    pytest -m "not slow"

    # Run with coverage
    pytest --cov=fixtrack

    # Run tests in parallel
    pytest -n auto
"""
