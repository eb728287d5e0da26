# This file makes the 'tests' directory a Python package.
# It allows the unittest discovery mechanism to find the test modules within it.
