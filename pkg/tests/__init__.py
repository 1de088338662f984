# Empty file to mark tests as a Python package
