import os
import sys

# Oracle helpers live beside the tests, outside the package.
sys.path.insert(0, os.path.dirname(__file__))
