import os

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
EXAMPLE_BUNDLE = os.path.join(REPO_ROOT, "bundles", "example")
EXAMPLE_LOG = os.path.join(EXAMPLE_BUNDLE, "session.log")
