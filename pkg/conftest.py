"""Pytest wiring: absltest test cases expect absl flags to be parsed, as absltest.main() does."""
from absl import flags


def pytest_configure(config):
    if not flags.FLAGS.is_parsed():
        flags.FLAGS.mark_as_parsed()
