"""
    External interface to use the interface programatically
    In this situation the environment should also be changed programatically
"""
from functools import partial

from . import configuration
from .scripts.holograph_script import Runner


def _runner(mode, *args):
    runner = Runner(interactive=True)
    return getattr(runner, mode)(*args)


run = partial(_runner, "run")
sheaf_check = partial(_runner, "sheaf_check")
bench = partial(_runner, "bench")
report = partial(_runner, "report")

environment = configuration.environment
