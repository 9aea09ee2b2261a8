"""Registry plugin used by the CLI tests."""
from qpke.core import Adversary


def register(registry):
    registry.register_adversary("always-one", lambda ctx: Adversary(lambda view: 1, name="always-one"),
                                "answers 1 whatever it sees")
