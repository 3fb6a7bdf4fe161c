import unittest

import numpy as np

from . import configs


class LabTestCase(unittest.TestCase):

    def setUp(self) -> None:
        self.rng = np.random.default_rng([self.seed, sum(map(ord, self.id()))])
        return super().setUp()

    budget = configs.get_budget()
    seed = configs.get_seed()
