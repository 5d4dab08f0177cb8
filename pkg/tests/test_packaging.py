#!/usr/bin/env python3

import importlib.util
import os
import unittest

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def load_setup_script():
    spec = importlib.util.spec_from_file_location("setup_script", os.path.join(ROOT, "setup.py"))
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


class TestRequirements(unittest.TestCase):

    def test_test_only_packages_are_an_extra(self):
        runtime, test = load_setup_script().read_requirements(os.path.join(ROOT, "requirements.txt"))
        names = [r.split(">")[0].split("=")[0].strip() for r in runtime]
        self.assertEqual(names, ["numpy", "scipy", "matplotlib", "tqdm"])
        self.assertEqual(len(test), 1)
        self.assertTrue(test[0].startswith("hypothesis"))


if __name__ == "__main__":
    unittest.main()
