import json
import os
import tempfile
import unittest
from unittest import mock

import numpy as np

from src.ricci_ovals.config import (
    RunConfig,
    _bool,
    build_config,
    coerce_params,
    environment_defaults,
    normalize_key,
    read_config_file,
)
from src.ricci_ovals.exceptions import ConfigError, GridError
from src.ricci_ovals.geometry import curvatures, fixtures
from src.ricci_ovals.io import (
    dumps,
    read_profile,
    read_table,
    write_curvatures,
    write_json,
    write_profile,
    write_table,
)


class TestCoerceParams(unittest.TestCase):
    def test_defaults_are_filled_in(self):
        params = coerce_params("predict", {})
        self.assertEqual(params, {"t": (-1e6,)})

    def test_values_are_typed(self):
        params = coerce_params("barrier", {"a": "30,50", "with_correction": "false", "n": "401"})
        self.assertEqual(params["a"], (30.0, 50.0))
        self.assertIs(params["with_correction"], False)
        self.assertEqual(params["n"], 401)

    def test_alias(self):
        self.assertEqual(coerce_params("flow", {"n_sigma": "301"})["n"], 301)

    def test_unknown_key(self):
        with self.assertRaises(ConfigError):
            coerce_params("bryant", {"rho_min": 1.0})

    def test_failed_precondition(self):
        with self.assertRaises(ConfigError):
            coerce_params("bryant", {"rho_max": "5"})

    def test_unparsable_value(self):
        with self.assertRaises(ConfigError):
            coerce_params("bryant", {"tol": "small"})

    def test_unknown_command(self):
        with self.assertRaises(ConfigError):
            coerce_params("shrink", {})
        with self.assertRaises(ConfigError):
            RunConfig(command="shrink")

    def test_bool_parsing(self):
        self.assertTrue(_bool("Yes"))
        self.assertFalse(_bool("0"))
        with self.assertRaises(ValueError):
            _bool("maybe")

    def test_normalize_key(self):
        self.assertEqual(normalize_key(" Rho-Max "), "rho_max")


class TestBuildConfig(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, "bryant.env")
        with open(self.path, "w", encoding="utf-8") as f:
            f.write("RHO_MAX=60\nrho-cut=4\nOUTPUT_DIR=from_file\n")

    def tearDown(self):
        self.tmp.cleanup()

    def test_file_values(self):
        cfg = build_config("bryant", config_path=self.path)
        self.assertEqual(cfg.params["rho_max"], 60.0)
        self.assertEqual(cfg.params["rho_cut"], 4.0)
        self.assertEqual(cfg.output_dir, "from_file")

    def test_overrides_win(self):
        cfg = build_config("bryant", {"rho_max": "70", "tol": None}, self.path, "from_flag")
        self.assertEqual(cfg.params["rho_max"], 70.0)
        self.assertEqual(cfg.params["tol"], 1e-10)
        self.assertEqual(cfg.output_dir, "from_flag")
        self.assertEqual(cfg.provenance()["command"], "bryant")

    def test_missing_file(self):
        with self.assertRaises(ConfigError):
            read_config_file(os.path.join(self.tmp.name, "missing.env"))

    def test_environment_output_dir(self):
        with mock.patch.dict(os.environ, {"RICCI_OVALS_OUTPUT_DIR": "from_env"}):
            self.assertEqual(environment_defaults()["output_dir"], "from_env")
            self.assertEqual(build_config("predict").output_dir, "from_env")


class TestArtifacts(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def test_table_columns(self):
        path = write_table(os.path.join(self.tmp.name, "nested", "t.csv"), {"x": [0.1, 0.2], "y": np.array([1.0, 2.0])})
        frame = read_table(path, ("x", "y"))
        self.assertEqual(list(frame.columns), ["x", "y"])
        self.assertEqual(frame["x"].tolist(), [0.1, 0.2])
        with self.assertRaises(GridError):
            read_table(path, ("x", "z"))

    def test_profile_file(self):
        p = fixtures("sphere", 51, r=2.0)
        path = write_profile(os.path.join(self.tmp.name, "sphere.csv"), p)
        q = read_profile(path)
        np.testing.assert_array_equal(q.psi, p.psi)

    def test_curvature_file(self):
        p = fixtures("dumbbell", 201, neck=1.5, bulb=2.0)
        fields = curvatures(p)
        path = write_curvatures(os.path.join(self.tmp.name, "curvatures.csv"), p, fields)
        frame = read_table(path, ("s", "K0", "K1", "R", "Q"))
        self.assertEqual(list(frame.columns), ["s", "K0", "K1", "R", "Q"])
        np.testing.assert_array_equal(frame["s"].to_numpy(), p.s)
        for name in ("K0", "K1", "R", "Q"):
            np.testing.assert_array_equal(frame[name].to_numpy(), getattr(fields, name))

    def test_summary_document(self):
        path = write_json(os.path.join(self.tmp.name, "summary.json"), {"value": np.float64(1.5), "grid": np.arange(3)}, {"n": 3})
        with open(path, encoding="utf-8") as f:
            document = json.load(f)
        self.assertEqual(document["schema"], 1)
        self.assertEqual(document["config"], {"n": 3})
        self.assertEqual(document["value"], 1.5)
        self.assertEqual(document["grid"], [0, 1, 2])

    def test_dumps_is_sorted(self):
        text = dumps({"b": 1, "a": (1, 2)})
        self.assertLess(text.index('"a"'), text.index('"b"'))
        with self.assertRaises(TypeError):
            dumps({"x": object()})


if __name__ == "__main__":
    unittest.main()
