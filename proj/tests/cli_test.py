"""End-to-end checks of the avdoa command line: python cli_test.py <path-to-avdoa>."""

import csv
import filecmp
import os
import subprocess
import sys
import tempfile
import unittest

AVDOA = None


def run(*args):
    return subprocess.run([AVDOA, *map(str, args)], capture_output=True, text=True)


class Pipeline(unittest.TestCase):
    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.TemporaryDirectory()
        cls.root = cls.tmp.name
        cls.dataset = os.path.join(cls.root, "dataset")
        cls.features = os.path.join(cls.root, "features")
        cls.model = os.path.join(cls.root, "model")
        steps = [
            ("simulate", "--frames", 120, "--p-two", 0.3, "--visibility", 0.5, "--seed", 4, "--out", cls.dataset),
            ("features", cls.dataset, "--snr", 10, "--fdsp", 30, "--seed", 4, "--out", cls.features),
            ("train", cls.features, "--model", "avaw", "--epochs", 2, "--batch", 32, "--widths", "16,16,16",
             "--seed", 4, "--out", cls.model),
        ]
        for step in steps:
            r = run(*step)
            if r.returncode != 0:
                raise RuntimeError(f"{step[0]} failed ({r.returncode}): {r.stderr}")

    @classmethod
    def tearDownClass(cls):
        cls.tmp.cleanup()

    def out(self, name):
        return os.path.join(self.root, name)

    def test_simulate_writes_dataset(self):
        for name in ("manifest.jsonl", "audio.wav", "detections.jsonl", "array.txt", "camera.txt"):
            self.assertTrue(os.path.isfile(os.path.join(self.dataset, name)), name)
        with open(os.path.join(self.dataset, "manifest.jsonl")) as f:
            self.assertEqual(sum(1 for _ in f), 121)

    def test_features_are_deterministic_across_thread_counts(self):
        a, b = self.out("feat_a"), self.out("feat_b")
        for out, threads in ((a, 1), (b, 3)):
            r = run("features", self.dataset, "--snr", 10, "--fdsp", 30, "--seed", 4, "--threads", threads,
                    "--out", out)
            self.assertEqual(r.returncode, 0, r.stderr)
        for name in ("gcc.doaf", "visual.doaf", "labels.jsonl"):
            self.assertTrue(filecmp.cmp(os.path.join(a, name), os.path.join(b, name), shallow=False), name)
            self.assertTrue(filecmp.cmp(os.path.join(a, name), os.path.join(self.features, name), shallow=False))

    def test_train_outputs(self):
        for name in ("model.ckpt", "loss.csv", "train_config.txt"):
            self.assertTrue(os.path.isfile(os.path.join(self.model, name)), name)
        with open(os.path.join(self.model, "loss.csv")) as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], ["epoch", "loss"])
        self.assertEqual(len(rows), 3)

    def test_eval_summary(self):
        out = self.out("eval")
        r = run("eval", os.path.join(self.model, "model.ckpt"), self.features, "--out", out)
        self.assertEqual(r.returncode, 0, r.stderr)
        with open(os.path.join(out, "summary.csv")) as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], ["n1_mae", "n1_acc", "n2_mae", "n2_acc", "overall_mae", "overall_acc"])
        overall_mae = float(rows[1][4])
        self.assertGreaterEqual(overall_mae, 0.0)
        self.assertLessEqual(overall_mae, 180.0)
        with open(os.path.join(out, "results.jsonl")) as f:
            self.assertEqual(sum(1 for _ in f), 24)

    def test_robustness_grid(self):
        out = self.out("grid")
        r = run("robustness", os.path.join(self.model, "model.ckpt"), self.dataset, "--snr-levels", "0,clean",
                "--fdsp-levels", "0,50", "--seed", 4, "--out", out)
        self.assertEqual(r.returncode, 0, r.stderr)
        with open(os.path.join(out, "grid.csv")) as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], ["snr_db", "fdsp_0", "fdsp_50"])
        self.assertEqual([row[0] for row in rows[1:]], ["0", "clean"])
        self.assertTrue(os.path.isfile(os.path.join(out, "mae_vs_snr.svg")))

    def test_baseline(self):
        out = self.out("baseline")
        r = run("baseline", self.dataset, "--out", out)
        self.assertEqual(r.returncode, 0, r.stderr)
        with open(os.path.join(out, "summary.csv")) as f:
            rows = list(csv.reader(f))
        self.assertLess(float(rows[1][4]), 10.0)

    def test_validation_errors_exit_2_without_output(self):
        cases = [
            ("simulate", "--frames", 0),
            ("simulate", "--p-two", 1.5),
            ("features", self.dataset, "--fdsp", 150),
            ("train", self.features, "--model", "transformer"),
            ("train", self.features, "--epochs", 0),
        ]
        for i, case in enumerate(cases):
            out = self.out(f"bad_{i}")
            r = run(*case, "--out", out)
            self.assertEqual(r.returncode, 2, f"{case}: {r.stderr}")
            self.assertFalse(os.path.exists(out), case)

    def test_missing_inputs_exit_4(self):
        out = self.out("missing")
        r = run("features", self.out("no_such_dataset"), "--out", out)
        self.assertEqual(r.returncode, 4, r.stderr)
        self.assertFalse(os.path.exists(out))

    def test_corrupt_checkpoint_exits_4(self):
        bad = self.out("bad.ckpt")
        with open(bad, "wb") as f:
            f.write(b"not a checkpoint at all")
        out = self.out("bad_eval")
        r = run("eval", bad, self.features, "--out", out)
        self.assertEqual(r.returncode, 4, r.stderr)
        self.assertFalse(os.path.exists(out))

    def test_unknown_subcommand_is_a_usage_error(self):
        self.assertEqual(run("frobnicate").returncode, 2)


if __name__ == "__main__":
    AVDOA = os.path.abspath(sys.argv.pop(1))
    unittest.main(verbosity=2)
