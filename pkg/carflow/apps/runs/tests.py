import csv
import hashlib
import json
import tempfile
from datetime import timedelta
from io import StringIO
from pathlib import Path
from unittest import mock

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings
from django.utils import timezone

from carflow.apps.core.params import VehicleClass

from .commands import COLLISION_ERROR, INPUT_ERROR, STABILITY_ERROR
from .manifest import MANIFEST_NAME, RunManifest
from .models import EmittedFile, RunStatus, SimulationRun
from .utils import fmt, record_failure, record_run, write_csv, write_text


def read_csv(path):
    with open(path, encoding="utf-8", newline="") as f:
        return list(csv.reader(f))


class TempDirMixin:
    def setUp(self):
        super().setUp()
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()
        super().tearDown()


class FormatTests(SimpleTestCase):
    def test_cells(self):
        self.assertEqual(fmt(None), "")
        self.assertEqual(fmt(True), "true")
        self.assertEqual(fmt(0.1 + 0.2), "0.3")
        self.assertEqual(fmt(1.0), "1")
        self.assertEqual(fmt(1e-12), "1e-12")
        self.assertEqual(fmt(VehicleClass.CACC), "cacc")
        self.assertEqual(fmt(7), "7")

    def test_exit_codes(self):
        self.assertEqual((INPUT_ERROR, STABILITY_ERROR, COLLISION_ERROR), (2, 3, 4))


class ManifestTests(TempDirMixin, SimpleTestCase):
    def test_csv_is_registered_with_checksum(self):
        manifest = RunManifest(command="micro", output_dir=str(self.tmp))
        path = write_csv(self.tmp / "rows.csv", ["a", "b"], [[1, 0.5], [None, True]], manifest)
        self.assertEqual(path.read_text(encoding="utf-8"), "a,b\n1,0.5\n,true\n")
        entry = manifest.files[0]
        self.assertEqual(entry.name, "rows.csv")
        self.assertEqual(entry.sha256, hashlib.sha256(path.read_bytes()).hexdigest())
        self.assertEqual(entry.size, path.stat().st_size)

    def test_rewritten_file_replaces_entry(self):
        manifest = RunManifest(command="micro", output_dir=str(self.tmp))
        write_text(self.tmp / "throughput.txt", "25\n", manifest)
        write_text(self.tmp / "throughput.txt", "26\n", manifest)
        self.assertEqual(len(manifest.files), 1)
        self.assertEqual(manifest.files[0].size, 3)

    def test_manifest_document(self):
        manifest = RunManifest(command="macro", output_dir=str(self.tmp), seed=4, details={"rows": 60})
        write_text(self.tmp / "out.txt", "x\n", manifest)
        document = json.loads(manifest.write().read_text(encoding="utf-8"))
        self.assertEqual(document["command"], "macro")
        self.assertEqual(document["seed"], 4)
        self.assertEqual(document["details"], {"rows": 60})
        self.assertEqual([entry["name"] for entry in document["files"]], ["out.txt"])


class RecordRunTests(TempDirMixin, TestCase):
    def manifest(self):
        manifest = RunManifest(command="micro", output_dir=str(self.tmp), seed=3, details={"throughput": 26})
        write_text(self.tmp / "throughput.txt", "26\n", manifest)
        return manifest

    def test_records_run_and_files(self):
        run = record_run(self.manifest())
        self.assertEqual(run.status, RunStatus.OK)
        self.assertEqual(run.details, {"throughput": 26})
        self.assertEqual(list(run.files.values_list("name", flat=True)), ["throughput.txt"])

    @override_settings(CARFLOW_RECORD_RUNS=False)
    def test_recording_disabled(self):
        self.assertIsNone(record_run(self.manifest()))
        self.assertFalse(SimulationRun.objects.exists())

    def test_database_error_is_logged(self):
        with mock.patch("carflow.apps.runs.utils.SimulationRun") as model:
            model.objects.create.side_effect = RuntimeError("database is locked")
            with self.assertLogs("carflow.apps.runs.utils", level="ERROR"):
                self.assertIsNone(record_run(self.manifest()))

    def test_failure(self):
        run = record_failure(self.manifest(), "boom")
        self.assertEqual(run.status, RunStatus.FAILED)
        self.assertEqual(run.details["error"], "boom")


class CleanupRunsTests(TestCase):
    def setUp(self):
        now = timezone.now()
        SimulationRun.objects.create(command="micro", output_dir="a", created=now - timedelta(days=40))
        SimulationRun.objects.create(
            command="macro", output_dir="b", created=now - timedelta(days=10), status=RunStatus.FAILED
        )
        recent = SimulationRun.objects.create(command="micro", output_dir="c", created=now)
        EmittedFile.objects.create(run=recent, name="throughput.txt", sha256="0" * 64, size=3)

    def call(self, *args):
        call_command("cleanup_runs", *args, stdout=StringIO())

    def test_requires_a_criterion(self):
        with self.assertRaises(CommandError):
            self.call("--force")
        with self.assertRaises(CommandError):
            self.call("--days", "30", "--keep-recent", "1", "--force")

    def test_days(self):
        self.call("--days", "30", "--force")
        self.assertEqual(sorted(SimulationRun.objects.values_list("output_dir", flat=True)), ["b", "c"])

    def test_dry_run(self):
        self.call("--days", "30", "--dry-run")
        self.assertEqual(SimulationRun.objects.count(), 3)

    def test_keep_recent(self):
        self.call("--keep-recent", "1", "--force")
        self.assertEqual(list(SimulationRun.objects.values_list("output_dir", flat=True)), ["c"])
        self.assertEqual(EmittedFile.objects.count(), 1)

    def test_failed_only(self):
        self.call("--days", "5", "--failed-only", "--force")
        self.assertEqual(sorted(SimulationRun.objects.values_list("output_dir", flat=True)), ["a", "c"])

    def test_command_filter(self):
        self.call("--keep-recent", "0", "--command", "macro", "--force")
        self.assertEqual(sorted(SimulationRun.objects.values_list("command", flat=True)), ["micro", "micro"])


@override_settings(CARFLOW_THREADS=1)
class CommandTests(TempDirMixin, TestCase):
    def call(self, name, *args, **options):
        stdout = StringIO()
        call_command(name, *args, stdout=stdout, **options)
        return stdout.getvalue()

    def scenario_file(self, text):
        path = self.tmp / "scenario.yaml"
        path.write_text(text, encoding="utf-8")
        return str(path)

    def test_micro_default(self):
        out = self.tmp / "micro"
        self.call("micro", "--out", str(out), "--stride", "20", "--vehicles", "2")
        manifest = json.loads((out / MANIFEST_NAME).read_text(encoding="utf-8"))
        self.assertEqual(
            sorted(entry["name"] for entry in manifest["files"]),
            ["detector.csv", "throughput.txt", "trajectories.csv"],
        )
        self.assertEqual(len(read_csv(out / "trajectories.csv")), 1 + 2 + 60 * 2)
        count = int((out / "throughput.txt").read_text(encoding="utf-8"))
        self.assertEqual(count, len(read_csv(out / "detector.csv")) - 1)
        run = SimulationRun.objects.get()
        self.assertEqual((run.command, run.status, run.details["throughput"]), ("micro", RunStatus.OK, count))
        self.assertEqual(run.files.count(), 3)

    def test_micro_window(self):
        full = self.tmp / "full"
        half = self.tmp / "half"
        self.call("micro", "--out", str(full), "--vehicles", "0")
        self.call("micro", "--out", str(half), "--vehicles", "0", "--window", "30")
        self.assertLess(
            int((half / "throughput.txt").read_text(encoding="utf-8")),
            int((full / "throughput.txt").read_text(encoding="utf-8")),
        )

    def test_micro_with_platooning(self):
        out = self.tmp / "micro"
        self.call(
            "micro", "--out", str(out), "--tech", "cacc", "--penetration", "1", "--platooning", "on",
            "--vehicles", "0",
        )
        rows = read_csv(out / "platoon_events.csv")
        self.assertEqual(rows[0], ["time", "kind", "leader_id", "member_id", "size", "detail"])
        self.assertIn("join", [row[1] for row in rows[1:]])

    def test_missing_scenario_file(self):
        path = str(self.tmp / "missing.yaml")
        with self.assertRaises(CommandError) as cm:
            self.call("micro", "--scenario", path, "--out", str(self.tmp))
        self.assertEqual(cm.exception.returncode, INPUT_ERROR)
        self.assertIn(path, str(cm.exception))

    def test_unknown_scenario_key(self):
        path = self.scenario_file("queue: {sise: 40}\n")
        with self.assertRaises(CommandError) as cm:
            self.call("micro", "--scenario", path, "--out", str(self.tmp))
        self.assertEqual(cm.exception.returncode, INPUT_ERROR)
        self.assertIn("queue.sise", str(cm.exception))
        self.assertEqual(SimulationRun.objects.get().status, RunStatus.FAILED)

    def test_penetration_out_of_range(self):
        with self.assertRaises(CommandError) as cm:
            self.call("micro", "--penetration", "1.5", "--out", str(self.tmp))
        self.assertEqual(cm.exception.returncode, INPUT_ERROR)

    def test_macro_contours(self):
        out = self.tmp / "macro"
        stdout = self.call("macro", "--out", str(out), "--stride", "20")
        flow = read_csv(out / "flow_contour.csv")
        self.assertEqual(len(flow), 61)
        self.assertEqual(len(flow[0]), 241)
        self.assertEqual(len(read_csv(out / "speed_contour.csv")), 61)
        self.assertIn("Conservation", stdout)
        self.assertLessEqual(SimulationRun.objects.get().details["conservation_error"], 1e-9)

    def test_macro_cfl_violation(self):
        path = self.scenario_file("dt: 0.5\n")
        with self.assertRaises(CommandError) as cm:
            self.call("macro", "--scenario", path, "--out", str(self.tmp))
        self.assertEqual(cm.exception.returncode, STABILITY_ERROR)
        self.assertIn("dt * v_max = 10 m > min dx = 5 m", str(cm.exception))

    def test_sweep_is_byte_reproducible(self):
        args = ["--model", "gipps", "--tech", "cacc", "--penetration", "0.5", "--runs", "2", "--seed", "3",
                "--window", "20"]
        first, second = self.tmp / "first", self.tmp / "second"
        self.call("sweep", "--out", str(first), *args)
        self.call("sweep", "--out", str(second), *args)
        self.assertEqual(len(read_csv(first / "sweep_runs.csv")), 1 + 2 * (1 + 2))
        self.assertEqual(
            (first / "sweep_medians.csv").read_bytes(), (second / "sweep_medians.csv").read_bytes()
        )
        medians = read_csv(first / "sweep_medians.csv")
        self.assertEqual(len(medians), 1 + 4)
        status = medians[0].index("status")
        self.assertEqual({row[status] for row in medians[1:]}, {"ok"})

    def test_sweep_table(self):
        out = self.tmp / "table"
        self.call("sweep", "--out", str(out), "--table", "--model", "iidm", "--amax", "1.5")
        rows = read_csv(out / "throughput_table.csv")
        self.assertEqual(rows[0], ["a_max", "experiment", "model", "simulated", "published", "deviation"])
        self.assertEqual([(row[1], row[4]) for row in rows[1:]], [("free_road", "23"), ("red_light", "21")])

    def test_equilibria(self):
        out = self.tmp / "equilibria"
        stdout = self.call("equilibria", "--out", str(out))
        self.assertIn("theta_e = 2.5 s, f_e = 1440 veh/h", stdout)
        self.assertIn("theta_e = 1.2 s, f_e = 3000 veh/h", stdout)
        curves = read_csv(out / "equilibrium_curves.csv")
        cacc_full = [row for row in curves[1:] if row[0] == "cacc" and row[1] == "1"]
        self.assertEqual(cacc_full[0][4], "37.5")

    def test_platoon_compare(self):
        out = self.tmp / "platoon"
        stdout = self.call("platoon", "--out", str(out), "--compare", "--vehicles", "0")
        self.assertTrue((out / "platoons.csv").exists())
        self.assertTrue((out / "platoon_events.csv").exists())
        self.assertIn("ACC throughput without platooning", stdout)
        details = SimulationRun.objects.get().details
        self.assertIn("acc_throughput", details)
        self.assertGreater(details["events"], 0)
