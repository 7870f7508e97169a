from django.db import models
from django.utils import timezone


class RunStatus(models.TextChoices):
    OK = "ok", "Ok"
    FAILED = "failed", "Failed"


class SimulationRun(models.Model):
    """One finished management command run"""

    command = models.CharField(max_length=32)
    scenario_path = models.CharField(max_length=1024, blank=True)
    seed = models.BigIntegerField(default=0)
    output_dir = models.CharField(max_length=1024)
    status = models.CharField(max_length=10, choices=RunStatus.choices, default=RunStatus.OK)
    created = models.DateTimeField(default=timezone.now)

    # Throughput, warning count, conservation error ...
    details = models.JSONField(default=dict, blank=True)

    class Meta:
        ordering = ["-created"]
        indexes = [
            models.Index(fields=["created"], name="runs_simula_created_4f1a2b_idx"),
            models.Index(fields=["command", "created"], name="runs_simula_command_9c3d7e_idx"),
        ]

    def __str__(self):
        return f"{self.command} ({self.get_status_display()}) at {self.created}"


class EmittedFile(models.Model):
    """Output file of a run with its checksum"""

    run = models.ForeignKey(SimulationRun, on_delete=models.CASCADE, related_name="files")
    name = models.CharField(max_length=255)
    sha256 = models.CharField(max_length=64)
    size = models.BigIntegerField()

    class Meta:
        ordering = ["name"]
        unique_together = ["run", "name"]

    def __str__(self):
        return f"{self.name} ({self.size} bytes)"
